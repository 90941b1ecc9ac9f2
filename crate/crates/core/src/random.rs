//! Seeded generators for test instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AgentId, Arena, AtomId, Goals, NegotiationBuilder, Outcome};

#[derive(Debug, Clone, Copy)]
pub struct RandomParams {
    pub max_agents: usize,
    /// Including the initial and the final atom.
    pub max_atoms: usize,
    pub max_outcomes: usize,
    /// Probability that an agent is nondeterministic.
    pub nondeterminism: f64,
    /// Probability that an atom belongs to Player 1.
    pub player1_share: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_agents: 6,
            max_atoms: 8,
            max_outcomes: 3,
            nondeterminism: 0.3,
            player1_share: 0.5,
        }
    }
}

/// A random arena with a random partition of atoms.
///
/// Each outcome picks a destination atom, forward in atom order half of the
/// time, and the parties of that destination move there together. Other
/// parties move to some atom they take part in. Coordinated moves keep a
/// useful fraction of cyclic instances sound. Nondeterministic agents get
/// target sets of size one or two.
pub fn random_arena(seed: u64, params: RandomParams) -> Arena {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = rng.gen_range(1..=params.max_agents.max(1));
    let atoms = rng.gen_range(2..=params.max_atoms.max(2));
    let mut b = NegotiationBuilder::new(&format!("random-{seed}"));
    let ids: Vec<AgentId> = (0..agents)
        .map(|i| b.add_agent(&format!("a{i}")).expect("fresh agent"))
        .collect();
    let nondet: Vec<bool> = (0..agents).map(|_| rng.gen_bool(params.nondeterminism)).collect();

    let outcome_names = ["x", "y", "z", "w", "v"];
    let mut atom_ids = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let (name, parties, outs) = if i == 0 {
            ("n0".to_string(), ids.clone(), rng.gen_range(1..=params.max_outcomes))
        } else if i == atoms - 1 {
            ("nf".to_string(), ids.clone(), 1)
        } else {
            let size = rng.gen_range(1..=agents);
            let mut p = ids.clone();
            p.shuffle(&mut rng);
            p.truncate(size);
            (format!("n{i}"), p, rng.gen_range(1..=params.max_outcomes))
        };
        let outs = &outcome_names[..outs.min(outcome_names.len())];
        atom_ids.push(b.add_atom(&name, &parties, outs).expect("fresh atom"));
    }
    let n0 = atom_ids[0];
    let nf = atom_ids[atoms - 1];
    b.set_initial(n0).unwrap();
    b.set_final(nf).unwrap();

    // Atoms each agent takes part in, excluding n0.
    let mut member_of: Vec<Vec<AtomId>> = vec![Vec::new(); agents];
    for &n in &atom_ids[1..] {
        for &a in &b.atom(n).parties.clone() {
            member_of[a.index()].push(n);
        }
    }
    for &n in &atom_ids[..atoms - 1] {
        let atom = b.atom(n).clone();
        for r in 0..atom.outcomes.len() {
            // One destination per outcome; its parties all go there, so that
            // loops are coordinated rather than deadlocking.
            let later: Vec<AtomId> = atom_ids.iter().copied().filter(|&m| m > n).collect();
            let dest = if rng.gen_bool(0.5) {
                *later.choose(&mut rng).unwrap()
            } else {
                *atom_ids[1..].choose(&mut rng).unwrap()
            };
            for &a in &atom.parties {
                let choices = &member_of[a.index()];
                let forward: Vec<AtomId> = choices.iter().copied().filter(|&m| m > n).collect();
                let pick = |rng: &mut ChaCha8Rng| -> AtomId {
                    if !forward.is_empty() && rng.gen_bool(0.8) {
                        *forward.choose(rng).unwrap()
                    } else {
                        *choices.choose(rng).unwrap()
                    }
                };
                let first = if b.atom(dest).has_party(a) { dest } else { pick(&mut rng) };
                let mut targets = vec![first];
                if nondet[a.index()] && rng.gen_bool(0.6) {
                    // Half of the time the extra target is nf, which keeps
                    // cyclic arenas sound more often.
                    let extra = if rng.gen_bool(0.5) { nf } else { pick(&mut rng) };
                    if !targets.contains(&extra) {
                        targets.push(extra);
                    }
                }
                b.add_arc(n, a, Outcome(r as u32), &targets).unwrap();
            }
        }
    }
    let negotiation = b.build().expect("complete negotiation");
    let player1: Vec<AtomId> = negotiation
        .atom_ids()
        .filter(|_| rng.gen_bool(params.player1_share))
        .collect();
    Arena::with_player1(negotiation, &player1)
}

/// Random goals: each agent is constrained with probability one half, to a
/// random subset of its outcomes that lead to `nf`.
pub fn random_goals(arena: &Arena, seed: u64) -> Goals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let neg = arena.negotiation();
    let nf = neg.final_atom();
    let mut goals = Goals::unconstrained(neg.agent_count());
    for a in neg.agents() {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let pairs = neg
            .triples()
            .filter(|&(n, b, _, t)| b == a && n != nf && t.contains(&nf))
            .map(|(n, _, r, _)| (n, r))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        goals.set(a, pairs);
    }
    goals
}

/// A sound deterministic arena shaped as a chain `n0 n1 ... nf` in which
/// every atom has all agents as parties. Outcome 0 moves everybody forward;
/// other outcomes move everybody forward or back by a random amount. Atoms
/// alternate between the players.
pub fn chain_arena(inner_atoms: usize, outcomes: usize, agents: usize, seed: u64) -> Arena {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NegotiationBuilder::new(&format!("chain-{inner_atoms}x{outcomes}x{agents}"));
    let ids: Vec<AgentId> = (0..agents)
        .map(|i| b.add_agent(&format!("a{i}")).unwrap())
        .collect();
    let names: Vec<String> = (0..outcomes).map(|r| format!("r{r}")).collect();
    let total = inner_atoms + 2;
    let mut atoms = Vec::with_capacity(total);
    for i in 0..total {
        let name = if i == total - 1 { "nf".to_string() } else { format!("n{i}") };
        let outs: &[String] = if i == total - 1 { &names[..1] } else { &names };
        atoms.push(b.add_atom(&name, &ids, outs).unwrap());
    }
    b.set_initial(atoms[0]).unwrap();
    b.set_final(atoms[total - 1]).unwrap();
    for i in 0..total - 1 {
        for r in 0..outcomes {
            let j = if r == 0 {
                i + 1
            } else {
                // Anywhere except back to n0.
                rng.gen_range(1..total)
            };
            for &a in &ids {
                b.add_arc(atoms[i], a, Outcome(r as u32), &[atoms[j]]).unwrap();
            }
        }
    }
    let neg = b.build().unwrap();
    let player1: Vec<AtomId> = atoms.iter().copied().filter(|n| n.0 % 2 == 1).collect();
    Arena::with_player1(neg, &player1)
}
