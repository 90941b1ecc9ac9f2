//! Attractor solver for the termination game on arenas where every atom has a
//! deterministic party.
//!
//! The attractor grows from `{nf}`. An atom of Player 1 joins as soon as one
//! of its outcomes sends every deterministic party into the current set; an
//! atom of Player 2 joins once all of its outcomes do. The computation keeps,
//! for every `(atom, outcome)`, the number of deterministic parties whose
//! target is still outside, so each triple is visited a constant number of
//! times.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{AgentId, Arena, AtomId, Marking, Negotiation, Outcome, Player};
use crate::semantics::{
    self, classify, enabled_atoms, Play, PlayEnd, SemanticsError, SoundnessReport, Step,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttractorError {
    #[error("atoms without a deterministic party: {}", .0.join(", "))]
    NotType2(Vec<String>),
    #[error("the negotiation is not sound:\n{}", .0)]
    Unsound(String, Box<SoundnessReport>),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("position vectors are undefined at the final marking")]
    FinalMarking,
}

/// Whether the soundness precondition is checked or taken on trust.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Soundness {
    Verify { max_markings: usize },
    Assume,
}

impl Default for Soundness {
    fn default() -> Self {
        Soundness::Verify {
            max_markings: semantics::DEFAULT_MAX_MARKINGS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttractorResult {
    /// Smallest `k` with the atom in `A_k`, `None` outside the attractor.
    pub index: Vec<Option<u32>>,
    /// Outcome played by Player 1 at each of its atoms.
    pub strategy1: Vec<Option<Outcome>>,
    /// Outcome played by Player 2 at each of its atoms.
    pub strategy2: Vec<Option<Outcome>>,
    pub deterministic: Vec<bool>,
}

impl AttractorResult {
    pub fn contains(&self, atom: AtomId) -> bool {
        self.index[atom.index()].is_some()
    }

    pub fn members(&self) -> Vec<AtomId> {
        (0..self.index.len())
            .filter(|&i| self.index[i].is_some())
            .map(|i| AtomId(i as u32))
            .collect()
    }

    /// The outcome the owner of `atom` plays there.
    pub fn choice(&self, atom: AtomId) -> Outcome {
        self.strategy1[atom.index()]
            .or(self.strategy2[atom.index()])
            .unwrap_or(Outcome(0))
    }

    pub fn deterministic_agents(&self) -> Vec<AgentId> {
        (0..self.deterministic.len())
            .filter(|&i| self.deterministic[i])
            .map(|i| AgentId(i as u32))
            .collect()
    }
}

fn require_type2(negotiation: &Negotiation, det: &[bool]) -> Result<(), AttractorError> {
    let missing: Vec<String> = negotiation
        .atoms()
        .iter()
        .filter(|atom| !atom.parties.iter().any(|a| det[a.index()]))
        .map(|atom| atom.name.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(AttractorError::NotType2(missing))
    }
}

/// Attractor of `nf`.
pub fn compute_attractor(arena: &Arena) -> Result<AttractorResult, AttractorError> {
    let nf = arena.negotiation().final_atom();
    compute_attractor_seeded(arena, &[nf], &[])
}

/// Attractor grown from `seed` instead of `{nf}`. Atoms in `blocked` never
/// join, whatever their outcomes do.
pub fn compute_attractor_seeded(
    arena: &Arena,
    seed: &[AtomId],
    blocked: &[AtomId],
) -> Result<AttractorResult, AttractorError> {
    let neg = arena.negotiation();
    let det = semantics::deterministic_flags(neg);
    require_type2(neg, &det)?;

    let atoms = neg.atom_count();
    // counters[base[n] + r]: deterministic parties of n whose target under r is outside.
    let mut base = Vec::with_capacity(atoms + 1);
    let mut total = 0usize;
    for n in neg.atom_ids() {
        base.push(total);
        total += neg.atom(n).outcomes.len();
    }
    base.push(total);
    let mut counters = vec![0u32; total];
    // rev[m]: counter slots waiting for m.
    let mut rev_start = vec![0usize; atoms + 1];
    let mut entries: Vec<(u32, u32)> = Vec::new();
    let nf = neg.final_atom();
    for n in neg.atom_ids() {
        if n == nf {
            continue;
        }
        let atom = neg.atom(n);
        for (slot, &a) in atom.parties.iter().enumerate() {
            if !det[a.index()] {
                continue;
            }
            for r in 0..atom.outcomes.len() {
                let t = neg.targets_at(n, slot, Outcome(r as u32))[0];
                counters[base[n.index()] + r] += 1;
                entries.push((t.0, (base[n.index()] + r) as u32));
                rev_start[t.index()] += 1;
            }
        }
    }
    // Bucket the entries by target atom.
    let mut acc = 0;
    for s in rev_start.iter_mut() {
        let c = *s;
        *s = acc;
        acc += c;
    }
    let mut fill = rev_start.clone();
    let mut rev = vec![0u32; entries.len()];
    for &(t, slot) in &entries {
        rev[fill[t as usize]] = slot;
        fill[t as usize] += 1;
    }
    drop(entries);
    // Map a counter slot back to its atom.
    let mut slot_atom = vec![0u32; total];
    for n in 0..atoms {
        slot_atom[base[n]..base[n + 1]].fill(n as u32);
    }

    let mut is_blocked = vec![false; atoms];
    for b in blocked {
        is_blocked[b.index()] = true;
    }
    let mut index: Vec<Option<u32>> = vec![None; atoms];
    let mut zeros = vec![0u32; atoms];
    let mut strategy1: Vec<Option<Outcome>> = vec![None; atoms];
    let mut frontier: Vec<AtomId> = Vec::new();
    for &s in seed {
        if index[s.index()].is_none() && !is_blocked[s.index()] {
            index[s.index()] = Some(0);
            frontier.push(s);
        }
    }
    let mut level = 0u32;
    while !frontier.is_empty() {
        level += 1;
        let mut candidates: Vec<u32> = Vec::new();
        for m in &frontier {
            for &slot in &rev[rev_start[m.index()]..rev_start[m.index() + 1]] {
                let slot = slot as usize;
                counters[slot] -= 1;
                if counters[slot] == 0 {
                    let n = slot_atom[slot];
                    zeros[n as usize] += 1;
                    candidates.push(n);
                }
            }
        }
        let mut next = Vec::new();
        for n in candidates {
            let ni = n as usize;
            if index[ni].is_some() || is_blocked[ni] {
                continue;
            }
            let id = AtomId(n);
            let joins = match arena.owner(id) {
                Player::One => true,
                Player::Two => zeros[ni] as usize == base[ni + 1] - base[ni],
            };
            if joins {
                index[ni] = Some(level);
                if arena.owner(id) == Player::One {
                    let r = (base[ni]..base[ni + 1])
                        .position(|s| counters[s] == 0)
                        .expect("a zero counter triggered the join");
                    strategy1[ni] = Some(Outcome(r as u32));
                }
                next.push(id);
            }
        }
        frontier = next;
    }

    let mut strategy2: Vec<Option<Outcome>> = vec![None; atoms];
    for n in neg.atom_ids() {
        let ni = n.index();
        match arena.owner(n) {
            Player::One => {
                strategy1[ni].get_or_insert(Outcome(0));
            }
            Player::Two => {
                let r = if index[ni].is_some() || n == nf {
                    0
                } else {
                    (base[ni]..base[ni + 1])
                        .position(|s| counters[s] > 0)
                        .unwrap_or(0)
                };
                strategy2[ni] = Some(Outcome(r as u32));
            }
        }
    }
    Ok(AttractorResult {
        index,
        strategy1,
        strategy2,
        deterministic: det,
    })
}

/// Type 2 first since it is cheap, then soundness unless assumed.
pub(crate) fn check_preconditions(negotiation: &Negotiation, soundness: Soundness) -> Result<(), AttractorError> {
    require_type2(negotiation, &semantics::deterministic_flags(negotiation))?;
    if let Soundness::Verify { max_markings } = soundness {
        let report = semantics::check_soundness_with_limit(negotiation, max_markings)?;
        if !report.sound {
            return Err(AttractorError::Unsound(report.render(negotiation), Box::new(report)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationVerdict {
    pub player1_wins: bool,
    pub attractor: AttractorResult,
}

/// Player 1 wins the termination game iff `n0` is in the attractor.
pub fn decide_termination(arena: &Arena, soundness: Soundness) -> Result<TerminationVerdict, AttractorError> {
    check_preconditions(arena.negotiation(), soundness)?;
    let attractor = compute_attractor(arena)?;
    Ok(TerminationVerdict {
        player1_wins: attractor.contains(arena.negotiation().initial()),
        attractor,
    })
}

/// Attractor positions of the deterministic agents at a marking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionVector {
    pub agents: Vec<AgentId>,
    /// `None` stands for an agent outside the attractor.
    pub positions: Vec<Option<u32>>,
}

impl PositionVector {
    /// `self ≺ other`: pointwise `≤` and strictly smaller somewhere.
    pub fn precedes(&self, other: &PositionVector) -> bool {
        let key = |p: Option<u32>| p.map_or(u64::MAX, u64::from);
        let mut strict = false;
        for (&a, &b) in self.positions.iter().zip(&other.positions) {
            if key(a) > key(b) {
                return false;
            }
            strict |= key(a) < key(b);
        }
        strict
    }
}

impl fmt::Display for PositionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .positions
            .iter()
            .map(|p| p.map_or("inf".to_string(), |k| k.to_string()))
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Position vector at a non-final marking. A deterministic agent is ready
/// for a single atom at every reachable marking; if it is ready for several,
/// the largest index among them is used.
pub fn position_vector(
    arena: &Arena,
    attractor: &AttractorResult,
    marking: &Marking,
) -> Result<PositionVector, AttractorError> {
    if marking.is_final() {
        return Err(AttractorError::FinalMarking);
    }
    let agents = attractor.deterministic_agents();
    let positions = agents
        .iter()
        .map(|&a| {
            let mut pos = Some(0);
            let mut any = false;
            for n in marking.ready(a) {
                any = true;
                pos = match (pos, attractor.index[n.index()]) {
                    (Some(p), Some(k)) => Some(p.max(k)),
                    _ => None,
                };
            }
            if any {
                pos
            } else {
                None
            }
        })
        .collect();
    let _ = arena;
    Ok(PositionVector { agents, positions })
}

/// Plays the positional strategies with a Scheduler that always fires the
/// enabled atom of smallest index, until the final atom occurs, a deadlock
/// is hit, or a marking repeats.
pub fn play_positional(
    negotiation: &Negotiation,
    choice: impl Fn(AtomId) -> Outcome,
    max_rounds: usize,
) -> Play {
    let mut marking = Marking::initial(negotiation);
    let mut seen: HashMap<Marking, usize> = HashMap::new();
    let mut rounds = Vec::new();
    loop {
        if marking.is_final() {
            return Play {
                rounds,
                end: PlayEnd::Final,
            };
        }
        if let Some(&start) = seen.get(&marking) {
            return Play {
                rounds,
                end: PlayEnd::Cycle { start },
            };
        }
        if rounds.len() >= max_rounds {
            return Play {
                rounds,
                end: PlayEnd::Truncated,
            };
        }
        seen.insert(marking.clone(), rounds.len());
        let Some(&n) = enabled_atoms(negotiation, &marking).first() else {
            return Play {
                rounds,
                end: PlayEnd::Deadlock,
            };
        };
        let step = Step::new(n, choice(n));
        marking = semantics::occur(negotiation, &marking, step).expect("enabled step");
        rounds.push(vec![step]);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyViolation {
    Deadlock { prefix: Vec<Step> },
    Cycle { prefix: Vec<Step> },
    NotDecreasing { prefix: Vec<Step>, before: String, after: String },
    ReachesFinal { prefix: Vec<Step> },
    TooManyMarkings { limit: usize },
}

impl StrategyViolation {
    pub fn render(&self, negotiation: &Negotiation) -> String {
        let f = |p: &Vec<Step>| semantics::format_steps(negotiation, p);
        match self {
            StrategyViolation::Deadlock { prefix } => format!("deadlock after {}", f(prefix)),
            StrategyViolation::Cycle { prefix } => {
                format!("Player 1 strategy admits a cycle: {}", f(prefix))
            }
            StrategyViolation::NotDecreasing {
                prefix,
                before,
                after,
            } => format!("position vector {after} does not precede {before} after {}", f(prefix)),
            StrategyViolation::ReachesFinal { prefix } => {
                format!("Player 2 strategy lets the play terminate: {}", f(prefix))
            }
            StrategyViolation::TooManyMarkings { limit } => {
                format!("restricted state space exceeds {limit} markings")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyCheck {
    pub player1_wins: bool,
    /// Markings reachable when the winner follows its strategy.
    pub explored: usize,
    /// Longest play under the winning strategy (Player 1 only).
    pub longest_play: Option<usize>,
    /// A play with both strategies and the smallest-index Scheduler.
    pub witness: Play,
}

/// Checks the attractor strategies on the marking graph restricted to the
/// winner's choices. Scheduler and loser range over all their options, one
/// atom at a time.
///
/// If `n0` is in the attractor, every play under Player 1's strategy must end
/// with `nf`, and every step must strictly decrease the position vector. If
/// not, no play under Player 2's strategy may reach the final marking.
pub fn validate_strategies(
    arena: &Arena,
    attractor: &AttractorResult,
    max_markings: usize,
) -> Result<StrategyCheck, StrategyViolation> {
    let neg = arena.negotiation();
    let p1 = attractor.contains(neg.initial());
    let allowed = |n: AtomId| -> Vec<Outcome> {
        match (arena.owner(n), p1) {
            (Player::One, true) => vec![attractor.strategy1[n.index()].unwrap()],
            (Player::Two, false) => vec![attractor.strategy2[n.index()].unwrap()],
            _ => neg.outcomes(n).collect(),
        }
    };

    let x0 = Marking::initial(neg);
    let mut ids: HashMap<Marking, u32> = HashMap::new();
    let mut markings = vec![x0.clone()];
    let mut parent: Vec<Option<(u32, Step)>> = vec![None];
    let mut succ: Vec<Vec<u32>> = Vec::new();
    ids.insert(x0, 0);
    let path = |parent: &Vec<Option<(u32, Step)>>, mut v: u32| {
        let mut steps = Vec::new();
        while let Some((p, s)) = parent[v as usize] {
            steps.push(s);
            v = p;
        }
        steps.reverse();
        steps
    };
    let mut queue = VecDeque::from([0u32]);
    while let Some(v) = queue.pop_front() {
        let x = markings[v as usize].clone();
        let mut out = Vec::new();
        if x.is_final() {
            if !p1 {
                return Err(StrategyViolation::ReachesFinal {
                    prefix: path(&parent, v),
                });
            }
        } else {
            let enabled = enabled_atoms(neg, &x);
            if enabled.is_empty() {
                return Err(StrategyViolation::Deadlock {
                    prefix: path(&parent, v),
                });
            }
            let before = if p1 {
                Some(position_vector(arena, attractor, &x).expect("non-final"))
            } else {
                None
            };
            for n in enabled {
                for r in allowed(n) {
                    let step = Step::new(n, r);
                    let y = semantics::occur(neg, &x, step).expect("enabled step");
                    if let Some(before) = &before {
                        if !y.is_final() {
                            let after = position_vector(arena, attractor, &y).expect("non-final");
                            if !after.precedes(before) {
                                let mut prefix = path(&parent, v);
                                prefix.push(step);
                                return Err(StrategyViolation::NotDecreasing {
                                    prefix,
                                    before: before.to_string(),
                                    after: after.to_string(),
                                });
                            }
                        }
                    }
                    let id = match ids.get(&y) {
                        Some(&id) => id,
                        None => {
                            let id = markings.len() as u32;
                            if markings.len() >= max_markings {
                                return Err(StrategyViolation::TooManyMarkings { limit: max_markings });
                            }
                            ids.insert(y.clone(), id);
                            markings.push(y);
                            parent.push(Some((v, step)));
                            queue.push_back(id);
                            id
                        }
                    };
                    out.push(id);
                }
            }
        }
        succ.push(out);
    }

    let mut longest_play = None;
    if p1 {
        // Markings are numbered in BFS order, so succ is indexed by id.
        longest_play = Some(longest_path(&succ).map_err(|v| StrategyViolation::Cycle {
            prefix: path(&parent, v),
        })?);
    }
    let witness = play_positional(neg, |n| attractor.choice(n), markings.len() + 1);
    Ok(StrategyCheck {
        player1_wins: p1,
        explored: markings.len(),
        longest_play,
        witness,
    })
}

/// Longest path from node 0 in a graph, or a node on a cycle.
fn longest_path(succ: &[Vec<u32>]) -> Result<usize, u32> {
    // Iterative DFS with colours; post-order gives a reverse topological order.
    let n = succ.len();
    let mut colour = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
    colour[0] = 1;
    while let Some(&mut (v, ref mut i)) = stack.last_mut() {
        if let Some(&w) = succ[v as usize].get(*i) {
            *i += 1;
            match colour[w as usize] {
                0 => {
                    colour[w as usize] = 1;
                    stack.push((w, 0));
                }
                1 => return Err(w),
                _ => {}
            }
        } else {
            colour[v as usize] = 2;
            order.push(v);
            stack.pop();
        }
    }
    let mut depth = vec![0usize; n];
    for &v in &order {
        depth[v as usize] = succ[v as usize]
            .iter()
            .map(|&w| depth[w as usize] + 1)
            .max()
            .unwrap_or(0);
    }
    Ok(depth[0])
}

/// Atoms enabled at reachable markings where every deterministic agent is
/// ready only for `nf`. In a sound arena where every atom has a
/// deterministic party this is always `{nf}` alone.
pub fn enabled_when_deterministic_agents_finish(
    negotiation: &Negotiation,
    max_markings: usize,
) -> Result<HashSet<Vec<AtomId>>, SemanticsError> {
    let det = classify(negotiation).deterministic_agents;
    let nf = negotiation.final_atom();
    let space = semantics::explore(negotiation, max_markings)?;
    let mut out = HashSet::new();
    for (i, x) in space.markings.iter().enumerate() {
        if !x.is_final() && det.iter().all(|&a| x.single_ready(a) == Some(nf)) {
            out.insert(space.enabled[i].clone());
        }
    }
    Ok(out)
}
