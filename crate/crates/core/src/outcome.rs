//! Reduction of the concluding-outcome game to an attractor computation.
//!
//! Every arc of a goal-constrained agent that leads to `nf` is redirected to
//! one of two new single-party atoms, `good_a` when the outcome is in the
//! agent's goal set and `bad_a` otherwise. Both have one outcome, `done`,
//! leading to `nf`. The attractor is then grown from the good atoms (and
//! `nf`, which unconstrained agents still reach directly) while bad atoms are
//! kept out.

use thiserror::Error;

use crate::attractor::{self, AttractorError, AttractorResult, Soundness};
use crate::model::{AgentId, Arena, AtomId, ModelError, Outcome};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("the arena declares no goals")]
    MissingGoals,
    #[error("goal ({atom},{outcome}) of agent '{agent}' does not lead to the final atom")]
    GoalNotFinal {
        agent: String,
        atom: String,
        outcome: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
}

/// Where the transform put things.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformMap {
    /// `good_a` per agent, absent for unconstrained agents or when unused.
    pub good: Vec<Option<AtomId>>,
    pub bad: Vec<Option<AtomId>>,
    /// `(n, a, r, replacement)` for every redirected arc.
    pub redirected: Vec<(AtomId, AgentId, Outcome, AtomId)>,
}

impl TransformMap {
    pub fn good_atoms(&self) -> Vec<AtomId> {
        self.good.iter().flatten().copied().collect()
    }

    pub fn bad_atoms(&self) -> Vec<AtomId> {
        self.bad.iter().flatten().copied().collect()
    }
}

fn fresh(builder: &crate::model::NegotiationBuilder, base: &str) -> String {
    let mut name = base.to_string();
    while builder.has_atom_name(&name) {
        name.push('_');
    }
    name
}

/// Adds good and bad atoms and redirects `nf`-arcs of constrained agents.
///
/// Atoms are only created when some arc is redirected to them. The result
/// keeps the original `N1` and puts the new atoms in `N2`; it has no goals.
pub fn transform(arena: &Arena) -> Result<(Arena, TransformMap), TransformError> {
    let goals = arena.goals().ok_or(TransformError::MissingGoals)?;
    let neg = arena.negotiation();
    let nf = neg.final_atom();
    for (a, pairs) in goals.iter() {
        for &(n, r) in pairs {
            if !neg.targets(n, a, r).is_some_and(|t| t.contains(&nf)) {
                return Err(TransformError::GoalNotFinal {
                    agent: neg.agent_name(a).to_string(),
                    atom: neg.atom_name(n).to_string(),
                    outcome: neg.outcome_name(n, r).to_string(),
                });
            }
        }
    }

    // Which agents need which atoms, in agent order.
    let agents = neg.agent_count();
    let mut need_good = vec![false; agents];
    let mut need_bad = vec![false; agents];
    for (n, a, r, t) in neg.triples() {
        if n != nf && goals.is_constrained(a) && t.contains(&nf) {
            if goals.accepts(a, n, r) {
                need_good[a.index()] = true;
            } else {
                need_bad[a.index()] = true;
            }
        }
    }

    let mut b = neg.to_builder();
    let mut good = vec![None; agents];
    let mut bad = vec![None; agents];
    for a in neg.agents() {
        let agent_name = neg.agent_name(a);
        for (need, slot, prefix) in [
            (need_good[a.index()], &mut good, "good"),
            (need_bad[a.index()], &mut bad, "bad"),
        ] {
            if need {
                let name = fresh(&b, &format!("{prefix}_{agent_name}"));
                let id = b.add_atom(&name, &[a], &["done"])?;
                b.add_arc(id, a, Outcome(0), &[nf])?;
                slot[a.index()] = Some(id);
            }
        }
    }
    let mut redirected = Vec::new();
    for (n, a, r, t) in neg.triples() {
        if n == nf || !goals.is_constrained(a) || !t.contains(&nf) {
            continue;
        }
        let to = if goals.accepts(a, n, r) {
            good[a.index()]
        } else {
            bad[a.index()]
        }
        .expect("atom created above");
        let targets: Vec<AtomId> = t.iter().map(|&m| if m == nf { to } else { m }).collect();
        b.replace_arc(n, a, r, &targets)?;
        redirected.push((n, a, r, to));
    }
    let result = b.build()?;
    let player1 = arena.player1_atoms();
    Ok((
        Arena::with_player1(result, &player1),
        TransformMap {
            good,
            bad,
            redirected,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct OutcomeVerdict {
    pub player1_wins: bool,
    pub transformed: Arena,
    pub map: TransformMap,
    pub attractor: AttractorResult,
}

/// Decides the concluding-outcome game through the transform and an
/// attractor seeded with the good atoms and `nf`.
pub fn solve_concluding_outcome(arena: &Arena, soundness: Soundness) -> Result<OutcomeVerdict, TransformError> {
    let (transformed, map) = transform(arena)?;
    attractor::check_preconditions(transformed.negotiation(), soundness)?;
    let mut seed = map.good_atoms();
    seed.push(transformed.negotiation().final_atom());
    let result = attractor::compute_attractor_seeded(&transformed, &seed, &map.bad_atoms())?;
    Ok(OutcomeVerdict {
        player1_wins: result.contains(transformed.negotiation().initial()),
        transformed,
        map,
        attractor: result,
    })
}
