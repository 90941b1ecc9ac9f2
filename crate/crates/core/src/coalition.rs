//! Coalition-induced partitions and the control-retargeting gadget.

use thiserror::Error;

use crate::model::{AgentId, Arena, AtomId, ModelError, Negotiation, Outcome};

/// A set of agents `A1`; the remaining agents form `A2`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coalition {
    members: Vec<AgentId>,
}

impl Coalition {
    pub fn new(mut members: Vec<AgentId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Coalition { members }
    }

    pub fn members(&self) -> &[AgentId] {
        &self.members
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.members.binary_search(&agent).is_ok()
    }

    /// `(|P ∩ A1|, |P ∩ A2|)` for the parties of `atom`.
    pub fn counts(&self, negotiation: &Negotiation, atom: AtomId) -> (usize, usize) {
        let parties = &negotiation.atom(atom).parties;
        let ours = parties.iter().filter(|&&a| self.contains(a)).count();
        (ours, parties.len() - ours)
    }

    /// True iff the coalition holds a strict majority of the parties of `atom`.
    pub fn controls(&self, negotiation: &Negotiation, atom: AtomId) -> bool {
        let (ours, theirs) = self.counts(negotiation, atom);
        ours > theirs
    }
}

/// `N1` as a membership vector: atoms where the coalition has a strict majority.
pub fn majority_atoms(negotiation: &Negotiation, coalition: &Coalition) -> Vec<bool> {
    negotiation
        .atom_ids()
        .map(|n| coalition.controls(negotiation, n))
        .collect()
}

/// Arena whose `N1` is the set of atoms the coalition controls. Ties go to `N2`.
pub fn partition_from_coalition(negotiation: Negotiation, coalition: &Coalition) -> Arena {
    let player1 = majority_atoms(&negotiation, coalition);
    Arena::from_coalition_parts(negotiation, player1, coalition.members().to_vec())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetargetError {
    #[error("control of the initial or final atom '{0}' cannot be retargeted")]
    TerminalAtom(String),
    #[error("retargeting '{0}' needs nondeterministic agents; a deterministic gadget is not supported")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RetargetOptions {
    /// Refuse to add nondeterministic agents.
    pub require_deterministic: bool,
}

/// Result of [`retarget_control`].
#[derive(Debug, Clone)]
pub struct Retargeted {
    /// The new arena, partitioned by the extended coalition.
    pub arena: Arena,
    /// Agents added to the coalition (parties of `n0`, the target and `nf`).
    pub added_coalition: Vec<AgentId>,
    /// Agents added to the opposition (parties of `n0` and `nf`).
    pub added_opposition: Vec<AgentId>,
}

fn fresh_agent_name(builder: &crate::model::NegotiationBuilder, next: &mut usize) -> String {
    loop {
        *next += 1;
        let name = format!("_ctl{next}");
        if !builder.has_agent_name(&name) {
            return name;
        }
    }
}

/// Hands control of `atom` to the coalition by adding nondeterministic agents.
///
/// Each added coalition agent takes part in `n0`, `atom` and `nf`, and moves
/// from `n0` and from `atom` to `{atom, nf}` for every outcome. Such an agent
/// is always ready for both atoms once `n0` has occurred, so it never blocks
/// anything. If `n0` and `nf` belonged to the opposition before, opposition
/// agents on `{n0, nf}` are added to keep it that way.
pub fn retarget_control(
    negotiation: &Negotiation,
    coalition: &Coalition,
    atom: AtomId,
    options: RetargetOptions,
) -> Result<Retargeted, RetargetError> {
    let n0 = negotiation.initial();
    let nf = negotiation.final_atom();
    if atom == n0 || atom == nf {
        return Err(RetargetError::TerminalAtom(negotiation.atom_name(atom).to_string()));
    }
    let (ours, theirs) = coalition.counts(negotiation, atom);
    if ours > theirs {
        return Ok(Retargeted {
            arena: partition_from_coalition(negotiation.clone(), coalition),
            added_coalition: Vec::new(),
            added_opposition: Vec::new(),
        });
    }
    if options.require_deterministic {
        return Err(RetargetError::Unsupported(negotiation.atom_name(atom).to_string()));
    }

    let k = theirs - ours + 1;
    let (all_ours, all_theirs) = coalition.counts(negotiation, n0);
    let m = if all_ours > all_theirs {
        0
    } else {
        (all_ours + k).saturating_sub(all_theirs)
    };

    let mut b = negotiation.to_builder();
    let mut counter = 0usize;
    let mut members = coalition.members().to_vec();
    let mut added_coalition = Vec::new();
    for _ in 0..k {
        let name = fresh_agent_name(&b, &mut counter);
        let a = b.add_agent(&name)?;
        for n in [n0, atom, nf] {
            b.add_party(n, a)?;
        }
        for r in 0..negotiation.atom(n0).outcomes.len() as u32 {
            b.add_arc(n0, a, Outcome(r), &[atom, nf])?;
        }
        for r in 0..negotiation.atom(atom).outcomes.len() as u32 {
            b.add_arc(atom, a, Outcome(r), &[atom, nf])?;
        }
        members.push(a);
        added_coalition.push(a);
    }
    let mut added_opposition = Vec::new();
    for _ in 0..m {
        let name = fresh_agent_name(&b, &mut counter);
        let a = b.add_agent(&name)?;
        for n in [n0, nf] {
            b.add_party(n, a)?;
        }
        for r in 0..negotiation.atom(n0).outcomes.len() as u32 {
            b.add_arc(n0, a, Outcome(r), &[nf])?;
        }
        added_opposition.push(a);
    }
    let result = b.build()?;
    Ok(Retargeted {
        arena: partition_from_coalition(result, &Coalition::new(members)),
        added_coalition,
        added_opposition,
    })
}
