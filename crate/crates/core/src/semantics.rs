//! Occurrence semantics, reachability, soundness and determinism classes.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::model::{AgentId, AtomId, Marking, Negotiation, Outcome};

/// Default bound on the number of explored markings.
pub const DEFAULT_MAX_MARKINGS: usize = 10_000_000;

/// An occurrence `(n, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub atom: AtomId,
    pub outcome: Outcome,
}

impl Step {
    pub fn new(atom: AtomId, outcome: Outcome) -> Self {
        Step { atom, outcome }
    }

    pub fn display<'a>(&self, negotiation: &'a Negotiation) -> StepDisplay<'a> {
        StepDisplay {
            step: *self,
            negotiation,
        }
    }
}

pub struct StepDisplay<'a> {
    step: Step,
    negotiation: &'a Negotiation,
}

impl fmt::Display for StepDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})",
            self.negotiation.atom_name(self.step.atom),
            self.negotiation.outcome_name(self.step.atom, self.step.outcome)
        )
    }
}

/// Renders an occurrence sequence as `(n0,a) (n1,b) ...`.
pub fn format_steps(negotiation: &Negotiation, steps: &[Step]) -> String {
    steps
        .iter()
        .map(|s| s.display(negotiation).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("atom '{atom}' is not enabled: party '{agent}' is not ready for it")]
    NotEnabled { atom: String, agent: String },
    #[error("atom '{atom}' has no outcome with index {outcome}")]
    UnknownOutcome { atom: String, outcome: u32 },
    #[error("atoms '{first}' and '{second}' share a party and cannot occur together")]
    NotIndependent { first: String, second: String },
    #[error("state space exceeds the limit of {limit} markings")]
    TooManyMarkings { limit: usize },
}

/// Atoms enabled at `marking`, in index order.
pub fn enabled_atoms(negotiation: &Negotiation, marking: &Marking) -> Vec<AtomId> {
    negotiation
        .atom_ids()
        .filter(|&n| {
            negotiation
                .atom(n)
                .parties
                .iter()
                .all(|&a| marking.is_ready(a, n))
        })
        .collect()
}

fn check_step(negotiation: &Negotiation, marking: &Marking, step: Step) -> Result<(), SemanticsError> {
    let atom = negotiation.atom(step.atom);
    if step.outcome.index() >= atom.outcomes.len() {
        return Err(SemanticsError::UnknownOutcome {
            atom: atom.name.clone(),
            outcome: step.outcome.0,
        });
    }
    if let Some(&a) = atom.parties.iter().find(|&&a| !marking.is_ready(a, step.atom)) {
        return Err(SemanticsError::NotEnabled {
            atom: atom.name.clone(),
            agent: negotiation.agent_name(a).to_string(),
        });
    }
    Ok(())
}

fn apply(negotiation: &Negotiation, marking: &mut Marking, step: Step) {
    for (slot, &a) in negotiation.atom(step.atom).parties.iter().enumerate() {
        marking.set_ready(a, negotiation.targets_at(step.atom, slot, step.outcome));
    }
}

/// Fires one enabled atom.
pub fn occur(negotiation: &Negotiation, marking: &Marking, step: Step) -> Result<Marking, SemanticsError> {
    check_step(negotiation, marking, step)?;
    let mut next = marking.clone();
    apply(negotiation, &mut next, step);
    Ok(next)
}

/// Fires a set of independent enabled atoms, one outcome each.
pub fn occur_set(
    negotiation: &Negotiation,
    marking: &Marking,
    steps: &[Step],
) -> Result<Marking, SemanticsError> {
    for (i, s) in steps.iter().enumerate() {
        check_step(negotiation, marking, *s)?;
        for t in &steps[..i] {
            let shared = t.atom == s.atom
                || negotiation
                    .atom(s.atom)
                    .parties
                    .iter()
                    .any(|&a| negotiation.atom(t.atom).has_party(a));
            if shared {
                return Err(SemanticsError::NotIndependent {
                    first: negotiation.atom_name(t.atom).to_string(),
                    second: negotiation.atom_name(s.atom).to_string(),
                });
            }
        }
    }
    let mut next = marking.clone();
    for s in steps {
        apply(negotiation, &mut next, *s);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingStatus {
    Final,
    Deadlock,
    Live,
}

/// Reachable markings under single-atom occurrence, numbered in BFS order.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub markings: Vec<Marking>,
    pub index: HashMap<Marking, u32>,
    pub enabled: Vec<Vec<AtomId>>,
    pub edges: Vec<Vec<(Step, u32)>>,
    pub status: Vec<MarkingStatus>,
    /// BFS tree: the predecessor and step that first reached each marking.
    pub parent: Vec<Option<(u32, Step)>>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    /// Shortest occurrence sequence from `x0` to marking `id`.
    pub fn path_to(&self, id: u32) -> Vec<Step> {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some((prev, step)) = self.parent[cur as usize] {
            steps.push(step);
            cur = prev;
        }
        steps.reverse();
        steps
    }

    pub fn final_id(&self) -> Option<u32> {
        self.status
            .iter()
            .position(|s| *s == MarkingStatus::Final)
            .map(|i| i as u32)
    }

    /// Markings from which the final marking is reachable.
    pub fn coreachable_final(&self) -> Vec<bool> {
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); self.len()];
        for (from, edges) in self.edges.iter().enumerate() {
            for &(_, to) in edges {
                preds[to as usize].push(from as u32);
            }
        }
        let mut reach = vec![false; self.len()];
        let mut queue = VecDeque::new();
        if let Some(f) = self.final_id() {
            reach[f as usize] = true;
            queue.push_back(f);
        }
        while let Some(v) = queue.pop_front() {
            for &p in &preds[v as usize] {
                if !reach[p as usize] {
                    reach[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
        reach
    }
}

/// Breadth-first exploration from `x0`.
pub fn explore(negotiation: &Negotiation, max_markings: usize) -> Result<StateSpace, SemanticsError> {
    let mut space = StateSpace {
        markings: Vec::new(),
        index: HashMap::new(),
        enabled: Vec::new(),
        edges: Vec::new(),
        status: Vec::new(),
        parent: Vec::new(),
    };
    let x0 = Marking::initial(negotiation);
    space.index.insert(x0.clone(), 0);
    space.markings.push(x0);
    space.parent.push(None);

    let mut next = 0usize;
    while next < space.markings.len() {
        let marking = space.markings[next].clone();
        let enabled = enabled_atoms(negotiation, &marking);
        let mut edges = Vec::new();
        for &n in &enabled {
            for r in negotiation.outcomes(n) {
                let step = Step::new(n, r);
                let mut succ = marking.clone();
                apply(negotiation, &mut succ, step);
                let id = match space.index.get(&succ) {
                    Some(&id) => id,
                    None => {
                        if space.markings.len() >= max_markings {
                            return Err(SemanticsError::TooManyMarkings { limit: max_markings });
                        }
                        let id = space.markings.len() as u32;
                        space.index.insert(succ.clone(), id);
                        space.markings.push(succ);
                        space.parent.push(Some((next as u32, step)));
                        id
                    }
                };
                edges.push((step, id));
            }
        }
        let status = if marking.is_final() {
            MarkingStatus::Final
        } else if enabled.is_empty() {
            MarkingStatus::Deadlock
        } else {
            MarkingStatus::Live
        };
        space.enabled.push(enabled);
        space.edges.push(edges);
        space.status.push(status);
        next += 1;
    }
    Ok(space)
}

/// A reachable marking from which the final marking cannot be reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonTerminating {
    pub path: Vec<Step>,
    pub marking: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub sound: bool,
    /// Atoms not enabled at any reachable marking.
    pub unreachable_atoms: Vec<AtomId>,
    /// Shortest occurrence sequence to a deadlock.
    pub deadlock_witness: Option<Vec<Step>>,
    /// First non-deadlocked marking (BFS order) that cannot reach `xf`.
    pub non_terminating_witness: Option<NonTerminating>,
    pub reachable_markings: usize,
}

impl SoundnessReport {
    pub fn render(&self, negotiation: &Negotiation) -> String {
        if self.sound {
            return format!("sound ({} reachable markings)", self.reachable_markings);
        }
        let mut lines = vec![format!(
            "unsound ({} reachable markings)",
            self.reachable_markings
        )];
        if !self.unreachable_atoms.is_empty() {
            let names: Vec<&str> = self
                .unreachable_atoms
                .iter()
                .map(|&n| negotiation.atom_name(n))
                .collect();
            lines.push(format!("never enabled: {}", names.join(" ")));
        }
        if let Some(w) = &self.deadlock_witness {
            lines.push(format!("deadlock: {}", format_steps(negotiation, w)));
        }
        if let Some(w) = &self.non_terminating_witness {
            lines.push(format!(
                "cannot terminate after: {} reaching {}",
                format_steps(negotiation, &w.path),
                w.marking.display(negotiation)
            ));
        }
        lines.join("\n")
    }
}

/// Checks soundness on an already explored state space.
pub fn soundness_of(negotiation: &Negotiation, space: &StateSpace) -> SoundnessReport {
    let mut seen = vec![false; negotiation.atom_count()];
    for enabled in &space.enabled {
        for n in enabled {
            seen[n.index()] = true;
        }
    }
    let unreachable_atoms: Vec<AtomId> = negotiation.atom_ids().filter(|n| !seen[n.index()]).collect();

    let deadlock_witness = space
        .status
        .iter()
        .position(|s| *s == MarkingStatus::Deadlock)
        .map(|i| space.path_to(i as u32));

    let coreach = space.coreachable_final();
    let non_terminating_witness = (0..space.len())
        .find(|&i| !coreach[i] && space.status[i] == MarkingStatus::Live)
        .map(|i| NonTerminating {
            path: space.path_to(i as u32),
            marking: space.markings[i].clone(),
        });

    SoundnessReport {
        sound: unreachable_atoms.is_empty()
            && deadlock_witness.is_none()
            && non_terminating_witness.is_none(),
        unreachable_atoms,
        deadlock_witness,
        non_terminating_witness,
        reachable_markings: space.len(),
    }
}

pub fn check_soundness(negotiation: &Negotiation) -> Result<SoundnessReport, SemanticsError> {
    check_soundness_with_limit(negotiation, DEFAULT_MAX_MARKINGS)
}

pub fn check_soundness_with_limit(
    negotiation: &Negotiation,
    max_markings: usize,
) -> Result<SoundnessReport, SemanticsError> {
    let space = explore(negotiation, max_markings)?;
    Ok(soundness_of(negotiation, &space))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub deterministic_agents: Vec<AgentId>,
    pub deterministic: bool,
    pub weakly_deterministic: bool,
    /// Every atom has at least one deterministic party.
    pub type2: bool,
}

impl Classification {
    pub fn is_deterministic(&self, agent: AgentId) -> bool {
        self.deterministic_agents.binary_search(&agent).is_ok()
    }
}

/// Per agent: every transition from a non-final atom is a singleton.
pub fn deterministic_flags(negotiation: &Negotiation) -> Vec<bool> {
    let nf = negotiation.final_atom();
    let mut det = vec![true; negotiation.agent_count()];
    for (n, a, _, t) in negotiation.triples() {
        if n != nf && t.len() != 1 {
            det[a.index()] = false;
        }
    }
    det
}

/// Determinism classes of a negotiation.
pub fn classify(negotiation: &Negotiation) -> Classification {
    let det = deterministic_flags(negotiation);
    let nf = negotiation.final_atom();
    let deterministic_agents: Vec<AgentId> = negotiation.agents().filter(|a| det[a.index()]).collect();

    let weakly_deterministic = negotiation.triples().all(|(n, _, _, t)| {
        n == nf
            || deterministic_agents
                .iter()
                .any(|&b| t.iter().all(|&m| negotiation.atom(m).has_party(b)))
    });
    let type2 = negotiation
        .atoms()
        .iter()
        .all(|atom| atom.parties.iter().any(|a| det[a.index()]));

    Classification {
        deterministic: deterministic_agents.len() == negotiation.agent_count(),
        deterministic_agents,
        weakly_deterministic,
        type2,
    }
}

/// How a recorded play ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlayEnd {
    /// The final atom occurred.
    Final,
    /// No atom is enabled and the marking is not final.
    Deadlock,
    /// The play returns to the state reached after `start` rounds and repeats forever.
    Cycle { start: usize },
    /// The round limit was hit.
    Truncated,
}

/// A play as a sequence of rounds; each round fires an independent set of steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Play {
    pub rounds: Vec<Vec<Step>>,
    pub end: PlayEnd,
}

impl Play {
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.rounds.iter().flatten()
    }

    /// `(n0,y) loop (n1,tm) (n2,r)`; concurrent rounds are wrapped in braces.
    pub fn render(&self, negotiation: &Negotiation) -> String {
        let round = |r: &Vec<Step>| {
            let s = format_steps(negotiation, r);
            if r.len() > 1 {
                format!("{{{s}}}")
            } else {
                s
            }
        };
        let mut parts: Vec<String> = Vec::new();
        for (i, r) in self.rounds.iter().enumerate() {
            if self.end == (PlayEnd::Cycle { start: i }) {
                parts.push("loop".into());
            }
            parts.push(round(r));
        }
        match self.end {
            PlayEnd::Deadlock => parts.push("deadlock".into()),
            PlayEnd::Truncated => parts.push("...".into()),
            _ => {}
        }
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, load};

    fn step(neg: &Negotiation, atom: &str, outcome: &str) -> Step {
        let n = neg.atom_named(atom).unwrap();
        Step::new(n, neg.atom(n).outcome_named(outcome).unwrap())
    }

    fn names(neg: &Negotiation, atoms: &[AtomId]) -> Vec<String> {
        atoms.iter().map(|&n| neg.atom_name(n).to_string()).collect()
    }

    #[test]
    fn enabled_at_initial_and_final() {
        let arena = load(fixtures::FAMILY_CYCLIC);
        let neg = arena.negotiation();
        assert_eq!(names(neg, &enabled_atoms(neg, &Marking::initial(neg))), ["n0"]);
        assert!(enabled_atoms(neg, &Marking::final_marking(neg)).is_empty());
    }

    #[test]
    fn token_marking_of_family_cyclic() {
        let arena = load(fixtures::FAMILY_CYCLIC);
        let neg = arena.negotiation();
        let x = occur(neg, &Marking::initial(neg), step(neg, "n0", "y")).unwrap();
        assert_eq!(x.display(neg).to_string(), "{F:[n1], D:[n1], M:[n2]}");
        assert_eq!(names(neg, &enabled_atoms(neg, &x)), ["n1"]);
    }

    #[test]
    fn final_occurrence_reaches_xf() {
        let arena = load(fixtures::FAMILY_CYCLIC);
        let neg = arena.negotiation();
        let x0 = Marking::initial(neg);
        let x = occur(neg, &x0, step(neg, "n0", "n")).unwrap();
        let xf = occur(neg, &x, step(neg, "nf", "end")).unwrap();
        assert_eq!(xf, Marking::final_marking(neg));
    }

    #[test]
    fn occur_disabled_names_party() {
        let arena = load(fixtures::FAMILY_CYCLIC);
        let neg = arena.negotiation();
        let err = occur(neg, &Marking::initial(neg), step(neg, "n1", "tm")).unwrap_err();
        assert_eq!(
            err,
            SemanticsError::NotEnabled {
                atom: "n1".into(),
                agent: "F".into()
            }
        );
    }

    #[test]
    fn occur_set_degenerate_cases() {
        let arena = load(fixtures::FAMILY_ACYCLIC);
        let neg = arena.negotiation();
        let x0 = Marking::initial(neg);
        assert_eq!(occur_set(neg, &x0, &[]).unwrap(), x0);
        let s = step(neg, "n0", "st");
        assert_eq!(occur_set(neg, &x0, &[s]).unwrap(), occur(neg, &x0, s).unwrap());
    }

    #[test]
    fn occur_set_rejects_shared_parties() {
        let arena = load(fixtures::FAMILY_ACYCLIC);
        let neg = arena.negotiation();
        let x = occur(neg, &Marking::initial(neg), step(neg, "n0", "st")).unwrap();
        let x = occur(neg, &x, step(neg, "n1", "am")).unwrap();
        assert!(matches!(
            occur_set(neg, &x, &[step(neg, "n2", "y"), step(neg, "n2", "n")]),
            Err(SemanticsError::NotIndependent { .. })
        ));
    }

    #[test]
    fn minimal_negotiation_has_two_markings() {
        let text = "negotiation tiny\nagents A\natom n0 initial parties A outcomes go\natom nf final parties A outcomes end\narc n0 A go -> nf\n";
        let arena = crate::textio::parse(text).unwrap();
        let space = explore(arena.negotiation(), 100).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.status, [MarkingStatus::Live, MarkingStatus::Live, MarkingStatus::Final]);
        assert!(check_soundness(arena.negotiation()).unwrap().sound);
    }

    #[test]
    fn exploration_cap_is_reported() {
        let arena = load(fixtures::FAMILY_CYCLIC);
        assert_eq!(
            explore(arena.negotiation(), 2).unwrap_err(),
            SemanticsError::TooManyMarkings { limit: 2 }
        );
    }

    #[test]
    fn family_fixtures_soundness() {
        for text in [fixtures::FAMILY_ACYCLIC, fixtures::FAMILY_CYCLIC] {
            let arena = load(text);
            let report = check_soundness(arena.negotiation()).unwrap();
            assert!(report.sound, "{}", report.render(arena.negotiation()));
        }
        let arena = load(fixtures::FAMILY_DEADLOCK);
        let neg = arena.negotiation();
        let report = check_soundness(neg).unwrap();
        assert!(!report.sound);
        assert_eq!(
            format_steps(neg, report.deadlock_witness.as_ref().unwrap()),
            "(n0,st) (n1,y)"
        );
    }

    #[test]
    fn never_enabled_atom_is_listed() {
        let text = fixtures::FAMILY_CYCLIC
            .replace("atom nf final", "atom dead parties F outcomes z\natom nf final")
            .replace("arc n1 F tm -> n2", "arc n1 F tm -> n2\narc dead F z -> nf");
        let arena = crate::textio::parse(&text).unwrap();
        let neg = arena.negotiation();
        let report = check_soundness(neg).unwrap();
        assert!(!report.sound);
        assert_eq!(names(neg, &report.unreachable_atoms), ["dead"]);
    }

    #[test]
    fn classification_of_fixtures() {
        let right = classify(load(fixtures::FAMILY_CYCLIC).negotiation());
        assert!(right.deterministic && right.weakly_deterministic && right.type2);

        let arena = load(fixtures::FAMILY_ACYCLIC);
        let left = classify(arena.negotiation());
        assert!(!left.deterministic);
        assert!(left.weakly_deterministic);
        assert!(left.type2);
        let det: Vec<&str> = left
            .deterministic_agents
            .iter()
            .map(|&a| arena.negotiation().agent_name(a))
            .collect();
        assert_eq!(det, ["F", "D"]);
    }
}
