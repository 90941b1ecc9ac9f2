//! Negotiations, markings and arenas.
//!
//! Agents, atoms and outcomes are identified by dense indices assigned at
//! construction. Names are kept only for input/output.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

/// Dense index of an agent within a negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

/// Dense index of an atom within a negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

/// Index of an outcome within its atom's outcome list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Outcome {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The two players of an arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub name: String,
    /// Sorted by agent index.
    pub parties: Vec<AgentId>,
    pub outcomes: Vec<String>,
}

impl Atom {
    pub fn has_party(&self, agent: AgentId) -> bool {
        self.parties.binary_search(&agent).is_ok()
    }

    fn party_slot(&self, agent: AgentId) -> Option<usize> {
        self.parties.binary_search(&agent).ok()
    }

    pub fn outcome_named(&self, name: &str) -> Option<Outcome> {
        self.outcomes
            .iter()
            .position(|o| o == name)
            .map(|i| Outcome(i as u32))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate agent '{0}'")]
    DuplicateAgent(String),
    #[error("duplicate atom '{0}'")]
    DuplicateAtom(String),
    #[error("duplicate outcome '{outcome}' in atom '{atom}'")]
    DuplicateOutcome { atom: String, outcome: String },
    #[error("duplicate party '{agent}' in atom '{atom}'")]
    DuplicateParty { atom: String, agent: String },
    #[error("atom '{0}' has no parties")]
    NoParties(String),
    #[error("atom '{0}' has no outcomes")]
    NoOutcomes(String),
    #[error("unknown agent index {0}")]
    UnknownAgent(u32),
    #[error("unknown atom index {0}")]
    UnknownAtom(u32),
    #[error("atom '{atom}' has no outcome with index {outcome}")]
    UnknownOutcome { atom: String, outcome: u32 },
    #[error("agent '{agent}' is not a party of atom '{atom}'")]
    NotAParty { atom: String, agent: String },
    #[error("arc ({atom},{agent},{outcome}) declared twice")]
    DuplicateArc {
        atom: String,
        agent: String,
        outcome: String,
    },
    #[error("arc ({atom},{agent},{outcome}) lists target '{target}' twice")]
    DuplicateTarget {
        atom: String,
        agent: String,
        outcome: String,
        target: String,
    },
    #[error("no initial atom declared")]
    MissingInitial,
    #[error("no final atom declared")]
    MissingFinal,
}

/// A distributed negotiation `(N, n0, nf, X)`.
///
/// The transition function is stored flat: for atom `n` with parties
/// `p_0..p_k` and outcomes `r_0..r_m`, the target set of `(n, p_i, r_j)`
/// lives at `arcs[arc_base[n] + i * m + j]`. Target sets are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Negotiation {
    name: String,
    agents: Vec<String>,
    atoms: Vec<Atom>,
    initial: AtomId,
    final_atom: AtomId,
    arc_base: Vec<usize>,
    arcs: Vec<Vec<AtomId>>,
}

impl Negotiation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn agents(&self) -> impl ExactSizeIterator<Item = AgentId> + '_ {
        (0..self.agents.len() as u32).map(AgentId)
    }

    pub fn atom_ids(&self) -> impl ExactSizeIterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn agent_name(&self, agent: AgentId) -> &str {
        &self.agents[agent.index()]
    }

    pub fn agent_named(&self, name: &str) -> Option<AgentId> {
        self.agents
            .iter()
            .position(|a| a == name)
            .map(|i| AgentId(i as u32))
    }

    pub fn atom(&self, atom: AtomId) -> &Atom {
        &self.atoms[atom.index()]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_name(&self, atom: AtomId) -> &str {
        &self.atoms[atom.index()].name
    }

    pub fn atom_named(&self, name: &str) -> Option<AtomId> {
        self.atoms
            .iter()
            .position(|a| a.name == name)
            .map(|i| AtomId(i as u32))
    }

    pub fn outcome_name(&self, atom: AtomId, outcome: Outcome) -> &str {
        &self.atoms[atom.index()].outcomes[outcome.index()]
    }

    pub fn outcomes(&self, atom: AtomId) -> impl ExactSizeIterator<Item = Outcome> {
        (0..self.atoms[atom.index()].outcomes.len() as u32).map(Outcome)
    }

    pub fn initial(&self) -> AtomId {
        self.initial
    }

    pub fn final_atom(&self) -> AtomId {
        self.final_atom
    }

    /// Total number of outcomes over all atoms.
    pub fn outcome_count(&self) -> usize {
        self.atoms.iter().map(|a| a.outcomes.len()).sum()
    }

    /// `X(n, a, r)`, or `None` when `a` is not a party of `n`.
    pub fn targets(&self, atom: AtomId, agent: AgentId, outcome: Outcome) -> Option<&[AtomId]> {
        let slot = self.atoms[atom.index()].party_slot(agent)?;
        Some(self.targets_at(atom, slot, outcome))
    }

    /// `X(n, p, r)` where `p` is the `slot`-th party of `n`.
    pub fn targets_at(&self, atom: AtomId, slot: usize, outcome: Outcome) -> &[AtomId] {
        let width = self.atoms[atom.index()].outcomes.len();
        &self.arcs[self.arc_base[atom.index()] + slot * width + outcome.index()]
    }

    /// Iterates the triples `T(N)` in canonical (atom, agent, outcome) order.
    pub fn triples(&self) -> impl Iterator<Item = (AtomId, AgentId, Outcome, &[AtomId])> + '_ {
        self.atom_ids().flat_map(move |n| {
            let atom = self.atom(n);
            atom.parties.iter().enumerate().flat_map(move |(slot, &a)| {
                self.outcomes(n)
                    .map(move |r| (n, a, r, self.targets_at(n, slot, r)))
            })
        })
    }

    /// Number of triples in `T(N)`.
    pub fn triple_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn to_builder(&self) -> NegotiationBuilder {
        let mut b = NegotiationBuilder::new(&self.name);
        b.agents = self.agents.clone();
        b.agent_index = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), AgentId(i as u32)))
            .collect();
        b.atoms = self.atoms.clone();
        b.atom_index = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.clone(), AtomId(i as u32)))
            .collect();
        b.initial = Some(self.initial);
        b.final_atom = Some(self.final_atom);
        for (n, a, r, t) in self.triples() {
            if !t.is_empty() {
                b.arcs.insert((n, a, r), t.to_vec());
            }
        }
        b
    }

    /// Checks the structural invariants of a negotiation.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.initial == self.final_atom {
            violations.push(Violation::InitialIsFinal);
        }
        for agent in self.agents() {
            for (which, atom) in [(Terminal::Initial, self.initial), (Terminal::Final, self.final_atom)] {
                if !self.atom(atom).has_party(agent) {
                    violations.push(Violation::AgentMissingFromTerminal {
                        agent: self.agent_name(agent).to_string(),
                        atom: which,
                    });
                }
            }
        }
        for (n, a, r, t) in self.triples() {
            let triple = || TripleName {
                atom: self.atom_name(n).to_string(),
                agent: self.agent_name(a).to_string(),
                outcome: self.outcome_name(n, r).to_string(),
            };
            if n == self.final_atom && !t.is_empty() {
                violations.push(Violation::FinalHasTargets(triple()));
            } else if n != self.final_atom && t.is_empty() {
                violations.push(Violation::EmptyTargets(triple()));
            }
        }
        ValidationReport { violations }
    }

    /// True iff the parties of the given atoms are pairwise disjoint.
    pub fn is_independent(&self, atoms: &[AtomId]) -> bool {
        let mut seen = FixedBitSet::with_capacity(self.agents.len());
        for (i, &n) in atoms.iter().enumerate() {
            if atoms[..i].contains(&n) {
                continue;
            }
            for &a in &self.atom(n).parties {
                if seen.put(a.index()) {
                    return false;
                }
            }
        }
        true
    }

    /// All nonempty independent subsets of `enabled`, ordered by size and
    /// then lexicographically by atom index.
    pub fn independent_sets(&self, enabled: &[AtomId]) -> Vec<IndependentSet> {
        let mut sorted = enabled.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut out = Vec::new();
        let mut current = Vec::new();
        let mut used = FixedBitSet::with_capacity(self.agents.len());
        self.extend_independent(&sorted, 0, &mut current, &mut used, &mut out);
        out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }

    fn extend_independent(
        &self,
        atoms: &[AtomId],
        from: usize,
        current: &mut Vec<AtomId>,
        used: &mut FixedBitSet,
        out: &mut Vec<IndependentSet>,
    ) {
        for i in from..atoms.len() {
            let parties = &self.atom(atoms[i]).parties;
            if parties.iter().any(|a| used.contains(a.index())) {
                continue;
            }
            for a in parties {
                used.insert(a.index());
            }
            current.push(atoms[i]);
            out.push(IndependentSet(current.clone()));
            self.extend_independent(atoms, i + 1, current, used, out);
            current.pop();
            for a in parties {
                used.set(a.index(), false);
            }
        }
    }
}

/// Incremental constructor for [`Negotiation`].
///
/// Arcs that are never set default to the empty target set; whether that is
/// legal is decided by [`Negotiation::validate`], not by the builder.
#[derive(Debug, Clone)]
pub struct NegotiationBuilder {
    name: String,
    agents: Vec<String>,
    agent_index: HashMap<String, AgentId>,
    atoms: Vec<Atom>,
    atom_index: HashMap<String, AtomId>,
    initial: Option<AtomId>,
    final_atom: Option<AtomId>,
    arcs: HashMap<(AtomId, AgentId, Outcome), Vec<AtomId>>,
}

impl NegotiationBuilder {
    pub fn new(name: &str) -> Self {
        NegotiationBuilder {
            name: name.to_string(),
            agents: Vec::new(),
            agent_index: HashMap::new(),
            atoms: Vec::new(),
            atom_index: HashMap::new(),
            initial: None,
            final_atom: None,
            arcs: HashMap::new(),
        }
    }

    pub fn add_agent(&mut self, name: &str) -> Result<AgentId, ModelError> {
        if self.agent_index.contains_key(name) {
            return Err(ModelError::DuplicateAgent(name.to_string()));
        }
        let id = AgentId(self.agents.len() as u32);
        self.agents.push(name.to_string());
        self.agent_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_atom<S: AsRef<str>>(
        &mut self,
        name: &str,
        parties: &[AgentId],
        outcomes: &[S],
    ) -> Result<AtomId, ModelError> {
        if self.atom_index.contains_key(name) {
            return Err(ModelError::DuplicateAtom(name.to_string()));
        }
        if parties.is_empty() {
            return Err(ModelError::NoParties(name.to_string()));
        }
        if outcomes.is_empty() {
            return Err(ModelError::NoOutcomes(name.to_string()));
        }
        let mut sorted = parties.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::DuplicateParty {
                    atom: name.to_string(),
                    agent: self.agents[w[0].index()].clone(),
                });
            }
        }
        if let Some(a) = sorted.iter().find(|a| a.index() >= self.agents.len()) {
            return Err(ModelError::UnknownAgent(a.0));
        }
        let outcomes: Vec<String> = outcomes.iter().map(|o| o.as_ref().to_string()).collect();
        for (i, o) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(o) {
                return Err(ModelError::DuplicateOutcome {
                    atom: name.to_string(),
                    outcome: o.clone(),
                });
            }
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(Atom {
            name: name.to_string(),
            parties: sorted,
            outcomes,
        });
        self.atom_index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds `agent` as a party of an existing atom.
    pub fn add_party(&mut self, atom: AtomId, agent: AgentId) -> Result<(), ModelError> {
        self.check_atom(atom)?;
        if agent.index() >= self.agents.len() {
            return Err(ModelError::UnknownAgent(agent.0));
        }
        let a = &mut self.atoms[atom.index()];
        match a.parties.binary_search(&agent) {
            Ok(_) => Err(ModelError::DuplicateParty {
                atom: a.name.clone(),
                agent: self.agents[agent.index()].clone(),
            }),
            Err(pos) => {
                a.parties.insert(pos, agent);
                Ok(())
            }
        }
    }

    pub fn set_initial(&mut self, atom: AtomId) -> Result<(), ModelError> {
        self.check_atom(atom)?;
        self.initial = Some(atom);
        Ok(())
    }

    pub fn set_final(&mut self, atom: AtomId) -> Result<(), ModelError> {
        self.check_atom(atom)?;
        self.final_atom = Some(atom);
        Ok(())
    }

    /// Sets `X(atom, agent, outcome) = targets`. Fails if the arc was already set.
    pub fn add_arc(
        &mut self,
        atom: AtomId,
        agent: AgentId,
        outcome: Outcome,
        targets: &[AtomId],
    ) -> Result<(), ModelError> {
        let key = self.check_triple(atom, agent, outcome)?;
        if self.arcs.contains_key(&key) {
            return Err(ModelError::DuplicateArc {
                atom: self.atoms[atom.index()].name.clone(),
                agent: self.agents[agent.index()].clone(),
                outcome: self.atoms[atom.index()].outcomes[outcome.index()].clone(),
            });
        }
        self.replace_arc(atom, agent, outcome, targets)
    }

    /// Sets `X(atom, agent, outcome) = targets`, overwriting any previous value.
    pub fn replace_arc(
        &mut self,
        atom: AtomId,
        agent: AgentId,
        outcome: Outcome,
        targets: &[AtomId],
    ) -> Result<(), ModelError> {
        let key = self.check_triple(atom, agent, outcome)?;
        let mut sorted = targets.to_vec();
        for &t in &sorted {
            self.check_atom(t)?;
        }
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateTarget {
                atom: self.atoms[atom.index()].name.clone(),
                agent: self.agents[agent.index()].clone(),
                outcome: self.atoms[atom.index()].outcomes[outcome.index()].clone(),
                target: self.atoms[w[0].index()].name.clone(),
            });
        }
        self.arcs.insert(key, sorted);
        Ok(())
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agent_index.get(name).copied()
    }

    pub fn atom_id(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(name).copied()
    }

    pub fn atom(&self, atom: AtomId) -> &Atom {
        &self.atoms[atom.index()]
    }

    pub fn has_agent_name(&self, name: &str) -> bool {
        self.agent_index.contains_key(name)
    }

    pub fn has_atom_name(&self, name: &str) -> bool {
        self.atom_index.contains_key(name)
    }

    pub fn arc(&self, atom: AtomId, agent: AgentId, outcome: Outcome) -> Option<&[AtomId]> {
        self.arcs.get(&(atom, agent, outcome)).map(|v| v.as_slice())
    }

    fn check_atom(&self, atom: AtomId) -> Result<(), ModelError> {
        if atom.index() < self.atoms.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownAtom(atom.0))
        }
    }

    fn check_triple(
        &self,
        atom: AtomId,
        agent: AgentId,
        outcome: Outcome,
    ) -> Result<(AtomId, AgentId, Outcome), ModelError> {
        self.check_atom(atom)?;
        if agent.index() >= self.agents.len() {
            return Err(ModelError::UnknownAgent(agent.0));
        }
        let a = &self.atoms[atom.index()];
        if !a.has_party(agent) {
            return Err(ModelError::NotAParty {
                atom: a.name.clone(),
                agent: self.agents[agent.index()].clone(),
            });
        }
        if outcome.index() >= a.outcomes.len() {
            return Err(ModelError::UnknownOutcome {
                atom: a.name.clone(),
                outcome: outcome.0,
            });
        }
        Ok((atom, agent, outcome))
    }

    pub fn build(self) -> Result<Negotiation, ModelError> {
        let initial = self.initial.ok_or(ModelError::MissingInitial)?;
        let final_atom = self.final_atom.ok_or(ModelError::MissingFinal)?;
        let mut arc_base = Vec::with_capacity(self.atoms.len());
        let mut arcs = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            arc_base.push(arcs.len());
            for &a in &atom.parties {
                for r in 0..atom.outcomes.len() as u32 {
                    let targets = self
                        .arcs
                        .get(&(AtomId(i as u32), a, Outcome(r)))
                        .cloned()
                        .unwrap_or_default();
                    arcs.push(targets);
                }
            }
        }
        Ok(Negotiation {
            name: self.name,
            agents: self.agents,
            atoms: self.atoms,
            initial,
            final_atom,
            arc_base,
            arcs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Initial,
    Final,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleName {
    pub atom: String,
    pub agent: String,
    pub outcome: String,
}

impl fmt::Display for TripleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.atom, self.agent, self.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InitialIsFinal,
    AgentMissingFromTerminal { agent: String, atom: Terminal },
    /// `X(n,a,r)` is empty for a non-final atom.
    EmptyTargets(TripleName),
    /// `X(nf,a,r)` is nonempty.
    FinalHasTargets(TripleName),
    /// A goal pair that does not lead its agent to the final atom.
    GoalNotFinal { agent: String, atom: String, outcome: String },
    /// A goal pair whose atom does not have the agent as a party.
    GoalNotAParty { agent: String, atom: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialIsFinal => write!(f, "initial and final atom coincide"),
            Violation::AgentMissingFromTerminal { agent, atom } => {
                let which = match atom {
                    Terminal::Initial => "initial",
                    Terminal::Final => "final",
                };
                write!(f, "agent {agent} is not a party of the {which} atom")
            }
            Violation::EmptyTargets(t) => write!(f, "transition {t} is empty but the atom is not final"),
            Violation::FinalHasTargets(t) => write!(f, "transition {t} of the final atom must be empty"),
            Violation::GoalNotFinal { agent, atom, outcome } => write!(
                f,
                "goal ({atom},{outcome}) of agent {agent} does not lead to the final atom"
            ),
            Violation::GoalNotAParty { agent, atom } => {
                write!(f, "goal of agent {agent} names atom {atom} where it is not a party")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A set of atoms with pairwise disjoint parties, sorted by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndependentSet(pub Vec<AtomId>);

impl IndependentSet {
    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }
}

/// Per-agent readiness sets, packed agent-major into one bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    atoms: usize,
    bits: FixedBitSet,
}

impl Marking {
    /// The marking where no agent is ready for anything.
    pub fn empty(negotiation: &Negotiation) -> Self {
        let atoms = negotiation.atom_count();
        Marking {
            atoms,
            bits: FixedBitSet::with_capacity(atoms * negotiation.agent_count()),
        }
    }

    /// `x0`: every agent ready for the initial atom only.
    pub fn initial(negotiation: &Negotiation) -> Self {
        let mut m = Marking::empty(negotiation);
        for a in negotiation.agents() {
            m.set_ready(a, &[negotiation.initial()]);
        }
        m
    }

    /// `xf`: every agent ready for nothing.
    pub fn final_marking(negotiation: &Negotiation) -> Self {
        Marking::empty(negotiation)
    }

    pub fn is_final(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_ready(&self, agent: AgentId, atom: AtomId) -> bool {
        self.bits.contains(agent.index() * self.atoms + atom.index())
    }

    pub fn ready(&self, agent: AgentId) -> impl Iterator<Item = AtomId> + '_ {
        let base = agent.index() * self.atoms;
        (0..self.atoms)
            .filter(move |&n| self.bits.contains(base + n))
            .map(|n| AtomId(n as u32))
    }

    /// The atom an agent is ready for, when it is ready for exactly one.
    pub fn single_ready(&self, agent: AgentId) -> Option<AtomId> {
        let mut it = self.ready(agent);
        let first = it.next()?;
        match it.next() {
            None => Some(first),
            Some(_) => None,
        }
    }

    pub fn set_ready(&mut self, agent: AgentId, atoms: &[AtomId]) {
        let base = agent.index() * self.atoms;
        self.bits.set_range(base..base + self.atoms, false);
        for n in atoms {
            self.bits.insert(base + n.index());
        }
    }

    pub fn display<'a>(&'a self, negotiation: &'a Negotiation) -> MarkingDisplay<'a> {
        MarkingDisplay {
            marking: self,
            negotiation,
        }
    }
}

pub struct MarkingDisplay<'a> {
    marking: &'a Marking,
    negotiation: &'a Negotiation,
}

impl fmt::Display for MarkingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for a in self.negotiation.agents() {
            if a.index() > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:[", self.negotiation.agent_name(a))?;
            for (i, n) in self.marking.ready(a).enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.negotiation.atom_name(n))?;
            }
            write!(f, "]")?;
        }
        write!(f, "}}")
    }
}

/// Per-agent goal sets `G_a`.
///
/// `None` for an agent means no constraint on its concluding outcome;
/// `Some(empty)` means no concluding outcome is acceptable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goals {
    per_agent: Vec<Option<Vec<(AtomId, Outcome)>>>,
}

impl Goals {
    pub fn unconstrained(agents: usize) -> Self {
        Goals {
            per_agent: vec![None; agents],
        }
    }

    pub fn set(&mut self, agent: AgentId, mut pairs: Vec<(AtomId, Outcome)>) {
        pairs.sort_unstable();
        pairs.dedup();
        self.per_agent[agent.index()] = Some(pairs);
    }

    pub fn get(&self, agent: AgentId) -> Option<&[(AtomId, Outcome)]> {
        self.per_agent[agent.index()].as_deref()
    }

    pub fn is_constrained(&self, agent: AgentId) -> bool {
        self.per_agent[agent.index()].is_some()
    }

    /// Whether `(atom, outcome)` is an acceptable concluding outcome for `agent`.
    pub fn accepts(&self, agent: AgentId, atom: AtomId, outcome: Outcome) -> bool {
        match &self.per_agent[agent.index()] {
            None => true,
            Some(pairs) => pairs.binary_search(&(atom, outcome)).is_ok(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, &[(AtomId, Outcome)])> {
        self.per_agent
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_deref().map(|g| (AgentId(i as u32), g)))
    }

    pub fn agent_count(&self) -> usize {
        self.per_agent.len()
    }
}

/// A negotiation together with a partition of its atoms into `N1` and `N2`
/// and optional goal sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arena {
    negotiation: Negotiation,
    player1: Vec<bool>,
    coalition: Option<Vec<AgentId>>,
    goals: Option<Goals>,
}

impl Arena {
    /// Arena with `N1 = ∅`.
    pub fn new(negotiation: Negotiation) -> Self {
        let player1 = vec![false; negotiation.atom_count()];
        Arena {
            negotiation,
            player1,
            coalition: None,
            goals: None,
        }
    }

    /// Arena with an explicit `N1`.
    pub fn with_player1(negotiation: Negotiation, atoms: &[AtomId]) -> Self {
        let mut arena = Arena::new(negotiation);
        for a in atoms {
            arena.player1[a.index()] = true;
        }
        arena
    }

    /// Arena whose partition was derived from a coalition; the coalition is
    /// kept so it can be exported. An empty coalition is not recorded.
    pub(crate) fn from_coalition_parts(
        negotiation: Negotiation,
        player1: Vec<bool>,
        coalition: Vec<AgentId>,
    ) -> Self {
        Arena {
            negotiation,
            player1,
            coalition: if coalition.is_empty() { None } else { Some(coalition) },
            goals: None,
        }
    }

    pub fn with_goals(mut self, goals: Option<Goals>) -> Self {
        self.goals = goals;
        self
    }

    pub fn negotiation(&self) -> &Negotiation {
        &self.negotiation
    }

    pub fn into_negotiation(self) -> Negotiation {
        self.negotiation
    }

    pub fn owner(&self, atom: AtomId) -> Player {
        if self.player1[atom.index()] {
            Player::One
        } else {
            Player::Two
        }
    }

    pub fn player1_atoms(&self) -> Vec<AtomId> {
        self.negotiation
            .atom_ids()
            .filter(|a| self.player1[a.index()])
            .collect()
    }

    pub fn coalition(&self) -> Option<&[AgentId]> {
        self.coalition.as_deref()
    }

    pub fn goals(&self) -> Option<&Goals> {
        self.goals.as_ref()
    }

    /// Negotiation invariants plus goal well-formedness.
    pub fn validate(&self) -> ValidationReport {
        let mut report = self.negotiation.validate();
        if let Some(goals) = &self.goals {
            let neg = &self.negotiation;
            for (agent, pairs) in goals.iter() {
                for &(n, r) in pairs {
                    match neg.targets(n, agent, r) {
                        None => report.violations.push(Violation::GoalNotAParty {
                            agent: neg.agent_name(agent).to_string(),
                            atom: neg.atom_name(n).to_string(),
                        }),
                        Some(t) if !t.contains(&neg.final_atom()) => {
                            report.violations.push(Violation::GoalNotFinal {
                                agent: neg.agent_name(agent).to_string(),
                                atom: neg.atom_name(n).to_string(),
                                outcome: neg.outcome_name(n, r).to_string(),
                            })
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        report
    }
}
