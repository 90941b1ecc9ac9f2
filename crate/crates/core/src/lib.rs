//! Games on distributed negotiations.
//!
//! A negotiation is a set of atoms, each a small multi-party agreement with a
//! finite set of outcomes. Agents move from atom to atom according to the
//! outcomes chosen. This crate parses negotiations, checks soundness and
//! determinism, and decides two games played on them: the termination game
//! and the concluding-outcome game. Two solvers are provided, an explicit
//! game-graph solver that works on every arena and a linear attractor solver
//! for sound arenas in which every atom has a deterministic party.

pub mod atm;
pub mod attractor;
pub mod coalition;
pub mod fixtures;
pub mod general;
pub mod model;
pub mod outcome;
pub mod random;
pub mod semantics;
pub mod textio;

pub use model::{AgentId, Arena, Atom, AtomId, Goals, Marking, Negotiation, NegotiationBuilder, Outcome, Player};
