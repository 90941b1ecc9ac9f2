//! Text formats: `.neg` models, DOT graphs and JSON reports.

mod dot;
mod neg;
pub mod report;

pub use dot::{export_dot, export_state_graph};
pub use neg::{export, parse, parse_step, parse_unvalidated, resolve_agents, resolve_atoms, ParseError};
