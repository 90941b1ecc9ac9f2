//! Machine-readable solver reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Player1,
    Player2,
}

/// One entry of a strategy table. Attractor strategies are keyed by atom
/// only; game-graph strategies by node id, with the marking and the fired
/// atoms given for reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyEntry {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub marking: Option<String>,
    /// Steps chosen, written `(atom,outcome)`.
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SchedulerEntry {
    pub node: u32,
    pub marking: String,
    pub atoms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StrategyKind {
    Attractor,
    GameGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyReport {
    pub kind: StrategyKind,
    pub player1: Vec<StrategyEntry>,
    pub player2: Vec<StrategyEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scheduler: Vec<SchedulerEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PlayKind {
    Terminating,
    Deadlock,
    Lasso,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessReport {
    pub kind: PlayKind,
    /// Rounds before the loop; each round lists its steps.
    pub prefix: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cycle: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub winner: Winner,
    pub game: String,
    pub solver: String,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub friendly_scheduler: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attractor_indices: Option<std::collections::BTreeMap<String, Option<u32>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strategy: Option<StrategyReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<WitnessReport>,
}

impl WitnessReport {
    pub fn from_play(negotiation: &crate::model::Negotiation, play: &crate::semantics::Play) -> Self {
        use crate::semantics::PlayEnd;
        let round = |r: &Vec<crate::semantics::Step>| -> Vec<String> {
            r.iter().map(|s| s.display(negotiation).to_string()).collect()
        };
        let (kind, split) = match play.end {
            PlayEnd::Final => (PlayKind::Terminating, play.rounds.len()),
            PlayEnd::Deadlock => (PlayKind::Deadlock, play.rounds.len()),
            PlayEnd::Truncated => (PlayKind::Truncated, play.rounds.len()),
            PlayEnd::Cycle { start } => (PlayKind::Lasso, start),
        };
        WitnessReport {
            kind,
            prefix: play.rounds[..split].iter().map(round).collect(),
            cycle: play.rounds[split..].iter().map(round).collect(),
        }
    }
}
