//! Explicit game-graph solver for arbitrary arenas.
//!
//! Scheduler nodes are markings (paired with per-agent goal flags in the
//! concluding-outcome game). From a marking, Scheduler picks a nonempty
//! independent set `S` of enabled atoms, which yields a choice node. Both
//! players then fix outcomes for their atoms in `S` simultaneously, Player 1
//! committing without seeing Player 2's choice. A choice node is stored as a
//! successor matrix with one row per Player 1 assignment and one column per
//! Player 2 assignment.

use std::collections::{HashMap, VecDeque};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::model::{Arena, AtomId, Marking, Negotiation, Outcome, Player};
use crate::semantics::{enabled_atoms, Play, PlayEnd, Step, DEFAULT_MAX_MARKINGS};

/// Default bound on the size of a single choice node's successor matrix.
pub const DEFAULT_MAX_MOVES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Termination,
    ConcludingOutcome,
}

#[derive(Debug, Clone, Copy)]
pub struct GraphOptions {
    pub max_markings: usize,
    pub max_moves: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            max_markings: DEFAULT_MAX_MARKINGS,
            max_moves: DEFAULT_MAX_MOVES,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneralError {
    #[error("game graph exceeds the limit of {limit} scheduler nodes")]
    TooManyMarkings { limit: usize },
    #[error("choice node at {marking} with atoms {atoms} has {moves} moves, over the limit of {limit}")]
    TooManyMoves {
        marking: String,
        atoms: String,
        moves: usize,
        limit: usize,
    },
    #[error("the concluding-outcome game needs goal declarations")]
    MissingGoals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Final marking that satisfies the winning condition.
    Target,
    /// Final marking whose goal flags are not all set.
    FinalLosing,
    Deadlock,
    Inner,
}

#[derive(Debug, Clone)]
pub struct SchedulerNode {
    pub marking: Marking,
    /// Goal flag per agent; empty in the termination game.
    pub flags: FixedBitSet,
    pub kind: NodeKind,
    /// Choice nodes `first_choice .. first_choice + choice_count`.
    pub first_choice: u32,
    pub choice_count: u32,
}

#[derive(Debug, Clone)]
pub struct ChoiceNode {
    pub scheduler: u32,
    pub atoms: Vec<AtomId>,
    pub player1_atoms: Vec<AtomId>,
    pub player2_atoms: Vec<AtomId>,
    pub rows: u32,
    pub cols: u32,
    /// Successor scheduler node for `row * cols + col`.
    pub succ: Vec<u32>,
}

impl ChoiceNode {
    pub fn successor(&self, row: u32, col: u32) -> u32 {
        self.succ[(row * self.cols + col) as usize]
    }
}

/// Outcomes for `atoms` encoded by `index`, first atom most significant.
pub fn decode_assignment(negotiation: &Negotiation, atoms: &[AtomId], mut index: u32) -> Vec<Outcome> {
    let mut out = vec![Outcome(0); atoms.len()];
    for (i, &n) in atoms.iter().enumerate().rev() {
        let k = negotiation.atom(n).outcomes.len() as u32;
        out[i] = Outcome(index % k);
        index /= k;
    }
    out
}

/// Inverse of [`decode_assignment`].
pub fn encode_assignment(negotiation: &Negotiation, atoms: &[AtomId], outcomes: &[Outcome]) -> u32 {
    atoms.iter().zip(outcomes).fold(0, |acc, (&n, r)| {
        acc * negotiation.atom(n).outcomes.len() as u32 + r.0
    })
}

#[derive(Debug, Clone)]
pub struct GameGraph {
    pub arena: Arena,
    pub mode: Mode,
    pub nodes: Vec<SchedulerNode>,
    pub choices: Vec<ChoiceNode>,
}

impl GameGraph {
    pub fn negotiation(&self) -> &Negotiation {
        self.arena.negotiation()
    }

    pub fn children(&self, node: u32) -> std::ops::Range<u32> {
        let n = &self.nodes[node as usize];
        n.first_choice..n.first_choice + n.choice_count
    }

    /// The steps fired at a choice node for a given row and column.
    pub fn steps(&self, choice: u32, row: u32, col: u32) -> Vec<Step> {
        let c = &self.choices[choice as usize];
        let neg = self.negotiation();
        let r1 = decode_assignment(neg, &c.player1_atoms, row);
        let r2 = decode_assignment(neg, &c.player2_atoms, col);
        let mut steps: Vec<Step> = c
            .player1_atoms
            .iter()
            .zip(r1)
            .chain(c.player2_atoms.iter().zip(r2))
            .map(|(&n, r)| Step::new(n, r))
            .collect();
        steps.sort();
        steps
    }

    /// `marking` or `marking flags` for display.
    pub fn describe(&self, node: u32) -> String {
        let n = &self.nodes[node as usize];
        let neg = self.negotiation();
        let m = n.marking.display(neg).to_string();
        if self.mode == Mode::Termination {
            return m;
        }
        let flags: String = (0..neg.agent_count())
            .map(|i| if n.flags.contains(i) { '1' } else { '0' })
            .collect();
        format!("{m} goals={flags}")
    }
}

/// Builds the full game graph reachable from `x0`.
pub fn build_game_graph(arena: &Arena, mode: Mode, options: GraphOptions) -> Result<GameGraph, GeneralError> {
    let neg = arena.negotiation();
    let goals = match mode {
        Mode::Termination => None,
        Mode::ConcludingOutcome => Some(arena.goals().ok_or(GeneralError::MissingGoals)?),
    };
    let agents = neg.agent_count();
    let nf = neg.final_atom();
    let flag_len = if goals.is_some() { agents } else { 0 };
    let mut start_flags = FixedBitSet::with_capacity(flag_len);
    start_flags.insert_range(..);

    let mut index: HashMap<(Marking, FixedBitSet), u32> = HashMap::new();
    let mut nodes: Vec<SchedulerNode> = Vec::new();
    let mut choices: Vec<ChoiceNode> = Vec::new();
    let x0 = Marking::initial(neg);
    index.insert((x0.clone(), start_flags.clone()), 0);
    nodes.push(SchedulerNode {
        marking: x0,
        flags: start_flags,
        kind: NodeKind::Inner,
        first_choice: 0,
        choice_count: 0,
    });

    let mut next = 0usize;
    while next < nodes.len() {
        let marking = nodes[next].marking.clone();
        let flags = nodes[next].flags.clone();
        let enabled = enabled_atoms(neg, &marking);
        let kind = if marking.is_final() {
            if flags.is_full() {
                NodeKind::Target
            } else {
                NodeKind::FinalLosing
            }
        } else if enabled.is_empty() {
            NodeKind::Deadlock
        } else {
            NodeKind::Inner
        };
        let first_choice = choices.len() as u32;
        for set in neg.independent_sets(&enabled) {
            let atoms = set.0;
            let (p1, p2): (Vec<AtomId>, Vec<AtomId>) =
                atoms.iter().partition(|&&n| arena.owner(n) == Player::One);
            let count = |v: &[AtomId]| {
                v.iter()
                    .try_fold(1usize, |acc, &n| acc.checked_mul(neg.atom(n).outcomes.len()))
            };
            let moves = count(&p1).and_then(|a| count(&p2).and_then(|b| a.checked_mul(b)));
            let (rows, cols) = match moves {
                Some(m) if m <= options.max_moves => (count(&p1).unwrap(), count(&p2).unwrap()),
                _ => {
                    return Err(GeneralError::TooManyMoves {
                        marking: marking.display(neg).to_string(),
                        atoms: atoms.iter().map(|&n| neg.atom_name(n)).collect::<Vec<_>>().join(","),
                        moves: moves.unwrap_or(usize::MAX),
                        limit: options.max_moves,
                    })
                }
            };
            let mut succ = Vec::with_capacity(rows * cols);
            for row in 0..rows as u32 {
                let r1 = decode_assignment(neg, &p1, row);
                for col in 0..cols as u32 {
                    let r2 = decode_assignment(neg, &p2, col);
                    let mut y = marking.clone();
                    let mut f = flags.clone();
                    for (&n, &r) in p1.iter().zip(&r1).chain(p2.iter().zip(&r2)) {
                        for (slot, &a) in neg.atom(n).parties.iter().enumerate() {
                            y.set_ready(a, neg.targets_at(n, slot, r));
                            if let Some(g) = goals {
                                if n != nf {
                                    f.set(a.index(), g.accepts(a, n, r));
                                }
                            }
                        }
                    }
                    let key = (y, f);
                    let id = match index.get(&key) {
                        Some(&id) => id,
                        None => {
                            if nodes.len() >= options.max_markings {
                                return Err(GeneralError::TooManyMarkings {
                                    limit: options.max_markings,
                                });
                            }
                            let id = nodes.len() as u32;
                            nodes.push(SchedulerNode {
                                marking: key.0.clone(),
                                flags: key.1.clone(),
                                kind: NodeKind::Inner,
                                first_choice: 0,
                                choice_count: 0,
                            });
                            index.insert(key, id);
                            id
                        }
                    };
                    succ.push(id);
                }
            }
            choices.push(ChoiceNode {
                scheduler: next as u32,
                atoms,
                player1_atoms: p1,
                player2_atoms: p2,
                rows: rows as u32,
                cols: cols as u32,
                succ,
            });
        }
        let node = &mut nodes[next];
        node.kind = kind;
        node.first_choice = first_choice;
        node.choice_count = choices.len() as u32 - first_choice;
        next += 1;
    }
    Ok(GameGraph {
        arena: arena.clone(),
        mode,
        nodes,
        choices,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Scheduler helps Player 1 instead of opposing it.
    pub friendly_scheduler: bool,
}

/// Positional strategies on the game graph. Missing entries default to the
/// first choice node, row 0 and column 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Strategies {
    /// Row per choice node.
    pub player1: Vec<Option<u32>>,
    /// Column per choice node.
    pub player2: Vec<Option<u32>>,
    /// Choice node per scheduler node.
    pub scheduler: Vec<Option<u32>>,
}

#[derive(Debug, Clone)]
pub struct GameResult {
    pub player1_wins: bool,
    pub winning_nodes: Vec<bool>,
    pub winning_choices: Vec<bool>,
    pub strategies: Strategies,
    /// Every losing choice node has a column that beats all rows.
    pub player2_positional: bool,
    pub friendly_scheduler: bool,
    pub witness: Play,
}

/// Solves the game by backward induction from the target nodes.
pub fn solve_game(graph: &GameGraph, options: SolveOptions) -> GameResult {
    let nodes = graph.nodes.len();
    let choices = graph.choices.len();
    // Rows waiting for each scheduler node: (choice, row) pairs, once per cell.
    let mut waiting: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nodes];
    let mut row_pending: Vec<Vec<u32>> = Vec::with_capacity(choices);
    for (ci, c) in graph.choices.iter().enumerate() {
        row_pending.push(vec![c.cols; c.rows as usize]);
        for row in 0..c.rows {
            for col in 0..c.cols {
                waiting[c.successor(row, col) as usize].push((ci as u32, row));
            }
        }
    }
    let mut node_pending: Vec<u32> = graph.nodes.iter().map(|n| n.choice_count).collect();
    let mut win_node = vec![false; nodes];
    let mut win_choice = vec![false; choices];
    let mut strategy1: Vec<Option<u32>> = vec![None; choices];
    let mut sched: Vec<Option<u32>> = vec![None; nodes];

    let mut queue: VecDeque<u32> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == NodeKind::Target)
        .map(|(i, _)| i as u32)
        .collect();
    for &v in &queue {
        win_node[v as usize] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &(ci, row) in &waiting[v as usize] {
            let ci = ci as usize;
            row_pending[ci][row as usize] -= 1;
            if row_pending[ci][row as usize] == 0 && !win_choice[ci] {
                win_choice[ci] = true;
                strategy1[ci] = Some(row);
                let s = graph.choices[ci].scheduler as usize;
                if win_node[s] {
                    continue;
                }
                node_pending[s] -= 1;
                let wins = if options.friendly_scheduler {
                    sched[s] = Some(ci as u32);
                    true
                } else {
                    node_pending[s] == 0
                };
                if wins {
                    win_node[s] = true;
                    queue.push_back(s as u32);
                }
            }
        }
    }

    // Player 2 columns at losing choice nodes.
    let mut strategy2: Vec<Option<u32>> = vec![None; choices];
    let mut uniform = vec![false; choices];
    for (ci, c) in graph.choices.iter().enumerate() {
        if win_choice[ci] {
            continue;
        }
        let spoils = |col: u32, rows: std::ops::Range<u32>| {
            rows.into_iter().all(|row| !win_node[c.successor(row, col) as usize])
        };
        if let Some(col) = (0..c.cols).find(|&col| spoils(col, 0..c.rows)) {
            strategy2[ci] = Some(col);
            uniform[ci] = true;
        } else {
            strategy2[ci] = (0..c.cols).find(|&col| spoils(col, 0..1));
        }
    }
    // Scheduler at losing nodes: a losing child, preferably one with a uniform spoiler.
    for (v, n) in graph.nodes.iter().enumerate() {
        if win_node[v] {
            continue;
        }
        let losing: Vec<u32> = graph
            .children(v as u32)
            .filter(|&c| !win_choice[c as usize])
            .collect();
        sched[v] = losing
            .iter()
            .copied()
            .find(|&c| uniform[c as usize])
            .or_else(|| losing.first().copied());
        let _ = n;
    }
    let player2_positional = (0..choices).all(|c| win_choice[c] || uniform[c]);

    let strategies = Strategies {
        player1: strategy1,
        player2: strategy2,
        scheduler: sched,
    };
    let witness = play(graph, &strategies, graph.nodes.len() + 1);
    GameResult {
        player1_wins: win_node[0],
        winning_nodes: win_node,
        winning_choices: win_choice,
        strategies,
        player2_positional,
        friendly_scheduler: options.friendly_scheduler,
        witness,
    }
}

/// Follows positional strategies from the initial node. Scheduler takes its
/// table entry or else the first choice node; the players take their entry or
/// else row/column 0. Stops at a node without choices or when a node repeats.
pub fn play(graph: &GameGraph, strategies: &Strategies, max_rounds: usize) -> Play {
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut rounds = Vec::new();
    let mut v = 0u32;
    loop {
        let node = &graph.nodes[v as usize];
        match node.kind {
            NodeKind::Target | NodeKind::FinalLosing => {
                return Play {
                    rounds,
                    end: PlayEnd::Final,
                }
            }
            NodeKind::Deadlock => {
                return Play {
                    rounds,
                    end: PlayEnd::Deadlock,
                }
            }
            NodeKind::Inner => {}
        }
        if let Some(&start) = seen.get(&v) {
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
        seen.insert(v, rounds.len());
        let ci = strategies
            .scheduler
            .get(v as usize)
            .copied()
            .flatten()
            .unwrap_or(node.first_choice);
        let row = strategies.player1.get(ci as usize).copied().flatten().unwrap_or(0);
        let col = strategies.player2.get(ci as usize).copied().flatten().unwrap_or(0);
        rounds.push(graph.steps(ci, row, col));
        v = graph.choices[ci as usize].successor(row, col);
    }
}

/// Why a strategy fails to win.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyFailure {
    /// A reachable node from which the play can stall or end without winning.
    Stuck { node: u32 },
    /// A cycle in the graph restricted by Player 1's strategy.
    Cycle { node: u32 },
    /// A target node reachable despite Player 2's strategy.
    TargetReached { node: u32 },
}

/// Checks that Player 1's strategy wins: in the graph where Player 1 follows
/// its rows and everybody else ranges freely (or Scheduler follows its table
/// when friendly), every path reaches a target and there is no cycle.
pub fn verify_player1(graph: &GameGraph, result: &GameResult) -> Result<(), StrategyFailure> {
    let succ = |v: u32| -> Vec<u32> {
        let node = &graph.nodes[v as usize];
        if node.kind == NodeKind::Target {
            return Vec::new();
        }
        let picks: Vec<u32> = if result.friendly_scheduler {
            result.strategies.scheduler[v as usize].into_iter().collect()
        } else {
            graph.children(v).collect()
        };
        let mut out = Vec::new();
        for ci in picks {
            let c = &graph.choices[ci as usize];
            let row = result.strategies.player1[ci as usize].unwrap_or(0);
            out.extend((0..c.cols).map(|col| c.successor(row, col)));
        }
        out
    };
    // Iterative DFS for cycles and non-target leaves.
    let n = graph.nodes.len();
    let mut colour = vec![0u8; n];
    let mut stack: Vec<(u32, Vec<u32>, usize)> = vec![(0, succ(0), 0)];
    colour[0] = 1;
    while let Some((v, out, i)) = stack.last_mut() {
        let v = *v;
        if out.is_empty() && graph.nodes[v as usize].kind != NodeKind::Target {
            return Err(StrategyFailure::Stuck { node: v });
        }
        if let Some(&w) = out.get(*i) {
            *i += 1;
            match colour[w as usize] {
                0 => {
                    colour[w as usize] = 1;
                    let s = succ(w);
                    stack.push((w, s, 0));
                }
                1 => return Err(StrategyFailure::Cycle { node: w }),
                _ => {}
            }
        } else {
            colour[v as usize] = 2;
            stack.pop();
        }
    }
    Ok(())
}

/// Checks that Player 2's strategy wins: in the graph where Player 2 follows
/// its columns, Scheduler its table (or everything when friendly) and
/// Player 1 ranges freely, no target node is reachable.
pub fn verify_player2(graph: &GameGraph, result: &GameResult) -> Result<(), StrategyFailure> {
    let mut seen = vec![false; graph.nodes.len()];
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        let node = &graph.nodes[v as usize];
        if node.kind == NodeKind::Target {
            return Err(StrategyFailure::TargetReached { node: v });
        }
        let picks: Vec<u32> = if result.friendly_scheduler {
            graph.children(v).collect()
        } else {
            result.strategies.scheduler[v as usize].into_iter().collect()
        };
        if picks.is_empty() && node.kind == NodeKind::Inner {
            return Err(StrategyFailure::Stuck { node: v });
        }
        for ci in picks {
            let c = &graph.choices[ci as usize];
            let col = result.strategies.player2[ci as usize].unwrap_or(0);
            for row in 0..c.rows {
                let w = c.successor(row, col);
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    Ok(())
}
