//! Solver selection, reports, and replay of saved strategies.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::anyhow;

use neggame::attractor::{decide_termination, play_positional, AttractorResult, Soundness};
use neggame::general::{
    build_game_graph, encode_assignment, play, solve_game, GameGraph, GraphOptions, Mode, SolveOptions,
    Strategies,
};
use neggame::outcome::{solve_concluding_outcome, transform, TransformError};
use neggame::semantics::{check_soundness_with_limit, classify, Play};
use neggame::textio::report::{
    SchedulerEntry, SolveReport, StrategyEntry, StrategyKind, StrategyReport, WitnessReport, Winner,
};
use neggame::textio::parse_step;
use neggame::{Arena, AtomId, Negotiation, Outcome};

use crate::{precondition, usage, Failure, SolveArgs, SolverChoice, Status};

/// Attractor plays stop at the first repeated marking, so this only guards
/// against pathological inputs.
const PLAY_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_states: usize,
    pub max_moves: usize,
}

impl Limits {
    fn graph(self) -> GraphOptions {
        GraphOptions {
            max_markings: self.max_states,
            max_moves: self.max_moves,
        }
    }
}

fn game_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Termination => "termination",
        Mode::ConcludingOutcome => "concluding-outcome",
    }
}

fn mode_named(name: &str) -> Result<Mode, Failure> {
    match name {
        "termination" => Ok(Mode::Termination),
        "concluding-outcome" => Ok(Mode::ConcludingOutcome),
        other => Err(usage(anyhow!("unknown game '{other}' in report"))),
    }
}

fn transform_failure(e: TransformError) -> Failure {
    precondition(e)
}

/// The arena the attractor solver would work on, if its preconditions hold.
fn attractor_applies(arena: &Arena, mode: Mode, soundness: Soundness) -> Result<bool, Failure> {
    let transformed;
    let target = match mode {
        Mode::Termination => arena,
        Mode::ConcludingOutcome => {
            transformed = transform(arena).map_err(transform_failure)?.0;
            &transformed
        }
    };
    let neg = target.negotiation();
    if !classify(neg).type2 {
        return Ok(false);
    }
    match soundness {
        Soundness::Assume => Ok(true),
        Soundness::Verify { max_markings } => Ok(check_soundness_with_limit(neg, max_markings)
            .map_err(precondition)?
            .sound),
    }
}

pub fn solve(arena: &Arena, mode: Mode, args: &SolveArgs, output: Option<&Path>) -> Status {
    if args.friendly_scheduler && args.solver == SolverChoice::Attractor {
        return Err(usage(anyhow!(
            "--friendly-scheduler needs the game-graph solver"
        )));
    }
    let soundness = if args.assume_sound {
        Soundness::Assume
    } else {
        Soundness::Verify {
            max_markings: args.max_states,
        }
    };
    let use_attractor = match args.solver {
        SolverChoice::Attractor => true,
        SolverChoice::General => false,
        SolverChoice::Auto => !args.friendly_scheduler && attractor_applies(arena, mode, soundness)?,
    };
    let limits = Limits {
        max_states: args.max_states,
        max_moves: args.max_moves,
    };
    let (report, lines) = if use_attractor {
        by_attractor(arena, mode, soundness)?
    } else {
        by_game_graph(arena, mode, limits, args.friendly_scheduler)?
    };
    for line in lines {
        println!("{line}");
    }
    if let Some(path) = output {
        let json = serde_json::to_string_pretty(&report).expect("reports serialise");
        fs::write(path, json + "\n").map_err(|e| usage(anyhow!("cannot write {}: {e}", path.display())))?;
    }
    Ok(match report.winner {
        Winner::Player1 => 0,
        Winner::Player2 => 1,
    })
}

fn winner(player1_wins: bool) -> Winner {
    if player1_wins {
        Winner::Player1
    } else {
        Winner::Player2
    }
}

fn winner_line(w: Winner) -> String {
    match w {
        Winner::Player1 => "winner: Player 1".to_string(),
        Winner::Player2 => "winner: Player 2".to_string(),
    }
}

fn by_attractor(arena: &Arena, mode: Mode, soundness: Soundness) -> Result<(SolveReport, Vec<String>), Failure> {
    let (solved, attractor, wins) = match mode {
        Mode::Termination => {
            let v = decide_termination(arena, soundness).map_err(precondition)?;
            (arena.clone(), v.attractor, v.player1_wins)
        }
        Mode::ConcludingOutcome => {
            let v = solve_concluding_outcome(arena, soundness).map_err(transform_failure)?;
            (v.transformed, v.attractor, v.player1_wins)
        }
    };
    let neg = solved.negotiation();
    let witness = play_positional(neg, |n| attractor.choice(n), PLAY_LIMIT);

    let indices: BTreeMap<String, Option<u32>> = neg
        .atom_ids()
        .map(|n| (neg.atom_name(n).to_string(), attractor.index[n.index()]))
        .collect();
    let entries = |table: &[Option<Outcome>]| -> Vec<StrategyEntry> {
        neg.atom_ids()
            .filter_map(|n| {
                table[n.index()].map(|r| StrategyEntry {
                    node: None,
                    marking: None,
                    steps: vec![neggame::semantics::Step::new(n, r).display(neg).to_string()],
                })
            })
            .collect()
    };
    let report = SolveReport {
        winner: winner(wins),
        game: game_name(mode).to_string(),
        solver: "attractor".to_string(),
        friendly_scheduler: false,
        attractor_indices: Some(indices),
        strategy: Some(StrategyReport {
            kind: StrategyKind::Attractor,
            player1: entries(&attractor.strategy1),
            player2: entries(&attractor.strategy2),
            scheduler: Vec::new(),
        }),
        witness: Some(WitnessReport::from_play(neg, &witness)),
    };

    let mut lines = vec![
        format!("game: {}", game_name(mode)),
        "solver: attractor".to_string(),
        winner_line(report.winner),
    ];
    if mode == Mode::ConcludingOutcome {
        lines.push(format!("transformed arena: {} atoms", neg.atom_count()));
    }
    lines.push(format!("attractor: {}", render_indices(neg, &attractor)));
    lines.push(format!("witness: {}", witness.render(neg)));
    Ok((report, lines))
}

fn render_indices(neg: &Negotiation, attractor: &AttractorResult) -> String {
    let mut inside: Vec<(u32, AtomId)> = neg
        .atom_ids()
        .filter_map(|n| attractor.index[n.index()].map(|k| (k, n)))
        .collect();
    inside.sort();
    let mut parts: Vec<String> = inside
        .iter()
        .map(|&(k, n)| format!("{}={k}", neg.atom_name(n)))
        .collect();
    let outside: Vec<&str> = neg
        .atom_ids()
        .filter(|&n| !attractor.contains(n))
        .map(|n| neg.atom_name(n))
        .collect();
    if !outside.is_empty() {
        parts.push(format!("(outside: {})", outside.join(" ")));
    }
    parts.join(" ")
}

fn step_strings(neg: &Negotiation, atoms: &[AtomId], outcomes: &[Outcome]) -> Vec<String> {
    atoms
        .iter()
        .zip(outcomes)
        .map(|(&n, &r)| neggame::semantics::Step::new(n, r).display(neg).to_string())
        .collect()
}

fn by_game_graph(
    arena: &Arena,
    mode: Mode,
    limits: Limits,
    friendly: bool,
) -> Result<(SolveReport, Vec<String>), Failure> {
    let g = build_game_graph(arena, mode, limits.graph()).map_err(precondition)?;
    let r = solve_game(
        &g,
        SolveOptions {
            friendly_scheduler: friendly,
        },
    );
    let neg = g.negotiation();
    let mut player1 = Vec::new();
    let mut player2 = Vec::new();
    for (ci, c) in g.choices.iter().enumerate() {
        let marking = Some(g.describe(c.scheduler));
        if let (false, Some(row)) = (c.player1_atoms.is_empty(), r.strategies.player1[ci]) {
            let outcomes = neggame::general::decode_assignment(neg, &c.player1_atoms, row);
            player1.push(StrategyEntry {
                node: Some(ci as u32),
                marking: marking.clone(),
                steps: step_strings(neg, &c.player1_atoms, &outcomes),
            });
        }
        if let (false, Some(col)) = (c.player2_atoms.is_empty(), r.strategies.player2[ci]) {
            let outcomes = neggame::general::decode_assignment(neg, &c.player2_atoms, col);
            player2.push(StrategyEntry {
                node: Some(ci as u32),
                marking,
                steps: step_strings(neg, &c.player2_atoms, &outcomes),
            });
        }
    }
    let scheduler = (0..g.nodes.len())
        .filter_map(|v| {
            r.strategies.scheduler[v].map(|ci| SchedulerEntry {
                node: v as u32,
                marking: g.describe(v as u32),
                atoms: g.choices[ci as usize]
                    .atoms
                    .iter()
                    .map(|&n| neg.atom_name(n).to_string())
                    .collect(),
            })
        })
        .collect();
    let report = SolveReport {
        winner: winner(r.player1_wins),
        game: game_name(mode).to_string(),
        solver: "general".to_string(),
        friendly_scheduler: friendly,
        attractor_indices: None,
        strategy: Some(StrategyReport {
            kind: StrategyKind::GameGraph,
            player1,
            player2,
            scheduler,
        }),
        witness: Some(WitnessReport::from_play(neg, &r.witness)),
    };
    let mut lines = vec![
        format!("game: {}", game_name(mode)),
        format!(
            "solver: general ({} scheduler nodes, {} choice nodes{})",
            g.nodes.len(),
            g.choices.len(),
            if friendly { ", friendly scheduler" } else { "" }
        ),
        winner_line(report.winner),
    ];
    if !r.player1_wins && !r.player2_positional {
        lines.push("note: Player 2 has no single spoiling move at some node; the reported move beats row 0".to_string());
    }
    lines.push(format!("witness: {}", r.witness.render(neg)));
    Ok((report, lines))
}

fn parse_steps(arena: &Arena, steps: &[String]) -> Result<HashMap<AtomId, Outcome>, Failure> {
    steps
        .iter()
        .map(|s| parse_step(arena, s).map_err(|e| usage(anyhow!(e))))
        .collect()
}

fn mismatch(what: &str) -> Failure {
    usage(anyhow!("strategy does not fit this arena: {what}"))
}

fn graph_strategies(g: &GameGraph, report: &StrategyReport) -> Result<Strategies, Failure> {
    let arena = &g.arena;
    let neg = g.negotiation();
    let mut s = Strategies {
        player1: vec![None; g.choices.len()],
        player2: vec![None; g.choices.len()],
        scheduler: vec![None; g.nodes.len()],
    };
    for (entries, player1) in [(&report.player1, true), (&report.player2, false)] {
        for e in entries {
            let ci = e.node.ok_or_else(|| mismatch("entry without node"))? as usize;
            let c = g.choices.get(ci).ok_or_else(|| mismatch("unknown choice node"))?;
            if e.marking.as_deref().is_some_and(|m| m != g.describe(c.scheduler)) {
                return Err(mismatch(&format!("marking differs at choice node {ci}")));
            }
            let table = parse_steps(arena, &e.steps)?;
            let atoms = if player1 { &c.player1_atoms } else { &c.player2_atoms };
            let outcomes: Vec<Outcome> = atoms
                .iter()
                .map(|n| table.get(n).copied().ok_or_else(|| mismatch(&format!("no move for {}", neg.atom_name(*n)))))
                .collect::<Result<_, _>>()?;
            let index = encode_assignment(neg, atoms, &outcomes);
            if player1 {
                s.player1[ci] = Some(index);
            } else {
                s.player2[ci] = Some(index);
            }
        }
    }
    for e in &report.scheduler {
        let v = e.node as usize;
        if v >= g.nodes.len() || e.marking != g.describe(e.node) {
            return Err(mismatch(&format!("scheduler node {v}")));
        }
        let ci = g
            .children(e.node)
            .find(|&ci| {
                let atoms = &g.choices[ci as usize].atoms;
                atoms.len() == e.atoms.len() && atoms.iter().zip(&e.atoms).all(|(&n, name)| neg.atom_name(n) == name)
            })
            .ok_or_else(|| mismatch(&format!("no choice {{{}}} at node {v}", e.atoms.join(","))))?;
        s.scheduler[v] = Some(ci);
    }
    Ok(s)
}

/// Replays the strategies of a saved report. Returns the negotiation the
/// play refers to, which is the transformed one for attractor solutions of
/// the concluding-outcome game.
pub fn follow(arena: &Arena, report: &SolveReport, limits: Limits) -> Result<(Negotiation, Play), Failure> {
    let mode = mode_named(&report.game)?;
    let strategy = report
        .strategy
        .as_ref()
        .ok_or_else(|| usage(anyhow!("report carries no strategy")))?;
    match strategy.kind {
        StrategyKind::Attractor => {
            let target = match mode {
                Mode::Termination => arena.clone(),
                Mode::ConcludingOutcome => transform(arena).map_err(transform_failure)?.0,
            };
            let mut table = HashMap::new();
            for e in strategy.player1.iter().chain(&strategy.player2) {
                table.extend(parse_steps(&target, &e.steps)?);
            }
            let neg = target.negotiation();
            let p = play_positional(neg, |n| table.get(&n).copied().unwrap_or(Outcome(0)), PLAY_LIMIT);
            Ok((neg.clone(), p))
        }
        StrategyKind::GameGraph => {
            let g = build_game_graph(arena, mode, limits.graph()).map_err(precondition)?;
            let s = graph_strategies(&g, strategy)?;
            let p = play(&g, &s, g.nodes.len() + 1);
            Ok((g.negotiation().clone(), p))
        }
    }
}
