//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! with status 1 if any of them fails.

use std::time::{Duration, Instant};

use neggame::atm::{encode_deterministic, encode_nondeterministic, Atm};
use neggame::attractor::{compute_attractor, decide_termination, validate_strategies, Soundness};
use neggame::coalition::{partition_from_coalition, retarget_control, Coalition, RetargetOptions};
use neggame::fixtures::{self, load};
use neggame::general::{
    build_game_graph, solve_game, verify_player2, GameResult, GraphOptions, Mode,
    SolveOptions,
};
use neggame::outcome::solve_concluding_outcome;
use neggame::random::{chain_arena, random_arena, RandomParams};
use neggame::semantics::{check_soundness, classify, explore, PlayEnd};
use neggame::{Arena, Player};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn solve(arena: &Arena, mode: Mode) -> Result<GameResult, String> {
    let g = build_game_graph(arena, mode, GraphOptions::default()).map_err(|e| e.to_string())?;
    Ok(solve_game(&g, SolveOptions::default()))
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

fn with_coalition(arena: &Arena, members: &[&str]) -> Arena {
    let neg = arena.negotiation();
    let c = Coalition::new(members.iter().map(|m| neg.agent_named(m).unwrap()).collect());
    partition_from_coalition(neg.clone(), &c).with_goals(arena.goals().cloned())
}

fn family_fixtures() -> Outcome {
    let start = Instant::now();
    let right = load(fixtures::FAMILY_CYCLIC);
    let class = classify(right.negotiation());
    ensure!(class.deterministic, "family_cyclic is not deterministic");
    let report = check_soundness(right.negotiation()).map_err(|e| e.to_string())?;
    ensure!(report.sound, "family_cyclic: {}", report.render(right.negotiation()));

    let left = load(fixtures::FAMILY_ACYCLIC);
    let class = classify(left.negotiation());
    ensure!(!class.deterministic && class.weakly_deterministic, "family_acyclic classified {class:?}");
    let report = check_soundness(left.negotiation()).map_err(|e| e.to_string())?;
    ensure!(report.sound, "family_acyclic: {}", report.render(left.negotiation()));

    let broken = load(fixtures::FAMILY_DEADLOCK);
    let neg = broken.negotiation();
    let report = check_soundness(neg).map_err(|e| e.to_string())?;
    ensure!(!report.sound, "family_deadlock reported sound");
    let witness = report
        .deadlock_witness
        .as_ref()
        .map(|w| neggame::semantics::format_steps(neg, w))
        .unwrap_or_default();
    ensure!(witness == "(n0,st) (n1,y)", "deadlock witness '{witness}'");
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("deadlock witness {witness}, {took:?}"))
}

fn two_daughters_game() -> Outcome {
    let start = Instant::now();
    let arena = with_coalition(&load(fixtures::TWO_DAUGHTERS), &["D1", "D2"]);
    let general = solve(&arena, Mode::Termination)?;
    ensure!(general.player1_wins, "general solver: daughters lose");
    let neg = arena.negotiation();
    let class = classify(neg);
    let sound = check_soundness(neg).map_err(|e| e.to_string())?.sound;
    let mut note = "attractor skipped".to_string();
    if class.type2 && sound {
        let v = decide_termination(&arena, Soundness::Assume).map_err(|e| e.to_string())?;
        ensure!(v.player1_wins, "attractor: daughters lose");
        note = "attractor agrees".to_string();
    }

    let branch = load(fixtures::TWO_DAUGHTERS_SPLIT);
    let g = build_game_graph(&branch, Mode::Termination, GraphOptions::default()).map_err(|e| e.to_string())?;
    let r = solve_game(&g, SolveOptions::default());
    ensure!(!r.player1_wins, "s-branch: Player 1 wins");
    verify_player2(&g, &r).map_err(|e| format!("{e:?}"))?;
    let bneg = branch.negotiation();
    let PlayEnd::Cycle { start: loop_start } = r.witness.end else {
        return Err(format!("s-branch witness is not a lasso: {}", r.witness.render(bneg)));
    };
    let cycle: Vec<&str> = r.witness.rounds[loop_start..]
        .iter()
        .flatten()
        .map(|s| bneg.atom_name(s.atom))
        .collect();
    ensure!(cycle.contains(&"n4") && cycle.contains(&"n5"), "lasso cycle {cycle:?}");
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("{note}, s-branch lasso {}, {took:?}", r.witness.render(bneg)))
}

fn going_out_outcome() -> Outcome {
    let start = Instant::now();
    let arena = load(fixtures::GOING_OUT);
    for (members, atom) in [(["F", "D1"], "n4"), (["M", "D1"], "n5")] {
        let a = with_coalition(&arena, &members);
        let v = solve_concluding_outcome(&a, Soundness::default()).map_err(|e| e.to_string())?;
        ensure!(!v.player1_wins, "{members:?} wins");
        let tneg = v.transformed.negotiation();
        let inside: Vec<&str> = v.attractor.members().into_iter().map(|n| tneg.atom_name(n)).collect();
        ensure!(inside.contains(&"good_D1") && inside.contains(&atom), "{members:?} attractor {inside:?}");
        let general = solve(&a, Mode::ConcludingOutcome)?;
        ensure!(!general.player1_wins, "{members:?} wins the general game");
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("both parents lose, {took:?}"))
}

struct Instance {
    arena: Arena,
    player1_wins: bool,
    attractor: neggame::attractor::AttractorResult,
}

fn random_instances(count: usize) -> Result<(Vec<Instance>, u64, Duration), String> {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        // Every other arena leans towards Player 2 so that both verdicts
        // are well represented.
        let params = RandomParams {
            player1_share: if seed.is_multiple_of(2) { 0.5 } else { 0.0 },
            ..RandomParams::default()
        };
        let arena = random_arena(seed, params);
        seed += 1;
        let neg = arena.negotiation();
        if !classify(neg).type2 || !check_soundness(neg).map_err(|e| e.to_string())?.sound {
            continue;
        }
        let v = decide_termination(&arena, Soundness::Assume).map_err(|e| e.to_string())?;
        let general = solve(&arena, Mode::Termination)?;
        ensure!(
            v.player1_wins == general.player1_wins,
            "seed {}: attractor says {}, game graph says {}",
            seed - 1,
            v.player1_wins,
            general.player1_wins
        );
        out.push(Instance {
            arena,
            player1_wins: v.player1_wins,
            attractor: v.attractor,
        });
    }
    Ok((out, seed, start.elapsed()))
}

fn oracle_equivalence(run: &Result<(Vec<Instance>, u64, Duration), String>) -> Outcome {
    let (instances, seeds, took) = run.as_ref().map_err(|e| e.clone())?;
    ensure!(*took < Duration::from_secs(60), "took {took:?}");
    let wins = instances.iter().filter(|i| i.player1_wins).count();
    Ok(format!(
        "{} sound type-2 arenas from {seeds} seeds, {wins} won by Player 1, 0 disagreements, {took:?}",
        instances.len()
    ))
}

fn strategy_soundness(run: &Result<(Vec<Instance>, u64, Duration), String>) -> Outcome {
    let (instances, _, _) = run.as_ref().map_err(|_| "no instances".to_string())?;
    let start = Instant::now();
    let mut longest = 0;
    for (k, inst) in instances.iter().enumerate() {
        let check = validate_strategies(&inst.arena, &inst.attractor, 1_000_000)
            .map_err(|v| format!("instance {k}: {}", v.render(inst.arena.negotiation())))?;
        ensure!(check.player1_wins == inst.player1_wins, "instance {k}: winner changed");
        if inst.player1_wins {
            ensure!(
                matches!(check.witness.end, PlayEnd::Final),
                "instance {k}: witness does not terminate"
            );
            longest = longest.max(check.longest_play.unwrap_or(0));
        } else {
            ensure!(
                matches!(check.witness.end, PlayEnd::Cycle { .. }),
                "instance {k}: witness {} is not a lasso",
                check.witness.render(inst.arena.negotiation())
            );
        }
    }
    Ok(format!(
        "{} instances validated, longest winning play {longest}, {:?}",
        instances.len(),
        start.elapsed()
    ))
}

fn atm_cross_check() -> Outcome {
    let start = Instant::now();
    ensure!(fixtures::ATM_CORPUS.len() >= 5, "corpus too small");
    for (text, expected) in fixtures::ATM_CORPUS {
        let atm = Atm::parse(text).map_err(|e| e.to_string())?;
        ensure!(atm.input.len() <= 3, "{}: input too long", atm.name);
        let direct = atm.accepts().map_err(|e| e.to_string())?;
        ensure!(direct == expected, "{}: evaluates to {direct}", atm.name);
        let nd = encode_nondeterministic(&atm).map_err(|e| e.to_string())?;
        ensure!(solve(&nd, Mode::Termination)?.player1_wins == direct, "{}: nondeterministic encoding disagrees", atm.name);
        let space = explore(nd.negotiation(), 10_000_000).map_err(|e| e.to_string())?;
        ensure!(
            space.enabled.iter().all(|e| e.len() <= 1),
            "{}: a reachable marking enables two atoms",
            atm.name
        );
        let det = encode_deterministic(&atm).map_err(|e| e.to_string())?;
        ensure!(classify(det.negotiation()).deterministic, "{}: deterministic encoding is not deterministic", atm.name);
        ensure!(solve(&det, Mode::Termination)?.player1_wins == direct, "{}: deterministic encoding disagrees", atm.name);
    }
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!("{} machines, {took:?}", fixtures::ATM_CORPUS.len()))
}

/// Best of several runs, in seconds.
fn time_attractor(arena: &Arena, runs: usize) -> f64 {
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            let r = compute_attractor(arena).expect("chains are deterministic");
            std::hint::black_box(&r);
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn scaling() -> Outcome {
    const OUTCOMES: usize = 5;
    const AGENTS: usize = 4;
    let mut rows = Vec::new();
    for (total, runs) in [(1_000usize, 200), (10_000, 30), (100_000, 5)] {
        let arena = chain_arena(total / OUTCOMES - 2, OUTCOMES, AGENTS, 1);
        let neg = arena.negotiation();
        let r = neg.outcome_count();
        let t = time_attractor(&arena, runs);
        rows.push((r, t, t / (r * AGENTS) as f64));
    }
    let mut ratios = Vec::new();
    for w in rows.windows(2) {
        let ratio = w[1].2 / w[0].2;
        ratios.push(ratio);
        ensure!(ratio <= 2.5, "normalised time grew {ratio:.2}x from {} to {} outcomes", w[0].0, w[1].0);
    }
    let (r, t, _) = rows[2];
    ensure!(t < 2.0, "{t:.3} s at {r} outcomes");
    let times: Vec<String> = rows.iter().map(|(r, t, _)| format!("{r}: {:.3} ms", t * 1e3)).collect();
    let ratios: Vec<String> = ratios.iter().map(|x| format!("{x:.2}")).collect();
    Ok(format!("{}, normalised growth {}", times.join(", "), ratios.join(" / ")))
}

fn gadget() -> Outcome {
    let arena = load(fixtures::TIE_PAIR);
    let neg = arena.negotiation();
    let coalition = Coalition::new(vec![neg.agent_named("A").ok_or("no agent A")?]);
    let n1 = neg.atom_named("n1").ok_or("no atom n1")?;
    let out = retarget_control(neg, &coalition, n1, RetargetOptions::default()).map_err(|e| e.to_string())?;
    let result = &out.arena;
    let rneg = result.negotiation();
    let side = |p: Player| -> Vec<&str> {
        rneg.atom_ids()
            .filter(|&n| result.owner(n) == p)
            .map(|n| rneg.atom_name(n))
            .collect()
    };
    let (n1s, n2s) = (side(Player::One), side(Player::Two));
    ensure!(n1s == ["n1"], "N1 = {n1s:?}");
    let mut n2_sorted = n2s.clone();
    n2_sorted.sort();
    ensure!(n2_sorted == ["n0", "n2", "nf"], "N2 = {n2s:?}");
    let report = check_soundness(rneg).map_err(|e| e.to_string())?;
    ensure!(report.sound, "{}", report.render(rneg));
    ensure!(classify(rneg).weakly_deterministic, "not weakly deterministic");
    Ok(format!("N1 = {n1s:?}, N2 = {n2s:?}, sound, weakly deterministic"))
}

fn main() {
    let random = random_instances(500);
    let results: Vec<(&str, Outcome)> = vec![
        ("C1 family fixtures", family_fixtures()),
        ("C2 two daughters termination game", two_daughters_game()),
        ("C3 going-out concluding outcome", going_out_outcome()),
        ("C4 oracle equivalence", oracle_equivalence(&random)),
        ("C5 strategy soundness", strategy_soundness(&random)),
        ("C6 ATM cross-check", atm_cross_check()),
        ("C7 attractor scaling", scaling()),
        ("C8 control gadget", gadget()),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
}
