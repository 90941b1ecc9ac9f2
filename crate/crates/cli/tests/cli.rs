use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neggame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn line_after(text: &str, prefix: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_else(|| panic!("no '{prefix}' line in:\n{text}"))
        .to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const NEG_FIXTURES: [&str; 7] = [
    "family_acyclic.neg",
    "family_deadlock.neg",
    "family_cyclic.neg",
    "two_daughters.neg",
    "two_daughters_split.neg",
    "tie_pair.neg",
    "going_out.neg",
];

#[test]
fn full_coalition_wins_family_cyclic() {
    let out = run(&["solve-termination", path(&fixture("family_cyclic.neg")), "--coalition", "F,D,M"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("winner: Player 1"));
}

#[test]
fn family_deadlock_is_unsound_with_witness() {
    let out = run(&["soundness", path(&fixture("family_deadlock.neg"))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("deadlock: (n0,st) (n1,y)"), "{}", stdout(&out));
}

#[test]
fn daughters_win_together() {
    for solver in ["auto", "attractor", "general"] {
        let out = run(&[
            "solve-termination",
            path(&fixture("two_daughters.neg")),
            "--coalition",
            "D1,D2",
            "--solver",
            solver,
        ]);
        assert_eq!(code(&out), 0, "{solver}: {}", stdout(&out));
    }
}

#[test]
fn auto_matches_explicit_solvers_on_fixtures() {
    for name in NEG_FIXTURES {
        let file = fixture(name);
        let mut games = vec!["solve-termination"];
        if name == "going_out.neg" {
            games.push("solve-outcome");
        }
        for game in games {
            let verdict = |solver: &str| code(&run(&[game, path(&file), "--solver", solver]));
            let auto = verdict("auto");
            let general = verdict("general");
            assert!(auto <= 1, "{name} {game}: auto exited {auto}");
            assert_eq!(auto, general, "{name} {game}");
            let attractor = verdict("attractor");
            if attractor != 3 {
                assert_eq!(attractor, auto, "{name} {game}");
            }
        }
    }
}

#[test]
fn saved_strategies_reproduce_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("solve-termination", "two_daughters.neg", "attractor"),
        ("solve-termination", "two_daughters.neg", "general"),
        ("solve-termination", "two_daughters_split.neg", "general"),
        ("solve-termination", "family_cyclic.neg", "attractor"),
        ("solve-outcome", "going_out.neg", "attractor"),
        ("solve-outcome", "going_out.neg", "general"),
    ];
    for (i, (game, name, solver)) in cases.into_iter().enumerate() {
        let report = dir.path().join(format!("report{i}.json"));
        let file = fixture(name);
        let solved = run(&[game, path(&file), "--solver", solver, "--output", report.to_str().unwrap()]);
        assert!(code(&solved) <= 1, "{name}: {}", String::from_utf8_lossy(&solved.stderr));
        let witness = line_after(&stdout(&solved), "witness: ");
        let replay = run(&["simulate", path(&file), "--follow-strategy", report.to_str().unwrap()]);
        assert_eq!(code(&replay), 0, "{}", String::from_utf8_lossy(&replay.stderr));
        assert_eq!(line_after(&stdout(&replay), "play: "), witness, "{game} {name} {solver}");
    }
}

#[test]
fn json_report_has_expected_fields() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "solve-termination",
        path(&fixture("family_cyclic.neg")),
        "--coalition",
        "F,D,M",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["winner"], "player1");
    assert_eq!(json["solver"], "attractor");
    assert_eq!(json["attractorIndices"]["n1"], 2);
    assert_eq!(json["witness"]["kind"], "terminating");
}

#[test]
fn coalition_and_player1_conflict() {
    let out = run(&[
        "solve-termination",
        path(&fixture("two_daughters.neg")),
        "--coalition",
        "D1",
        "--player1",
        "n1",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.neg");
    std::fs::write(&bad, "negotiation x\nagents a\natom n0 initial parties a outcomes r\n").unwrap();
    assert_eq!(code(&run(&["solve-termination", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["classify", "/nonexistent.neg"])), 2);
    assert_eq!(
        code(&run(&["solve-termination", path(&fixture("two_daughters.neg")), "--coalition", "Nobody"])),
        2
    );

    // Two nondeterministic agents share the only inner atom: not type 2.
    let nondet = dir.path().join("nondet.neg");
    std::fs::write(
        &nondet,
        "negotiation nd
agents a b
atom n0 initial parties a b outcomes r
atom m parties a b outcomes r
atom nf final parties a b outcomes end
arc n0 a r -> m nf
arc n0 b r -> m nf
arc m a r -> nf
arc m b r -> nf
",
    )
    .unwrap();
    let attractor = run(&["solve-termination", nondet.to_str().unwrap(), "--solver", "attractor"]);
    assert_eq!(code(&attractor), 3);
    assert!(String::from_utf8_lossy(&attractor.stderr).contains("deterministic party"));
    assert!(code(&run(&["solve-termination", nondet.to_str().unwrap()])) <= 1);

    assert_eq!(code(&run(&["solve-outcome", path(&fixture("two_daughters.neg"))])), 3);
    assert_eq!(
        code(&run(&["solve-termination", path(&fixture("two_daughters.neg")), "--max-states", "3"])),
        3
    );
}

#[test]
fn validate_reports_missing_arcs() {
    assert_eq!(code(&run(&["validate", path(&fixture("family_acyclic.neg"))])), 0);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("partial.neg");
    std::fs::write(
        &file,
        "negotiation p
agents a
atom n0 initial parties a outcomes r s
atom nf final parties a outcomes end
arc n0 a r -> nf
",
    )
    .unwrap();
    let out = run(&["validate", file.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("invalid"));
}

#[test]
fn classify_family_cyclic() {
    let out = run(&["classify", path(&fixture("family_cyclic.neg"))]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("deterministic: yes"));
}

#[test]
fn simulate_steps() {
    let file = fixture("family_deadlock.neg");
    let out = run(&["simulate", path(&file), "--steps", "(n0,st) (n1,y)"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).trim_end().ends_with("deadlock"), "{}", stdout(&out));
    let out = run(&["simulate", path(&file), "--steps", "(n1,y)"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn encoded_machines_decide_acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let atm = |name: &str| fixture("atm").join(name);
    for (name, accepts) in [("one_step.atm", true), ("universal_loop.atm", false), ("alternation.atm", true)] {
        for encoding in ["nondeterministic", "deterministic"] {
            let arena = dir.path().join(format!("{name}.{encoding}.neg"));
            let out = run(&[
                "encode-atm",
                path(&atm(name)),
                "--encoding",
                encoding,
                "--output",
                arena.to_str().unwrap(),
            ]);
            assert_eq!(code(&out), 0);
            let solved = run(&["solve-termination", arena.to_str().unwrap(), "--solver", "general"]);
            assert_eq!(code(&solved), if accepts { 0 } else { 1 }, "{name} {encoding}");
        }
    }
}

#[test]
fn transform_control_writes_the_gadget() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("gadget.neg");
    let out = run(&[
        "transform-control",
        path(&fixture("tie_pair.neg")),
        "--coalition",
        "A",
        "--atom",
        "n1",
        "--output",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("added coalition agents: _ctl1"));
    assert_eq!(code(&run(&["soundness", out_file.to_str().unwrap()])), 0);
    let class = stdout(&run(&["classify", out_file.to_str().unwrap()]));
    assert!(class.contains("weakly deterministic: yes"), "{class}");
    let deterministic_only = run(&[
        "transform-control",
        path(&fixture("tie_pair.neg")),
        "--coalition",
        "A",
        "--atom",
        "n1",
        "--deterministic-only",
    ]);
    assert_eq!(code(&deterministic_only), 3);
}

#[test]
fn exports_are_dot_graphs() {
    let dot = run(&["export-dot", path(&fixture("family_cyclic.neg")), "--coalition", "F,D,M", "--attractor"]);
    assert_eq!(code(&dot), 0);
    assert!(stdout(&dot).starts_with("digraph"));
    assert!(stdout(&dot).contains("\\n2"));
    let states = run(&["export-stategraph", path(&fixture("family_deadlock.neg"))]);
    assert_eq!(code(&states), 0);
    assert!(stdout(&states).contains("salmon"));
}

#[test]
fn generate_is_seeded() {
    let a = stdout(&run(&["generate", "--seed", "7"]));
    let b = stdout(&run(&["generate", "--seed", "7"]));
    let c = stdout(&run(&["generate", "--seed", "8"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("negotiation random-7"));
    assert_eq!(stdout(&run(&["generate"])), stdout(&run(&["generate", "--seed", "0"])));
}
