//! `neggame`: check, solve, transform and export negotiation games.
//!
//! Exit status: 0 when Player 1 wins or the checked property holds, 1 when
//! Player 2 wins or the property fails, 2 on usage or parse errors and 3 when
//! a precondition fails or a resource limit is hit.

mod solve;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use neggame::atm::{self, Atm, AtmError};
use neggame::attractor::{compute_attractor, AttractorError};
use neggame::coalition::{partition_from_coalition, retarget_control, Coalition, RetargetOptions};
use neggame::general::{DEFAULT_MAX_MOVES, Mode};
use neggame::random::{random_arena, random_goals, RandomParams};
use neggame::semantics::{
    self, check_soundness_with_limit, classify, enabled_atoms, explore, Step, DEFAULT_MAX_MARKINGS,
};
use neggame::textio;
use neggame::{Arena, Marking};

/// An error together with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

pub fn precondition(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        error: error.into(),
    }
}

pub type Status = Result<u8, Failure>;

#[derive(Parser, Debug)]
#[command(name = "neggame", version, about = "Games on negotiations: soundness, solvers and encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a .neg file against the model invariants.
    Validate { file: PathBuf },
    /// Report deterministic agents and the determinism class.
    Classify { file: PathBuf },
    /// Check soundness and print a witness when it fails.
    Soundness {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_MARKINGS)]
        max_states: usize,
    },
    /// Replay an occurrence sequence or follow a saved strategy.
    Simulate(SimulateArgs),
    /// Solve the termination game.
    SolveTermination(SolveArgs),
    /// Solve the concluding-outcome game.
    SolveOutcome(SolveArgs),
    /// Give a coalition control over one atom by adding agents.
    TransformControl {
        file: PathBuf,
        /// Coalition members, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        coalition: Vec<String>,
        /// Atom the coalition should control.
        #[arg(long)]
        atom: String,
        /// Fail instead of adding nondeterministic agents.
        #[arg(long)]
        deterministic_only: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Encode an alternating Turing machine as an arena.
    EncodeAtm {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Encoding::Nondeterministic)]
        encoding: Encoding,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Export the arena as a DOT graph.
    ExportDot {
        file: PathBuf,
        #[command(flatten)]
        control: ControlArgs,
        /// Label atoms with their attractor index.
        #[arg(long)]
        attractor: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Export the reachable markings as a DOT graph.
    ExportStategraph {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_MARKINGS)]
        max_states: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a random arena.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_agents: usize,
        #[arg(long, default_value_t = 8)]
        max_atoms: usize,
        #[arg(long, default_value_t = 3)]
        max_outcomes: usize,
        #[arg(long, default_value_t = 0.3)]
        nondeterminism: f64,
        #[arg(long, default_value_t = 0.5)]
        player1_share: f64,
        /// Also draw random goals.
        #[arg(long)]
        goals: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Encoding {
    Nondeterministic,
    Deterministic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Auto,
    Attractor,
    General,
}

/// Overrides for the partition declared in the file.
#[derive(Args, Debug, Default)]
pub struct ControlArgs {
    /// Coalition members, comma separated; replaces the file's partition.
    #[arg(long, value_delimiter = ',', conflicts_with = "player1")]
    coalition: Option<Vec<String>>,
    /// Player 1 atoms, comma separated; replaces the file's partition.
    #[arg(long, value_delimiter = ',')]
    player1: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    control: ControlArgs,
    #[arg(long, value_enum, default_value_t = SolverChoice::Auto)]
    pub solver: SolverChoice,
    /// Skip the soundness check required by the attractor solver.
    #[arg(long)]
    pub assume_sound: bool,
    /// Let the Scheduler cooperate with Player 1 (game-graph solver only).
    #[arg(long)]
    pub friendly_scheduler: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_MARKINGS)]
    pub max_states: usize,
    /// Largest move matrix allowed at a single choice node.
    #[arg(long, default_value_t = DEFAULT_MAX_MOVES)]
    pub max_moves: usize,
    /// Write the JSON report here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    file: PathBuf,
    #[command(flatten)]
    control: ControlArgs,
    /// Steps to fire in order, e.g. "(n0,st) (n1,y)".
    #[arg(long, conflicts_with = "follow_strategy")]
    steps: Option<String>,
    /// JSON report whose strategies are followed.
    #[arg(long)]
    follow_strategy: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_MARKINGS)]
    max_states: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_MOVES)]
    max_moves: usize,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(anyhow!("cannot read {}: {e}", path.display())))
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| usage(anyhow!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, control: &ControlArgs) -> Result<Arena, Failure> {
    let text = read(path)?;
    let arena = textio::parse(&text).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
    let goals = arena.goals().cloned();
    if let Some(members) = &control.coalition {
        let agents = textio::resolve_agents(&arena, members).map_err(|e| usage(anyhow!(e)))?;
        let neg = arena.into_negotiation();
        return Ok(partition_from_coalition(neg, &Coalition::new(agents)).with_goals(goals));
    }
    if let Some(atoms) = &control.player1 {
        let atoms = textio::resolve_atoms(&arena, atoms).map_err(|e| usage(anyhow!(e)))?;
        return Ok(Arena::with_player1(arena.into_negotiation(), &atoms).with_goals(goals));
    }
    Ok(arena)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn validate(file: &Path) -> Status {
    let text = read(file)?;
    let arena = textio::parse_unvalidated(&text).map_err(|e| usage(anyhow!("{}: {e}", file.display())))?;
    let report = arena.validate();
    if report.is_valid() {
        println!("valid");
        Ok(0)
    } else {
        println!("invalid\n{report}");
        Ok(1)
    }
}

fn classify_cmd(file: &Path) -> Status {
    let arena = load(file, &ControlArgs::default())?;
    let neg = arena.negotiation();
    let c = classify(neg);
    let names: Vec<&str> = c.deterministic_agents.iter().map(|&a| neg.agent_name(a)).collect();
    println!("deterministic agents: {}", names.join(" "));
    println!("deterministic: {}", yes(c.deterministic));
    println!("weakly deterministic: {}", yes(c.weakly_deterministic));
    println!("type 2: {}", yes(c.type2));
    Ok(0)
}

fn soundness(file: &Path, max_states: usize) -> Status {
    let arena = load(file, &ControlArgs::default())?;
    let neg = arena.negotiation();
    let report = check_soundness_with_limit(neg, max_states).map_err(precondition)?;
    println!("{}", report.render(neg));
    Ok(if report.sound { 0 } else { 1 })
}

fn simulate(args: &SimulateArgs) -> Status {
    let arena = load(&args.file, &args.control)?;
    if let Some(path) = &args.follow_strategy {
        let text = read(path)?;
        let report = serde_json::from_str(&text).map_err(|e| usage(anyhow!("{}: {e}", path.display())))?;
        let limits = solve::Limits {
            max_states: args.max_states,
            max_moves: args.max_moves,
        };
        let (neg, play) = solve::follow(&arena, &report, limits)?;
        println!("play: {}", play.render(&neg));
        return Ok(0);
    }
    let neg = arena.negotiation();
    let mut x = Marking::initial(neg);
    println!("{}", x.display(neg));
    if let Some(steps) = &args.steps {
        for token in steps.split_whitespace() {
            let (n, r) = textio::parse_step(&arena, token).map_err(|e| usage(anyhow!(e)))?;
            match semantics::occur(neg, &x, Step::new(n, r)) {
                Ok(y) => x = y,
                Err(e) => {
                    println!("{token}: {e}");
                    return Ok(1);
                }
            }
            println!("{token} -> {}", x.display(neg));
        }
    }
    if x.is_final() {
        println!("final marking reached");
    } else {
        let enabled: Vec<&str> = enabled_atoms(neg, &x).into_iter().map(|n| neg.atom_name(n)).collect();
        if enabled.is_empty() {
            println!("deadlock");
        } else {
            println!("enabled: {}", enabled.join(" "));
        }
    }
    Ok(0)
}

fn transform_control(
    file: &Path,
    coalition: &[String],
    atom: &str,
    deterministic_only: bool,
    output: Option<&Path>,
) -> Status {
    let arena = load(file, &ControlArgs::default())?;
    let agents = textio::resolve_agents(&arena, coalition).map_err(|e| usage(anyhow!(e)))?;
    let n = textio::resolve_atoms(&arena, &[atom.to_string()]).map_err(|e| usage(anyhow!(e)))?[0];
    let options = RetargetOptions {
        require_deterministic: deterministic_only,
    };
    let out = retarget_control(arena.negotiation(), &Coalition::new(agents), n, options).map_err(precondition)?;
    let result = out.arena.with_goals(arena.goals().cloned());
    let text = textio::export(&result);
    if let Some(path) = output {
        write_or_print(Some(path), &text)?;
        let neg = result.negotiation();
        let names = |ids: &[neggame::AgentId]| ids.iter().map(|&a| neg.agent_name(a)).collect::<Vec<_>>().join(" ");
        println!("added coalition agents: {}", names(&out.added_coalition));
        println!("added opposition agents: {}", names(&out.added_opposition));
    } else {
        print!("{text}");
    }
    Ok(0)
}

fn atm_failure(e: AtmError) -> Failure {
    match e {
        AtmError::Syntax { .. } => usage(e),
        _ => precondition(e),
    }
}

fn encode_atm(file: &Path, encoding: Encoding, output: Option<&Path>) -> Status {
    let machine = Atm::parse(&read(file)?).map_err(|e| usage(anyhow!("{}: {e}", file.display())))?;
    let arena = match encoding {
        Encoding::Nondeterministic => atm::encode_nondeterministic(&machine),
        Encoding::Deterministic => atm::encode_deterministic(&machine),
    }
    .map_err(atm_failure)?;
    write_or_print(output, &textio::export(&arena))?;
    Ok(0)
}

fn export_dot(file: &Path, control: &ControlArgs, attractor: bool, output: Option<&Path>) -> Status {
    let arena = load(file, control)?;
    let indices = if attractor {
        Some(compute_attractor(&arena).map_err(|e: AttractorError| precondition(e))?.index)
    } else {
        None
    };
    write_or_print(output, &textio::export_dot(&arena, indices.as_deref()))?;
    Ok(0)
}

fn export_stategraph(file: &Path, max_states: usize, output: Option<&Path>) -> Status {
    let arena = load(file, &ControlArgs::default())?;
    let neg = arena.negotiation();
    let space = explore(neg, max_states).map_err(precondition)?;
    write_or_print(output, &textio::export_state_graph(neg, &space))?;
    Ok(0)
}

fn run(cli: Cli) -> Status {
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Classify { file } => classify_cmd(&file),
        Command::Soundness { file, max_states } => soundness(&file, max_states),
        Command::Simulate(args) => simulate(&args),
        Command::SolveTermination(args) => {
            let arena = load(&args.file, &args.control)?;
            solve::solve(&arena, Mode::Termination, &args, args.output.as_deref())
        }
        Command::SolveOutcome(args) => {
            let arena = load(&args.file, &args.control)?;
            solve::solve(&arena, Mode::ConcludingOutcome, &args, args.output.as_deref())
        }
        Command::TransformControl {
            file,
            coalition,
            atom,
            deterministic_only,
            output,
        } => transform_control(&file, &coalition, &atom, deterministic_only, output.as_deref()),
        Command::EncodeAtm {
            file,
            encoding,
            output,
        } => encode_atm(&file, encoding, output.as_deref()),
        Command::ExportDot {
            file,
            control,
            attractor,
            output,
        } => export_dot(&file, &control, attractor, output.as_deref()),
        Command::ExportStategraph {
            file,
            max_states,
            output,
        } => export_stategraph(&file, max_states, output.as_deref()),
        Command::Generate {
            seed,
            max_agents,
            max_atoms,
            max_outcomes,
            nondeterminism,
            player1_share,
            goals,
            output,
        } => {
            let params = RandomParams {
                max_agents,
                max_atoms,
                max_outcomes,
                nondeterminism,
                player1_share,
            };
            for (name, p) in [("nondeterminism", nondeterminism), ("player1-share", player1_share)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(usage(anyhow!("--{name} must lie in [0, 1]")));
                }
            }
            let mut arena = random_arena(seed, params);
            if goals {
                let g = random_goals(&arena, seed);
                arena = arena.with_goals(Some(g));
            }
            write_or_print(output.as_deref(), &textio::export(&arena))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
