//! Command-line frontend: prove goals, re-check certificates, and compare
//! the engine against the brute-force model oracle.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use rankprover_core::checker::check_trace;
use rankprover_core::emitter::{emit_script, extract_trace, lemma_name};
use rankprover_core::engine::{
    saturate, EngineError, PairStrategy, SaturateOptions, SaturationState, DEFAULT_STEP_LIMIT,
};
use rankprover_core::geom::{canonical_render, Configuration, Verdict};
use rankprover_core::goal::parse_goal_with_dimension;
use rankprover_core::oracle::{enumerate_models, ORACLE_MAX_POINTS};
use rankprover_core::parser::{parse_config, Warning};
use rankprover_core::tracefile::{parse_trace, write_trace};

const EXIT_OK: u8 = 0;
const EXIT_SOUNDNESS: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_NOT_DERIVABLE: u8 = 3;
const EXIT_INCONSISTENT: u8 = 4;
const EXIT_ABORTED: u8 = 5;
const EXIT_CHECK_FAILED: u8 = 6;

const STEP_LIMIT_ENV: &str = "RANKPROVER_STEP_LIMIT";

#[derive(Parser)]
#[command(
    name = "rankprover",
    version,
    about = "Saturation prover for rank equalities in projective incidence geometry"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove every conclusion of an input file and emit certified scripts.
    Prove(ProveArgs),
    /// Re-verify a trace file against its configuration.
    Check(CheckArgs),
    /// Run engine and model oracle side by side (small inputs only).
    OracleCompare(OracleCompareArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GoalSyntax {
    /// The prover's own input language (.g files).
    Config,
    /// A Coq-style `Lemma ... : forall ... Point, rk(...) = k -> ...` text.
    Coq,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Full pairing up to 10 points, adjacent beyond.
    Auto,
    Full,
    Adjacent,
}

#[derive(Parser)]
struct ProveArgs {
    /// Input file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "goal-syntax", value_enum, default_value = "config")]
    goal_syntax: GoalSyntax,
    /// Ambient dimension for Coq-style goals (2 or 3; default 3).
    #[arg(long)]
    dimension: Option<u8>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    /// Output directory; defaults to the input file's directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print each proof trace to stdout.
    #[arg(long)]
    trace: bool,
    /// Print saturation statistics as key=value lines.
    #[arg(long)]
    stats: bool,
    /// Randomize the worklist order with this seed (the fixpoint does not
    /// depend on it; useful for testing exactly that).
    #[arg(long = "schedule-seed")]
    schedule_seed: Option<u64>,
    /// Cap on recorded deduction steps (default 10000000; the
    /// RANKPROVER_STEP_LIMIT environment variable overrides the default).
    #[arg(long = "step-limit")]
    step_limit: Option<u64>,
    #[arg(long = "time-limit-secs")]
    time_limit_secs: Option<u64>,
}

#[derive(Parser)]
struct CheckArgs {
    /// Configuration file (.g).
    #[arg(long)]
    input: PathBuf,
    /// Trace file written by `prove`.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Parser)]
struct OracleCompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "goal-syntax", value_enum, default_value = "config")]
    goal_syntax: GoalSyntax,
    #[arg(long)]
    dimension: Option<u8>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Prove(args) => cmd_prove(&args),
        Command::Check(args) => cmd_check(&args),
        Command::OracleCompare(args) => cmd_oracle_compare(&args),
    };
    ExitCode::from(code)
}

fn read_input(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_PARSE
    })
}

fn report_warnings(warnings: &[Warning]) {
    for warning in warnings {
        eprintln!("{warning}");
    }
}

fn load_configuration(
    path: &Path,
    syntax: GoalSyntax,
    dimension: Option<u8>,
) -> Result<Configuration, u8> {
    let text = read_input(path)?;
    match syntax {
        GoalSyntax::Config => {
            if dimension.is_some() {
                eprintln!("warning: --dimension is ignored for config-syntax inputs");
            }
            match parse_config(&text) {
                Ok(outcome) => {
                    report_warnings(&outcome.warnings);
                    Ok(outcome.config)
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    Err(EXIT_PARSE)
                }
            }
        }
        GoalSyntax::Coq => match parse_goal_with_dimension(&text, dimension.unwrap_or(3)) {
            Ok(outcome) => {
                report_warnings(&outcome.warnings);
                Ok(outcome.config)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                Err(EXIT_PARSE)
            }
        },
    }
}

fn build_options(args: &ProveArgs, cfg: &Configuration) -> Result<SaturateOptions, u8> {
    let strategy = match args.strategy {
        StrategyArg::Auto => PairStrategy::auto(cfg.point_count()),
        StrategyArg::Full => PairStrategy::Full,
        StrategyArg::Adjacent => PairStrategy::Adjacent,
    };
    let mut step_limit = DEFAULT_STEP_LIMIT;
    if let Ok(value) = std::env::var(STEP_LIMIT_ENV) {
        step_limit = value.parse().map_err(|_| {
            eprintln!("error: {STEP_LIMIT_ENV}={value:?} is not a step count");
            EXIT_PARSE
        })?;
    }
    if let Some(value) = args.step_limit {
        step_limit = value;
    }
    Ok(SaturateOptions {
        strategy,
        step_limit,
        time_limit: args.time_limit_secs.map(Duration::from_secs),
        schedule_seed: args.schedule_seed,
    })
}

fn engine_failure(cfg: &Configuration, error: &EngineError) -> u8 {
    match error {
        EngineError::InconsistentHypothesis { set, rank, interval } => {
            let set = canonical_render(*set, cfg).unwrap_or_else(|_| format!("{set:?}"));
            println!("INCONSISTENT hypothesis rk({set}) = {rank} conflicts with {interval}");
            EXIT_INCONSISTENT
        }
        EngineError::Inconsistent { .. } => {
            println!("INCONSISTENT {error}");
            EXIT_INCONSISTENT
        }
        EngineError::Aborted { .. } => {
            println!("ABORTED {error}");
            EXIT_ABORTED
        }
        EngineError::BadOperands { .. } => {
            eprintln!("internal error: {error}");
            EXIT_SOUNDNESS
        }
    }
}

fn print_stats(state: &SaturationState) {
    let stats = state.stats();
    println!("points={}", state.point_count());
    println!("subsets={}", stats.subsets);
    println!("steps={}", stats.steps_applied());
    println!("instances={}", stats.instances_tried);
    for rule in rankprover_core::engine::RuleId::ALL {
        println!("rule_{}={}", rule.name(), stats.applied(rule));
    }
    println!("wall_ms={}", stats.wall.as_millis());
}

fn cmd_prove(args: &ProveArgs) -> u8 {
    let cfg = match load_configuration(&args.input, args.goal_syntax, args.dimension) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let options = match build_options(args, &cfg) {
        Ok(options) => options,
        Err(code) => return code,
    };
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| args.input.parent().unwrap_or(Path::new(".")).to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_PARSE;
    }

    let state = match saturate(&cfg, &options) {
        Ok(state) => state,
        Err(e) => return engine_failure(&cfg, &e),
    };
    if args.stats {
        print_stats(&state);
    }

    let mut exit = EXIT_OK;
    // keep the first failure's code across conclusions
    let fail = |code: u8, exit: &mut u8| {
        if *exit == EXIT_OK {
            *exit = code;
        }
    };
    for goal in cfg.conclusions() {
        let rendered = canonical_render(goal.set, &cfg).expect("conclusions are valid");
        let trace = match extract_trace(&state, *goal) {
            Ok(trace) => trace,
            Err(_) => {
                println!(
                    "NOT-DERIVABLE rk({rendered}) = {} residual {}",
                    goal.rank,
                    state.interval(goal.set)
                );
                fail(EXIT_NOT_DERIVABLE, &mut exit);
                continue;
            }
        };
        let script = emit_script(&cfg, &trace);
        let lemma = lemma_name(goal.set, &cfg);
        let script_path = out_dir.join(format!("pprove_{lemma}.v"));
        let trace_path = out_dir.join(format!("pprove_{lemma}.trace"));
        let trace_text = write_trace(&trace);
        if let Err(e) = std::fs::write(&script_path, script.render())
            .and_then(|_| std::fs::write(&trace_path, &trace_text))
        {
            eprintln!("error: cannot write proof files: {e}");
            return EXIT_PARSE;
        }
        if args.trace {
            print!("{trace_text}");
        }
        match check_trace(&cfg, &trace) {
            Verdict::Accepted => {
                println!("PROVED {lemma} rk({rendered}) = {} (certificate accepted)", goal.rank);
                println!("  wrote {}", script_path.display());
                println!("  wrote {}", trace_path.display());
                println!("  Require Import pprove_{lemma}.");
                println!("  solve_using {lemma}.");
            }
            verdict => {
                println!("CHECK-FAILED {lemma}: {verdict}");
                fail(EXIT_CHECK_FAILED, &mut exit);
            }
        }
    }
    exit
}

fn cmd_check(args: &CheckArgs) -> u8 {
    let cfg = match load_configuration(&args.input, GoalSyntax::Config, None) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let trace_text = match read_input(&args.trace) {
        Ok(text) => text,
        Err(code) => return code,
    };
    let trace = match parse_trace(&trace_text) {
        Ok(trace) => trace,
        Err(e) => {
            eprintln!("error: {}: {e}", args.trace.display());
            return EXIT_PARSE;
        }
    };
    let verdict = check_trace(&cfg, &trace);
    println!("{verdict}");
    if verdict.is_accepted() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_oracle_compare(args: &OracleCompareArgs) -> u8 {
    let cfg = match load_configuration(&args.input, args.goal_syntax, args.dimension) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if cfg.point_count() > ORACLE_MAX_POINTS {
        eprintln!(
            "error: oracle-compare is limited to {ORACLE_MAX_POINTS} points, input has {}",
            cfg.point_count()
        );
        return EXIT_PARSE;
    }
    let engine_state = match saturate(&cfg, &SaturateOptions::for_config(&cfg)) {
        Ok(state) => Some(state),
        Err(EngineError::Inconsistent { .. } | EngineError::InconsistentHypothesis { .. }) => None,
        Err(e) => {
            println!("ABORTED {e}");
            return EXIT_ABORTED;
        }
    };
    let models = enumerate_models(&cfg).expect("size guard checked above");
    let mut exit = EXIT_OK;
    if engine_state.is_none() {
        if models.is_empty() {
            println!("hypotheses: engine=inconsistent oracle=no-models agreement=yes");
        } else {
            println!("hypotheses: engine=inconsistent oracle=has-models agreement=NO");
            exit = EXIT_SOUNDNESS;
        }
    }
    for goal in cfg.conclusions() {
        let rendered = canonical_render(goal.set, &cfg).expect("conclusions are valid");
        let engine_verdict = match &engine_state {
            None => "inconsistent".to_string(),
            Some(state) => {
                if state.entails(*goal) {
                    "proved".to_string()
                } else {
                    format!("undecided {}", state.interval(goal.set))
                }
            }
        };
        let oracle_verdict = if models.is_empty() {
            "no-models".to_string()
        } else if models.iter().all(|m| m.rank(goal.set) == goal.rank) {
            "valid".to_string()
        } else {
            "counter-model".to_string()
        };
        // Unsound = the engine proved something some model refutes.
        let sound = !(engine_verdict == "proved" && oracle_verdict == "counter-model");
        if !sound {
            exit = EXIT_SOUNDNESS;
        }
        println!(
            "rk({rendered}) = {}: engine={engine_verdict} oracle={oracle_verdict} sound={}",
            goal.rank,
            if sound { "yes" } else { "NO" }
        );
    }
    exit
}
