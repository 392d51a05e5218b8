//! The `recmc` command line.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use recmc_core::driver::{check, CheckConfig, Verdict};
use recmc_core::engine::Projection;
use recmc_core::itp::ItpStrategy;
use recmc_core::program::Mode;

use crate::gen::{gen_bebop, gen_gpdr_divergence, random_program, Limits};
use crate::rpl::{formula_text, parse_with_mode, print};
use crate::witness::{emit_stats, emit_witness, trace_line};

pub const EXIT_SAFE: i32 = 0;
pub const EXIT_UNSAFE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "recmc", version, about = "Safety checking of recursive programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the property of an RPL program.
    Check(CheckArgs),
    /// Print a generated program in RPL.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
}

#[derive(Subcommand, Debug)]
enum Family {
    /// Doubly recursive bit flipping with N procedures.
    Bebop {
        n: usize,
        #[arg(long = "unsafe")]
        broken: bool,
    },
    /// The counter program that makes model caching diverge.
    GpdrDivergence,
    /// A random program.
    Random {
        #[arg(long, value_enum, default_value_t = ModeArg::Int)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Bool,
    Rat,
    Int,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProjArg {
    Mbp,
    Qe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ItpArg {
    Strongest,
    Farkas,
    Boolean,
}

#[derive(clap::Args, Debug)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 64)]
    max_bound: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ProjArg::Mbp)]
    proj: ProjArg,
    /// Interpolation for summaries; by default Farkas for arithmetic and
    /// literal dropping for boolean programs.
    #[arg(long, value_enum)]
    itp: Option<ItpArg>,
    /// Write the proof or counterexample here.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Write one line per rule application here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print rule counts and timings.
    #[arg(long)]
    stats: bool,
    /// Rule applications per bounded run.
    #[arg(long)]
    step_budget: Option<u64>,
    /// Accepted for symmetry with `gen random`; checking is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_SAFE };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(args) => run_check(args, out),
        Command::Gen { family } => {
            let unit = match family {
                Family::Bebop { n: 0, .. } => Err("N must be at least 1".to_string()),
                Family::Bebop { n, broken } => Ok(gen_bebop(n, !broken)),
                Family::GpdrDivergence => Ok(gen_gpdr_divergence()),
                Family::Random { mode, seed } => {
                    let mode = match mode {
                        ModeArg::Bool => Mode::Bool,
                        ModeArg::Rat => Mode::Rat,
                        ModeArg::Auto | ModeArg::Int => Mode::Int,
                    };
                    Ok(random_program(&mut ChaCha8Rng::seed_from_u64(seed), mode, &Limits::default()))
                }
            };
            unit.and_then(|u| write!(out, "{}", print(&u)).map_err(|e| e.to_string()).map(|_| EXIT_SAFE))
        }
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn run_check(args: CheckArgs, out: &mut dyn Write) -> Result<i32, String> {
    let text = fs::read_to_string(&args.file).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let mode = match args.mode {
        ModeArg::Auto => None,
        ModeArg::Bool => Some(Mode::Bool),
        ModeArg::Rat => Some(Mode::Rat),
        ModeArg::Int => Some(Mode::Int),
    };
    let unit = parse_with_mode(&text, mode).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let program = &unit.program;

    let mut config = CheckConfig { max_bound: args.max_bound, ..CheckConfig::default() };
    config.engine.projection = match args.proj {
        ProjArg::Mbp => Projection::Mbp,
        ProjArg::Qe => Projection::Qe,
    };
    config.engine.itp = args.itp.map(|i| match i {
        ItpArg::Strongest => ItpStrategy::Strongest,
        ItpArg::Farkas => ItpStrategy::Farkas,
        ItpArg::Boolean => ItpStrategy::Boolean,
    });
    if let Some(b) = args.step_budget {
        config.engine.step_budget = b;
    }
    config.engine.record_trace = args.trace.is_some() || log::log_enabled!(log::Level::Debug);

    let start = Instant::now();
    let outcome = check(program, &unit.property, &config);
    let elapsed = start.elapsed().as_millis();
    log::info!("{} after {} rule applications", outcome.verdict.name(), outcome.stats.steps());

    let lines: Vec<String> = outcome.trace.iter().map(|e| trace_line(program, e)).collect();
    for l in &lines {
        log::debug!("{l}");
    }
    if let Some(path) = &args.trace {
        let mut text = lines.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.witness {
        let mut buf = Vec::new();
        emit_witness(program, &outcome.verdict, &mut buf).map_err(|e| e.to_string())?;
        fs::write(path, buf).map_err(|e| format!("{}: {e}", path.display()))?;
    }

    let io = |e: io::Error| e.to_string();
    let code = match &outcome.verdict {
        Verdict::Safe(proof) => {
            writeln!(out, "SAFE (bound {})", proof.bound).map_err(io)?;
            for (p, f) in proof.env.iter() {
                writeln!(out, "  {}: {}", program.name(p), formula_text(program, f)).map_err(io)?;
            }
            EXIT_SAFE
        }
        Verdict::Unsafe(tree) => {
            writeln!(out, "UNSAFE (bound {}, {} activations)", tree.bound, tree.root.size()).map_err(io)?;
            writeln!(out, "  main: {}", tree.root.model).map_err(io)?;
            EXIT_UNSAFE
        }
        Verdict::Unknown(reason) => {
            writeln!(out, "UNKNOWN: {reason}").map_err(io)?;
            EXIT_UNKNOWN
        }
    };
    if args.stats {
        emit_stats(&outcome.stats, outcome.bound, elapsed, out).map_err(io)?;
    }
    Ok(code)
}
