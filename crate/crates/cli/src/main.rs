//! Experiment harness for frequency-adaptive distillation of spectral-mask
//! speech enhancers.
//!
//! Subcommands: `synth` (corpus generation), `train-teacher`, `distill`,
//! `eval`, `adapt-trace` (per-frame crossover dump), `gradcheck`
//! (finite-difference verification) and `compare` (full experiment matrix).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 I/O error.

mod commands;
mod config;
mod corpus_io;
mod error;

use clap::{Parser, Subcommand};

use crate::error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "dfkd", version, about = "Frequency-adaptive distillation for speech enhancement")]
struct Cli {
    /// Worker threads; results are identical at any setting, 1 forces
    /// fully serial execution.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a deterministic noisy-speech corpus.
    Synth(commands::synth::SynthArgs),
    /// Train a teacher mask net on the task loss alone.
    TrainTeacher(commands::trainers::TrainTeacherArgs),
    /// Distill a student against a frozen teacher checkpoint.
    Distill(commands::trainers::DistillArgs),
    /// Evaluate a checkpoint on a corpus split.
    Eval(commands::eval::EvalArgs),
    /// Dump per-frame crossover bins for a WAV file.
    AdaptTrace(commands::trace::TraceArgs),
    /// Verify every analytic gradient against finite differences.
    Gradcheck(commands::gradcheck_cmd::GradcheckArgs),
    /// Train and evaluate the full variant-by-size experiment matrix.
    Compare(commands::compare::CompareArgs),
}

fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Synth(args) => commands::synth::run(args),
        Command::TrainTeacher(args) => commands::trainers::run_train_teacher(args),
        Command::Distill(args) => commands::trainers::run_distill(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::AdaptTrace(args) => commands::trace::run(args),
        Command::Gradcheck(args) => commands::gradcheck_cmd::run(args),
        Command::Compare(args) => commands::compare::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("configuration error: --threads must be at least 1");
            std::process::exit(2);
        }
        // Build errors only if a pool already exists, which cannot happen
        // before first rayon use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(e) = run(&cli.command) {
        eprintln!("{e}");
        std::process::exit(e.code());
    }
}
