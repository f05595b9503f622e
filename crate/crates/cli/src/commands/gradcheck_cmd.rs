//! `gradcheck` subcommand: finite-difference verification of all analytic
//! gradients.

use clap::Args;
use dfkd::gradcheck::run_suite;

use crate::error::{CliError, CliResult};

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Seed for the random cases.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random cases per operation.
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Testing hook: corrupt one analytic gradient; the run must then fail.
    #[arg(long)]
    pub corrupt: bool,
}

pub fn run(args: &GradcheckArgs) -> CliResult<()> {
    let report = run_suite(args.seed, args.cases, args.corrupt);
    println!("{:<22} {:>6} {:>13} {:>10}  status", "op", "cases", "max_rel_err", "tolerance");
    for e in &report.entries {
        println!(
            "{:<22} {:>6} {:>13.3e} {:>10.0e}  {}",
            e.name,
            e.cases,
            e.max_rel_err,
            e.tolerance,
            if e.pass { "PASS" } else { "FAIL" }
        );
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Numeric("gradient check failed".into()))
    }
}
