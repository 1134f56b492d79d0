mod compare;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::run::RunArgs;
use crate::sweep::SweepArgs;

#[derive(Parser, Debug)]
#[command(name = "geoflow", version, about = "Coflow scheduling experiments on a simulated WAN")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate every (policy, seed) pair and write metrics and traces.
    Run(RunArgs),
    /// Print terra's factor of improvement over every other policy in a results directory.
    Compare {
        /// Directory holding metrics.csv, or the CSV itself.
        results: PathBuf,
    },
    /// Repeat a run for each value of one parameter.
    Sweep(SweepArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run(args) => run::cmd_run(&args),
        Command::Compare { results } => compare::cmd_compare(&results),
        Command::Sweep(args) => sweep::cmd_sweep(&args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
