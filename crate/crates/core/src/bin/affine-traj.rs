use std::path::PathBuf;
use std::process::ExitCode;

use affine_traj::scenario::{error_json, run, Overrides, RunOptions, Scenario};
use affine_traj::{fixtures, Error};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "affine-traj", version, about = "Affine deformations of nonholonomic robot trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV traces, report.json and plot.svg.
    Run {
        scenario: PathBuf,
        /// Output directory (default: the scenario's output_dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample step for built-in generators (s).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for Monte Carlo runs.
        #[arg(long)]
        threads: Option<usize>,
        /// Add the task wall-clock time to the report.
        #[arg(long)]
        timing: bool,
    },
    /// Parse a scenario and load its inputs without running it.
    Validate { scenario: PathBuf },
    /// Built-in trajectory generators.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Subcommand)]
enum FixturesAction {
    List,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", json!({ "error": error_json(e) }));
    ExitCode::from(if e.is_input_error() { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, dt, seed, threads, timing } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    return fail(&Error::InvalidParameter(format!("--threads: {e}")));
                }
            }
            let scn = match Scenario::load(&scenario, &Overrides { dt, seed }) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            match run(&scn, &RunOptions { out, timing }) {
                Ok(report) => {
                    println!("{}", json!({ "status": report.status, "task": report.task, "files": report.files }));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { scenario } => match Scenario::load(&scenario, &Overrides::default()) {
            Ok(s) => {
                println!("{}", json!({ "valid": true, "task": s.kind }));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Fixtures { action: FixturesAction::List } => {
            for name in fixtures::NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
