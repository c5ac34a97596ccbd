//! `ptransport`: run transport solves, flows and inequality checks from a
//! TOML scenario.

mod checks;
mod error;
mod plot;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::run::Options;
use crate::scenario::{Scenario, Task};

#[derive(Debug, Parser)]
#[command(name = "ptransport", version, about = "Optimal transport and functional inequalities on Poisson lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent checks.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Drop timings so that reruns produce byte-identical artifacts.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Base seed for randomized check instances; overrides the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Transport distance between measures mu0 and mu1.
    Distance,
    /// Entropic cost for the ε values of `task = "entropic:<eps>,.."`.
    Entropic,
    /// Geodesic between mu0 and mu1 with potentials and speed profile.
    Geodesic,
    /// Ornstein–Uhlenbeck flow from mu0, `task = "flow:<T>,<K>"`.
    Flow,
    /// Checks listed in `task = "verify:<check>,.."`.
    Verify,
    /// The `[[suite]]` entries, or every check on seeded instances.
    Suite,
    /// Long-format CSVs from the artifacts in --out.
    Plotdata,
}

impl Command {
    fn kind(self) -> &'static str {
        match self {
            Command::Distance => "distance",
            Command::Entropic => "entropic",
            Command::Geodesic => "geodesic",
            Command::Flow => "flow",
            Command::Verify => "verify",
            Command::Suite => "suite",
            Command::Plotdata => "plotdata",
        }
    }
}

fn resolve_task(cmd: Command, scenario: &Scenario) -> Result<Task, CliError> {
    match (&scenario.task, cmd) {
        (Some(t), _) if t.kind() == cmd.kind() => Ok(t.clone()),
        (Some(t), _) => Err(CliError::Parse(format!(
            "scenario task is {:?} but the {} subcommand was given",
            t.kind(),
            cmd.kind()
        ))),
        (None, Command::Distance) => Ok(Task::Distance),
        (None, Command::Geodesic) => Ok(Task::Geodesic),
        (None, Command::Suite) => Ok(Task::Suite),
        (None, _) => Err(CliError::Parse(format!(
            "the {} subcommand needs a `task = \"{}:...\"` line in the scenario",
            cmd.kind(),
            cmd.kind()
        ))),
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    if let Command::Plotdata = cli.command {
        let files = plot::emit_plot_data(&cli.out)?;
        for f in files {
            println!("{}", cli.out.join("plot").join(f).display());
        }
        return Ok(true);
    }
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Parse("--scenario is required".into()))?;
    let scenario = Scenario::load(path)?;
    let task = resolve_task(cli.command, &scenario)?;
    let opts = Options {
        out: cli.out.clone(),
        threads: cli.threads.max(1),
        deterministic: cli.deterministic,
        seed: cli.seed,
    };
    run::run(&task, &scenario, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
