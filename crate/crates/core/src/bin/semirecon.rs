use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use semirecon::experiments::io::write_json;
use semirecon::experiments::{cmd_convergence, cmd_reconstruct, cmd_synthesize, cmd_verify, load_scenario};
use semirecon::{Error, Result};

/// Recover the semilinear term of a heat equation from boundary data.
#[derive(Parser)]
#[command(name = "semirecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write an observation.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reconstruct f from an observation directory.
    Reconstruct {
        #[arg(long)]
        observation: PathBuf,
        /// Scenario to use instead of the one recorded in the observation.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run invariant suites: eigen, kernel, representation, forward,
    /// volterra, extension or all.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        /// Also write the JSON summary to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Manufactured-solution refinement study for a scenario.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn print(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).unwrap_or_default());
}

fn paths(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Synthesize { config, seed } => {
            let files = cmd_synthesize(&load_scenario(&config, seed)?)?;
            print(&json!({ "written": paths(&files) }));
        }
        Command::Reconstruct { observation, config } => {
            let config = config.map(|c| load_scenario(&c, None)).transpose()?;
            let out = cmd_reconstruct(&observation, config.as_ref())?;
            print(&json!({
                "written": paths(&out.files),
                "trusted_range": out.reconstruction.curve.trusted,
                "metrics": out.metrics.map(|m| m.errors),
            }));
        }
        Command::Verify { suite, output } => {
            let report = cmd_verify(&suite)?;
            let value = serde_json::to_value(&report).map_err(Error::from)?;
            if let Some(path) = output {
                write_json(&path, &value)?;
            }
            print(&value);
            if !report.passed {
                return Ok(1);
            }
        }
        Command::Convergence { config, levels } => {
            let out = cmd_convergence(&load_scenario(&config, None)?, levels)?;
            print(&json!({ "written": out.file.display().to_string(), "spatial": out.spatial, "temporal": out.temporal }));
        }
    }
    Ok(0)
}

fn status(result: Result<u8>) -> u8 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code() as u8
    })
}

fn main() -> ExitCode {
    ExitCode::from(status(run(Cli::parse())))
}
