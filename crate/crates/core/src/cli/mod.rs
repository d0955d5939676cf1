//! Command-line front end: configuration, the five commands, and output files.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub use commands::{cmd_sobolev, cmd_solve, cmd_sweep, cmd_sync_threshold};
pub use config::{Format, Mode, RunConfig};
pub use output::RunManifest;
pub use verify::{cmd_verify, VerifyHooks, VerifyReport};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
/// Bad configuration or an I/O failure.
pub const EXIT_CONFIG: i32 = 1;
/// The computation ran but a solver or check failed.
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "critsep", version, about = "Nehari solver and phase-separation experiments on the sphere")]
pub struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized initial guesses.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Continue a sweep from the checkpoint in the output directory.
    #[arg(long, global = true)]
    pub resume: bool,
    /// Number of grid cells on the arc.
    #[arg(long, global = true, value_name = "M")]
    pub grid: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimize the energy for one configuration.
    Solve,
    /// Continue in lambda along the configured schedule, then solve the limit problem.
    Sweep,
    /// Locate the coupling below which no synchronized solution exists.
    SyncThreshold,
    /// Run the invariant battery.
    Verify,
    /// Tabulate the Sobolev constant.
    Sobolev,
}

impl Cli {
    /// Loads the configuration and applies the command-line overrides.
    pub fn resolve_config(&self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.solver.seed = seed;
        }
        if let Some(cells) = self.grid {
            config.model.cells = cells;
        }
        Ok(config)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::InvalidParams(_) | Error::Domain(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn dispatch(cli: &Cli, hooks: &VerifyHooks) -> Result<(), Error> {
    let config = cli.resolve_config()?;
    match cli.command {
        Command::Solve => {
            let (_, s) = cmd_solve(&config)?;
            println!("energy {}  grad_norm {:.3e}  iterations {}", s.energy, s.grad_norm, s.iterations);
            for (name, ok) in &s.checks {
                println!("  {name}: {}", if *ok { "ok" } else { "FAILED" });
            }
        }
        Command::Sweep => {
            let (_, s) = cmd_sweep(&config, cli.resume)?;
            println!("{} rows ({} usable, {} resumed)", s.rows, s.usable_rows, s.resumed_rows);
            if let Some(e) = s.limit_energy {
                println!("limit energy {e}");
            }
        }
        Command::SyncThreshold => {
            let (_, s) = cmd_sync_threshold(&config)?;
            println!("threshold in [{}, {}]", s.lo, s.hi);
            if let Some(c) = s.closed_form {
                println!("closed form {c}");
            }
            println!(
                "brute scan: {} solutions at 0.99 x threshold, {} at 1.01 x threshold",
                s.scan_inside, s.scan_outside
            );
        }
        Command::Verify => {
            cmd_verify(&config, hooks)?;
        }
        Command::Sobolev => {
            let (_, rows) = cmd_sobolev(&config)?;
            for r in rows {
                println!(
                    "N = {}  S = {:.12}  via sphere {:.12}  rel diff {:.1e}",
                    r.dim, r.sobolev_constant, r.via_sphere, r.relative_difference
                );
            }
        }
    }
    Ok(())
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    run_with_hooks(cli, &VerifyHooks::default())
}

pub fn run_with_hooks(cli: &Cli, hooks: &VerifyHooks) -> i32 {
    match dispatch(cli, hooks) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests;
