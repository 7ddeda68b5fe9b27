//! Command-line front end of the `relaysim` binary.
//!
//! ```text
//! relaysim simulate --config <path> --out <dir> [--set key=value]... [--threads N]
//! relaysim validate [--level quick|full]
//! relaysim quadrature --m M
//! ```
//!
//! Exit codes: 0 success, 1 failed validation or I/O error, 2 invalid
//! configuration or arguments, 3 numerical failure.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::quadrature::gh_build;
use crate::sim::run_experiment;

pub use config::{config_digest, load_config, SEED_ENV};
pub use output::RunManifest;
pub use validate::{Hooks, Level};

#[derive(Debug, Parser)]
#[command(name = "relaysim", version, about = "Spatially controlled relay beamforming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo experiment and write CSV results.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a configuration field, e.g. `--set sim.trials=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Worker threads; 0 picks the number of cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run the built-in correctness checks.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
    /// Print Gauss–Hermite nodes and weights as `node,weight` lines.
    Quadrature {
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Runs an experiment and writes `qos.csv`, `trajectories.csv` and
/// `manifest.json` into `out`.
pub fn cmd_simulate(
    config: &Path,
    out: &Path,
    overrides: &[String],
    threads: usize,
    seed_override: Option<&str>,
) -> Result<RunManifest> {
    let cfg = load_config(config, overrides, seed_override)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} threads: {e}")))?;
    let ex = pool.install(|| run_experiment(&cfg))?;
    std::fs::create_dir_all(out)?;
    let qos = out.join("qos.csv");
    let trajectories = out.join("trajectories.csv");
    std::fs::write(&qos, output::qos_csv(&ex.aggregate))?;
    std::fs::write(&trajectories, output::trajectories_csv(&cfg, &ex.trials))?;
    let manifest = RunManifest {
        digest: config_digest(&cfg)?,
        seed: cfg.sim.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        runtime_seconds: start.elapsed().as_secs_f64(),
        qos,
        trajectories,
        config: cfg,
    };
    output::write_manifest(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn cmd_quadrature<W: Write>(m: i64, out: &mut W) -> Result<()> {
    if m < 1 {
        return Err(Error::Usage(format!("--m must be at least 1, got {m}")));
    }
    let rule = gh_build(m as usize)?;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        writeln!(out, "{},{}", output::fmt_sig(*x, 15), output::fmt_sig(*w, 15))?;
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Simulate {
            config,
            out,
            set,
            threads,
        } => {
            let seed = std::env::var(SEED_ENV).ok();
            match cmd_simulate(&config, &out, &set, threads, seed.as_deref()) {
                Ok(m) => {
                    eprintln!(
                        "wrote {} and {} in {:.1}s",
                        m.qos.display(),
                        m.trajectories.display(),
                        m.runtime_seconds
                    );
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Validate { level } => validate::cmd_validate(level, &Hooks::default(), &mut std::io::stdout()),
        Command::Quadrature { m } => match cmd_quadrature(m, &mut std::io::stdout()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}
