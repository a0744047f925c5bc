//! Command-line front end: argument parsing, validation and report writing.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use commands::{execute, Outcome};
pub use config::{Command, DomainSpec, ExperimentConfig, NamedDomain};

use crate::error::{Error, Result};
use crate::suite::default_schedule;
use crate::testfn::{DEFAULT_EPSILONS, DEFAULT_SHAPES};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "meanfield", version, about = "Mean-field equation experiments on planar domains")]
pub struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    pub command: Command,
    /// Domain spec file (TOML); may be repeated.
    #[arg(long = "spec", value_name = "PATH")]
    pub specs: Vec<PathBuf>,
    /// Built-in domain: disk, square, ellipse-2:1, ellipse-4:1, rectangle-0.8, fourier.
    #[arg(long = "builtin", value_name = "NAME")]
    pub builtins: Vec<String>,
    /// Maximum mesh edge length.
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Continuation schedule, comma separated; `pi` suffix allowed.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Concentration parameters for the test-function grid.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Shape parameters for the test-function grid.
    #[arg(long)]
    pub shapes: Option<String>,
    /// Output directory.
    #[arg(long, env = "MEANFIELD_OUT", default_value = "meanfield-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20260101)]
    pub seed: u64,
    /// Multiplier applied to every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
}

impl Cli {
    /// Resolves and validates everything; no files are touched.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut domains = Vec::new();
        for p in &self.specs {
            domains.push(config::load_spec(p)?);
        }
        for b in &self.builtins {
            domains.push(config::builtin(b)?);
        }
        let list = |s: &Option<String>, default: &[f64]| -> Result<Vec<f64>> {
            s.as_deref().map_or_else(|| Ok(default.to_vec()), config::parse_csv)
        };
        let cfg = ExperimentConfig {
            command: self.command,
            domains,
            h: self.h,
            schedule: list(&self.schedule, &default_schedule())?,
            epsilons: list(&self.epsilons, &DEFAULT_EPSILONS)?,
            shapes: list(&self.shapes, &DEFAULT_SHAPES)?,
            out: self.out.clone(),
            seed: self.seed,
            tol_scale: self.tol_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_numeric(e: &Error) -> bool {
    matches!(
        e,
        Error::Accuracy(_)
            | Error::IllConditioned { .. }
            | Error::Diverged { .. }
            | Error::SingularSystem(_)
            | Error::Resolution { .. }
            | Error::Window { .. }
            | Error::Mesh { .. }
            | Error::Singularity { .. }
    )
}

/// Runs the CLI and returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error in {}: {e}", cfg.command.name());
            return if is_numeric(&e) { EXIT_NUMERIC } else { EXIT_INPUT };
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create {}: {e}", cfg.out.display());
        return EXIT_INPUT;
    }
    for (name, report) in &outcome.reports {
        let path = cfg.out.join(name);
        if let Err(e) = report.write_to(&path) {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
        println!("wrote {}", path.display());
    }
    if outcome.failed_gates.is_empty() {
        EXIT_OK
    } else {
        for g in &outcome.failed_gates {
            eprintln!("gate failed: {g}");
        }
        EXIT_NUMERIC
    }
}
