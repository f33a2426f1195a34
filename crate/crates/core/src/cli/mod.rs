//! Experiment runner: config parsing, orchestration and CSV/JSON artifacts.
//!
//! Exit codes: 0 when every built-in check passes, 1 when a check fails,
//! 2 for a malformed or invalid config, 3 for a numerical or I/O failure.

mod config;
mod run;
mod table;

pub use config::{
    config_from_map, config_object, parse_config, ConfigError, Coupling, CovarianceMethod, ExperimentConfig, FieldError, Kind, ModelBlock,
};
pub use run::{default_nu_max, run_experiment, vieta_residuals, RunOutput};
pub use table::{format_float, Cell, Table};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bathlab", version, about = "Oscillator coupled to a Lorentzian heat bath: exact law, regimes and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic roots, regime and response coefficients.
    Roots(Common),
    /// Memory kernel Q(t), closed form against quadrature.
    Kernel(Common),
    /// Gaussian coefficients A, B, C over time.
    Covariance(Common),
    /// Density of the system oscillator on a diagnostic grid.
    Density(Common),
    /// Log-linear decay fit of the density at fixed points.
    DecayFit(Common),
    /// Finite-bath Monte Carlo moments.
    Ensemble(Common),
    /// Roots and positivity across a grid of couplings.
    RegimeScan(Common),
    /// Growth rate of the mean with the bath at rest.
    Runaway(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config, or a summary written by an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::Roots(c) => (Kind::Roots, c),
            Command::Kernel(c) => (Kind::Kernel, c),
            Command::Covariance(c) => (Kind::Covariance, c),
            Command::Density(c) => (Kind::Density, c),
            Command::DecayFit(c) => (Kind::DecayFit, c),
            Command::Ensemble(c) => (Kind::Ensemble, c),
            Command::RegimeScan(c) => (Kind::RegimeScan, c),
            Command::Runaway(c) => (Kind::Runaway, c),
        }
    }
}

/// Parses config text for `kind`, applying a seed override where the kind
/// takes a seed.
pub fn load_config(text: &str, kind: Kind, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let mut obj = config_object(text)?;
    if let (Some(s), Kind::Ensemble) = (seed, kind) {
        obj.insert("seed".into(), Value::from(s));
    }
    config_from_map(&obj, Some(kind))
}

/// Writes `<kind>.csv` and/or `<kind>.json` into `dir`.
pub fn write_outputs(output: &RunOutput, dir: &Path, format: Format) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{}.csv", output.kind.name()));
        std::fs::write(&path, &output.csv)?;
        written.push(path);
    }
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(format!("{}.json", output.kind.name()));
        std::fs::write(&path, output.summary_text())?;
        written.push(path);
    }
    Ok(written)
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, common) = cli.command.split();
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return EXIT_CONFIG;
        }
    };
    let cfg = match load_config(&text, kind, common.seed) {
        Ok(c) => c,
        Err(ConfigError::Validation(errors)) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let output = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match write_outputs(&output, &common.out, common.format) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return EXIT_RUNTIME;
        }
    }
    let failed: Vec<&String> = output
        .checks()
        .iter()
        .filter(|(_, v)| v.as_bool() != Some(true))
        .map(|(k, _)| k)
        .collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        for name in failed {
            eprintln!("check failed: {name}");
        }
        EXIT_CHECKS_FAILED
    }
}
