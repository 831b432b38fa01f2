//! Config-driven experiments over the `qustat` library.
//!
//! A run reads one JSON config, computes, and writes `manifest.json`,
//! `result.json` and `tables/*.csv` into an output directory. Outputs depend
//! only on the config, so identical configs give byte-identical files.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

pub use config::ExperimentConfig;
pub use run::{execute, Artifacts, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Exit code 1; nothing is written.
    Validation(String),
    /// Exit code 2.
    Budget(String),
    /// Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Budget(_) => "budget",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Budget(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind(), "exit_code": self.exit_code(), "message": self.message()}}).to_string()
    }
}

impl From<qustat::Error> for CliError {
    fn from(e: qustat::Error) -> Self {
        use qustat::Error as E;
        match e {
            E::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            E::Numerical(_) | E::Truncation(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qustat", version, about = "Quantum U-statistics experiments")]
pub struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "qustat-out")]
    pub out_dir: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Reads, validates and applies overrides.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn manifest(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "command": cfg.command.name(),
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "versions": {"qustat": qustat::VERSION, "qustat-cli": env!("CARGO_PKG_VERSION")},
        "config": cfg,
    })
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Numerical(format!("cannot write {}: {e}", path.display()))
}

pub fn write_outputs(cfg: &ExperimentConfig, artifacts: &Artifacts, out_dir: &Path) -> Result<(), CliError> {
    let tables = out_dir.join("tables");
    fs::create_dir_all(&tables).map_err(|e| io_error(&tables, e))?;
    let write = |path: PathBuf, text: String| fs::write(&path, text).map_err(|e| io_error(&path, e));
    write(out_dir.join("manifest.json"), pretty(&manifest(cfg)))?;
    write(out_dir.join("result.json"), pretty(&artifacts.result))?;
    for t in &artifacts.tables {
        write(tables.join(format!("{}.csv", t.name)), t.to_csv())?;
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// Full run: load, compute, write. Tolerance failures still write outputs.
pub fn run_with(args: &Args) -> Result<(), CliError> {
    let cfg = load_config(&args.config, args.seed)?;
    let artifacts = execute(&cfg)?;
    write_outputs(&cfg, &artifacts, &args.out_dir)?;
    match artifacts.tolerance_failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

/// Parses arguments, runs, reports errors as JSON on stderr and returns the
/// process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("{}", CliError::Validation(e.to_string()).to_json());
            return 1;
        }
    };
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("{}", CliError::Validation("--threads must be positive".into()).to_json());
            return 1;
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match run_with(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
