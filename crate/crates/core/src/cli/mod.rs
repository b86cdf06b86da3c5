//! Command-line driver: `simulate`, `solve`, `compare` and `transform-check`.
//!
//! Every run writes into `<out>/<command>-<hash>`, where the hash is taken
//! over the canonical form of the config, and refuses to reuse an existing
//! run directory unless `--force` is given.

mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::exec::{configure_threads, Execution};
pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "marcus", version, about = "Marcus SDEs under Levy noise: simulation, Fokker-Planck solves, comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path ensemble.
    Simulate(CommonArgs),
    /// Solve the nonlocal Fokker-Planck equation.
    Solve(CommonArgs),
    /// Compare two densities.
    Compare(CommonArgs),
    /// Check the jump-map identities of the configured σ.
    TransformCheck(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Parent of the run directory [default: the config's `output`, else `runs`].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    pub force: bool,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Solve(_) => "solve",
            Command::Compare(_) => "compare",
            Command::TransformCheck(_) => "transform-check",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) | Command::Solve(a) | Command::Compare(a) | Command::TransformCheck(a) => a,
        }
    }
}

/// Outcome of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Tolerance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Tolerance(m) => write!(f, "tolerance exceeded: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

pub(crate) fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

/// Short stable digest of the canonical config.
pub fn config_hash(command: &str, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(cfg.canonical_json().as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// Creates the run directory, clearing it first when forced.
pub fn prepare_run_dir(parent: &Path, command: &str, cfg: &RunConfig, force: bool) -> Result<PathBuf, Failure> {
    let dir = parent.join(format!("{command}-{}", config_hash(command, cfg)));
    if dir.exists() {
        if !force {
            return Err(Failure::Config(format!("run directory {} exists; pass --force to overwrite", dir.display())));
        }
        fs::remove_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    }
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg).expect("config serialises") + "\n")
        .map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(_) => EXIT_OK,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<PathBuf, Failure> {
    let args = command.args();
    let exec = match args.threads {
        Some(0) => return Err(Failure::Config("--threads must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            // A second install in the same process is harmless; keep the first pool.
            let _ = configure_threads(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let text = fs::read_to_string(&args.config).map_err(|e| io_failure(&args.config, e))?;
    let cfg = RunConfig::parse(&text)?;
    let parent = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let name = command.name();
    // Validate before touching the file system.
    match command {
        Command::Simulate(_) => commands::check_simulate(&cfg)?,
        Command::Solve(_) => commands::check_solve(&cfg)?,
        Command::Compare(_) => commands::check_compare(&cfg)?,
        Command::TransformCheck(_) => commands::check_transform(&cfg)?,
    }
    let dir = prepare_run_dir(&parent, name, &cfg, args.force)?;
    println!("run directory: {}", dir.display());
    let base = args.config.parent().unwrap_or(Path::new("."));
    match command {
        Command::Simulate(_) => commands::simulate(&cfg, &dir, exec),
        Command::Solve(_) => commands::solve(&cfg, &dir, exec),
        Command::Compare(_) => commands::compare(&cfg, &dir, base, exec),
        Command::TransformCheck(_) => commands::transform_check(&cfg, &dir),
    }?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#""model": {"sigma": {"kind": "constant", "value": 1}, "triplet": {"b": 0, "a": 1, "nu": {"kind": "null"}}}"#;

    #[test]
    fn hash_ignores_layout_and_depends_on_command() {
        let a = RunConfig::parse(&format!("{{{MODEL}}}")).unwrap();
        let b = RunConfig::parse(&format!("{{\n   {}\n}}", MODEL.replace(", ", ",\n  "))).unwrap();
        assert_eq!(config_hash("solve", &a), config_hash("solve", &b));
        assert_ne!(config_hash("solve", &a), config_hash("simulate", &a));
        assert_eq!(config_hash("solve", &a).len(), 16);
    }

    #[test]
    fn run_dir_refuses_overwrite_without_force() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig::parse(&format!("{{{MODEL}}}")).unwrap();
        let dir = prepare_run_dir(tmp.path(), "solve", &cfg, false).unwrap();
        fs::write(dir.join("stale.txt"), "x").unwrap();
        assert!(matches!(prepare_run_dir(tmp.path(), "solve", &cfg, false), Err(Failure::Config(_))));
        let again = prepare_run_dir(tmp.path(), "solve", &cfg, true).unwrap();
        assert_eq!(again, dir);
        assert!(!dir.join("stale.txt").exists());
        assert!(dir.join("config.json").exists());
    }
}
