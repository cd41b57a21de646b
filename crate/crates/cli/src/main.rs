use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::CliError;
use config::{ConfigError, RunConfig};

/// Verification and simulation driver for the six-process model.
#[derive(Debug, Parser)]
#[command(name = "hexaproc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    hbar: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mass: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// Spin permutation id, 1..=8.
    #[arg(long, global = true, allow_hyphen_values = true)]
    perm: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    steps: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Any other config key, e.g. `--set grid_n=4001`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Wedge sums and intrinsic spins of the eight permutations.
    SpinTable,
    /// Positions of the six processes and the basic trajectory.
    Simulate,
    /// Position/momentum spreads and their products.
    Heisenberg,
    /// Temporal commutators over one block.
    Commutator,
    /// One-step averaging error over an epsilon ladder.
    DynkinConvergence,
    /// Hamilton-Jacobi residual of the Riccati flow at probe points.
    HjCheck,
    /// Recurrence action against the Riccati flow and the grid solver.
    ActionConverge,
    /// Crank-Nicolson snapshots of a Gaussian packet.
    Schrodinger,
    /// Bohmian trajectories and the continuity check.
    Bohm,
    /// de Broglie step for a given speed.
    Epsilon,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SpinTable => "spin-table",
            Command::Simulate => "simulate",
            Command::Heisenberg => "heisenberg",
            Command::Commutator => "commutator",
            Command::DynkinConvergence => "dynkin-convergence",
            Command::HjCheck => "hj-check",
            Command::ActionConverge => "action-converge",
            Command::Schrodinger => "schrodinger",
            Command::Bohm => "bohm",
            Command::Epsilon => "epsilon",
        }
    }
}

fn overrides(cli: &Cli) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for item in &cli.set {
        let (k, v) = item.split_once('=').ok_or_else(|| ConfigError::Key {
            key: item.clone(),
            message: "expected --set key=value".to_string(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let named = [
        ("hbar", &cli.hbar),
        ("mass", &cli.mass),
        ("epsilon", &cli.epsilon),
        ("perm", &cli.perm),
        ("steps", &cli.steps),
        ("format", &cli.format),
        ("seed", &cli.seed),
    ];
    for (k, v) in named {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("HEXAPROC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| ConfigError::Key {
        key: "HEXAPROC_THREADS".to_string(),
        message: format!("expected a positive integer, got `{raw}`"),
    })?;
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => config::parse_file(path)?,
        None => BTreeMap::new(),
    };
    let cfg = RunConfig::resolve(file, overrides(cli)?)?;
    let report = commands::run(cli.command.name(), &cfg)?;
    Ok(report.render(&cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match execute(&cli) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error[io]: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn error_kind(e: &CliError) -> &'static str {
    match e {
        CliError::Config(_) => "config",
        CliError::Numeric { source } => source.kind(),
    }
}
