//! `spinring` command line.
//!
//! ```text
//! spinring <ground|map|bisep|scan|defect|verdict|thermal>
//!          [--config PATH] [--format csv|json] [--out PATH] [--seed N] [--workers N]
//! ```
//!
//! Exit status: 0 on success, 2 on a configuration error, 3 on a solver
//! failure. Data goes to stdout (or `--out`), diagnostics to stderr.
//!
//! CSV columns per command (sites and offsets are 1-based):
//!
//! | command | columns |
//! |---|---|
//! | ground  | e0, gap, s2, degenerate, iterations, residual |
//! | map     | theta_b, z_diff_b, modulus_b, theta_a, z_diff_a |
//! | bisep   | row (branch/decoupled/min), eta, z0, converged, iterations, ebs, ebs_minus_e0, residual |
//! | scan    | row (arc/min), n_a, n_b, offset, eta, decoupled, ebs, ebs_minus_e0, status |
//! | defect  | label, s_m, k, ebs, cost, spinless, status |
//! | verdict | k, ebs_k, entangled |
//! | thermal | row (curve/threshold/global_ebs), t, energy, residual |
//!
//! The config schema and its defaults are documented in [`config`].

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::error::Error;
use config::{Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "spinring", version, about = "Entanglement witness thresholds for Heisenberg spin rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Ground energy, gap, total spin and degeneracy
    Ground,
    /// One-step boundary map of a chain over a grid of boundary fields
    Map,
    /// Biseparable minimum of one bipartition, branch by branch
    Bisep,
    /// Biseparable minima of all contiguous bipartitions
    Scan,
    /// Single-site thresholds of a defect substitution series
    Defect,
    /// Which spins a measured energy proves entangled
    Verdict,
    /// Thermal energy curve and threshold temperatures
    Thermal,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ground => "ground",
            Command::Map => "map",
            Command::Bisep => "bisep",
            Command::Scan => "scan",
            Command::Defect => "defect",
            Command::Verdict => "verdict",
            Command::Thermal => "thermal",
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidSpin(_)
        | Error::InvalidModel(_)
        | Error::SiteOutOfRange { .. }
        | Error::InteriorField { .. }
        | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.format.is_some() {
        cfg.format = cli.format;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    Ok(cfg)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
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
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };

    let workers = cfg.workers.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {workers} workers: {e}");
            return EXIT_CONFIG;
        }
    };
    let command = cli.command;
    let outcome = pool.install(|| match command {
        Command::Ground => commands::ground(&cfg),
        Command::Map => commands::map(&cfg),
        Command::Bisep => commands::bisep(&cfg),
        Command::Scan => commands::scan(&cfg),
        Command::Defect => commands::defect(&cfg),
        Command::Verdict => commands::verdict_cmd(&cfg),
        Command::Thermal => commands::thermal(&cfg),
    });
    let mut outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }

    let mut meta: Vec<(String, output::Cell)> = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").into()),
        ("command".to_string(), command.name().into()),
        ("seed".to_string(), cfg.seed().to_string().into()),
        (
            "config_sha256".to_string(),
            Sha256::digest(cfg.canonical().as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
                .into(),
        ),
    ];
    meta.append(&mut outcome.table.metadata);
    outcome.table.metadata = meta;

    let text = outcome.table.render(cfg.format.unwrap_or_default());
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return EXIT_CONFIG;
            }
        }
    }
    EXIT_OK
}
