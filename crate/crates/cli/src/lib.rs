//! `jpdlab` command-line front end.
//!
//! Every command produces a [`report::Report`]. Standard output carries the
//! text view (`--format text`, the default) or the TOML document
//! (`--format structured`); the TOML document is also written to `--out`,
//! or to `$JPDLAB_OUT_DIR/<command>.toml` when only the variable is set.
//! `scan` is the exception: its data product is CSV.

mod commands;
pub mod report;
mod selftest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use report::Header;

pub const OUT_DIR_ENV: &str = "JPDLAB_OUT_DIR";

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Io(_) => 1,
        }
    }
}

impl From<jpdlab_core::Error> for CliError {
    fn from(e: jpdlab_core::Error) -> Self {
        match e {
            jpdlab_core::Error::Resource(_) => CliError::Resource(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "jpdlab",
    version,
    about = "Joint-probability tests of contextual, temporal and spatial correlation inequalities"
)]
pub struct Cli {
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the structured report (CSV for `scan`) to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a named configuration: correlators, LHS, classical bound.
    Evaluate {
        /// kcbs-contextual, kcbs-temporal, kcbs-spatial or chained-N.
        builder: String,
        #[command(flatten)]
        temporal: TemporalArgs,
    },
    /// Decide whether a joint distribution reproduces the pair marginals.
    Feasibility {
        /// Builder whose quantum marginals are tested.
        builder: Option<String>,
        /// Scenario file (TOML) with `pairs`, `correlators` or `builder`.
        #[arg(long, conflicts_with = "builder")]
        scenario: Option<PathBuf>,
        /// Adjacent correlators, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["builder", "scenario"])]
        correlators: Option<Vec<f64>>,
        /// Single expectations (default all zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "correlators")]
        singles: Option<Vec<f64>>,
        /// Inequality signs for `--correlators` (default canonical).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "correlators")]
        signs: Option<Vec<i8>>,
        /// Export the witness distribution to this path.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[command(flatten)]
        temporal: TemporalArgs,
    },
    /// Classical bound of an n-cycle inequality by exhaustive enumeration.
    Bound {
        /// Cycle length (canonical signs unless --all-plus).
        #[arg(long, conflicts_with_all = ["signs", "scenario"])]
        n: Option<usize>,
        /// Use +1 on every term instead of the canonical signs.
        #[arg(long, requires = "n")]
        all_plus: bool,
        /// Explicit sign vector, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "scenario")]
        signs: Option<Vec<i8>>,
        /// Scenario file (TOML) carrying `signs`.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Consistent-histories decomposition of a three-time correlation test.
    Histories {
        /// Protocol time indices used as the three slots.
        #[arg(long, value_delimiter = ',', num_args = 1, conflicts_with = "angles")]
        slots: Option<Vec<usize>>,
        /// Instead of the protocol: M(α) observables on a maximally mixed qubit.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
        #[command(flatten)]
        temporal: TemporalArgs,
    },
    /// Sweep a parameter or repeat the optimizer; emits CSV.
    Scan {
        #[arg(value_enum)]
        mode: ScanMode,
        /// First parameter value (mode-specific default).
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        /// Last parameter value (mode-specific default).
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// Cycle length for temporal-step, spatial-angle and optimize.
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Search space for `optimize`.
        #[arg(long, default_value = "temporal-times")]
        space: String,
        /// Number of seeds for `optimize` (rows use seed, seed+1, ...).
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Starts per optimizer run.
        #[arg(long, default_value_t = jpdlab_core::search::DEFAULT_STARTS)]
        starts: usize,
    },
    /// Run the invariant suite on seeded random draws.
    Selftest {
        /// Random draws per check.
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct TemporalArgs {
    /// Measurement times for kcbs-temporal, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,
    /// Angular rate of the kcbs-temporal evolution.
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanMode {
    /// Chained inequality value against n.
    ChainedN,
    /// Equally spaced temporal protocol, parameter = time step.
    TemporalStep,
    /// Equally spaced in-plane settings on |φ+⟩, parameter = angle step.
    SpatialAngle,
    /// Repeated optimizer runs, parameter = seed.
    Optimize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evaluate { .. } => "evaluate",
            Command::Feasibility { .. } => "feasibility",
            Command::Bound { .. } => "bound",
            Command::Histories { .. } => "histories",
            Command::Scan { .. } => "scan",
            Command::Selftest { .. } => "selftest",
        }
    }
}

/// What a finished command produced.
#[derive(Debug, Clone)]
pub struct Output {
    pub stdout: String,
    pub failures: Vec<String>,
}

impl Output {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            EXIT_VERIFICATION
        }
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn default_out(cli: &Cli, extension: &str) -> Option<PathBuf> {
    cli.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map(|dir| PathBuf::from(dir).join(format!("{}.{extension}", cli.command.name())))
    })
}

/// Execute a parsed command line. `argv` (without the program name) is
/// recorded in the report header so a report can be replayed.
pub fn run(cli: &Cli, argv: &[String]) -> CliResult<Output> {
    let started = Instant::now();
    let (report, csv) = match &cli.command {
        Command::Evaluate { builder, temporal } => (commands::evaluate(builder, temporal)?, None),
        Command::Feasibility {
            builder,
            scenario,
            correlators,
            singles,
            signs,
            witness,
            temporal,
        } => {
            let input = commands::FeasibilityInput {
                builder: builder.as_deref(),
                scenario: scenario.as_deref(),
                correlators: correlators.as_deref(),
                singles: singles.as_deref(),
                signs: signs.as_deref(),
                temporal,
            };
            (commands::feasibility(&input, witness.as_deref())?, None)
        }
        Command::Bound {
            n,
            all_plus,
            signs,
            scenario,
        } => (commands::bound(*n, *all_plus, signs.as_deref(), scenario.as_deref())?, None),
        Command::Histories {
            slots,
            angles,
            temporal,
        } => (commands::histories(slots.as_deref(), angles.as_deref(), temporal)?, None),
        Command::Scan {
            mode,
            from,
            to,
            steps,
            n,
            space,
            seeds,
            starts,
        } => {
            let spec = commands::ScanSpec {
                mode: *mode,
                from: *from,
                to: *to,
                steps: *steps,
                n: *n,
                space,
                seeds: *seeds,
                starts: *starts,
                seed: cli.seed,
            };
            let (report, csv) = commands::scan(&spec)?;
            (report, Some(csv))
        }
        Command::Selftest { draws } => (selftest::run(*draws, cli.seed)?, None),
    };

    let header = Header {
        command: cli.command.name().to_string(),
        args: argv.to_vec(),
        seed: cli.seed,
        elapsed_ms: started.elapsed().as_millis(),
    };
    let structured = report.structured(&header);
    let stdout = match (cli.format, &csv) {
        (Format::Structured, _) => structured.clone(),
        (Format::Text, Some(csv)) => csv.clone(),
        (Format::Text, None) => report.text.clone(),
    };
    match &csv {
        Some(csv) => {
            if let Some(path) = default_out(cli, "csv") {
                write_file(&path, csv)?;
            }
        }
        None => {
            if let Some(path) = default_out(cli, "toml") {
                write_file(&path, &structured)?;
            }
        }
    }
    Ok(Output {
        stdout,
        failures: report.failures,
    })
}

/// Strip the `[header]` table from a structured report, leaving the part
/// that is identical across runs with the same arguments.
pub fn without_header(structured: &str) -> &str {
    structured
        .split_once("\n\n")
        .map(|(_, body)| body)
        .unwrap_or(structured)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_failures_map_to_exit_four() {
        let ok = Output { stdout: String::new(), failures: vec![] };
        let bad = Output { stdout: String::new(), failures: vec!["residual".into()] };
        assert_eq!(ok.exit_code(), 0);
        assert_eq!(bad.exit_code(), EXIT_VERIFICATION);
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let r: CliError = jpdlab_core::Error::Resource("big".into()).into();
        assert_eq!(r.exit_code(), EXIT_RESOURCE);
        let p: CliError = jpdlab_core::Error::Parse("bad".into()).into();
        assert_eq!(p.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn header_is_split_off() {
        let text = "[header]\ntool = \"jpdlab\"\n\n[bound]\nclassical_bound = -3\n";
        assert_eq!(without_header(text), "[bound]\nclassical_bound = -3\n");
    }
}
