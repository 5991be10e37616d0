//! `agefresh`: exact and simulated information-freshness metrics for
//! single-buffer queues with server vacations and for polling rings.
//!
//! Each subcommand selects a run mode; flags assemble or override an
//! [`ExperimentConfig`] that a file given with `--config` may also
//! provide. Results land in one CSV table shape (see the report module)
//! on stdout, in `--out`, or inside a `--json` envelope.
//!
//! | Exit code | Meaning                                          |
//! |-----------|--------------------------------------------------|
//! | 0         | success                                          |
//! | 2         | invalid input: flags, config fields, model shape |
//! | 3         | numerical failure: singular or inconsistent math |
//! | 4         | verify mode found a value outside its interval   |
//!
//! # Design Notes
//!
//! `AGEFRESH_THREADS` caps the worker pool used for sweep points and
//! simulation replications; output order never depends on it. Flags win
//! over file fields one field at a time, so a shared config can pin a
//! model while the command line varies seeds or policies.

mod config;
mod report;
mod run;

use std::env;
use std::path::PathBuf;
use std::process::ExitCode;

use agefresh::analytic::Policy;
use agefresh::distributions::DistributionSpec;
use agefresh::{Error, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{invalid, ExperimentConfig, Mode, PollingSection, QueueSection, SimSection, SweepSection};

// =====================================================================
// Command-line surface
// =====================================================================

#[derive(Parser)]
#[command(
    name = "agefresh",
    version,
    about = "Exact and simulated information-freshness metrics for single-buffer vacation queues and polling rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact age metrics for the single-station queue model.
    Analytic(CommonArgs),
    /// Closed forms for the three vacation-free reference systems.
    #[command(name = "no-vacation")]
    NoVacation(CommonArgs),
    /// Exact per-station peak age for a polling ring.
    Polling(CommonArgs),
    /// Discrete-event simulation with 95% confidence intervals.
    Simulate(CommonArgs),
    /// Exact metrics along one swept model parameter.
    Sweep(CommonArgs),
    /// Cross-check exact metrics against simulation intervals.
    Verify(CommonArgs),
    /// Policy-comparison diagnostics for the queue model.
    Dominance(CommonArgs),
    /// Print the effective configuration as a reloadable file.
    #[command(name = "dump-config")]
    DumpConfig(CommonArgs),
}

/// Flags shared by every subcommand. Each one overrides the matching
/// configuration field; unset flags leave file or default values alone.
#[derive(Args)]
struct CommonArgs {
    /// Configuration file; flags override its fields.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Comma-separated policies: cbs, brs, cbsp.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    policy: Option<Vec<String>>,

    /// Arrival rate of the queue model.
    #[arg(long, value_name = "RATE", allow_negative_numbers = true)]
    lambda: Option<f64>,

    /// Service distribution literal: exp(v), gamma(a,b), det(d).
    #[arg(long, value_name = "DIST")]
    service: Option<String>,

    /// Vacation distribution literal: exp(v), gamma(a,b), det(d).
    #[arg(long, value_name = "DIST")]
    vacation: Option<String>,

    /// Station count for the polling preset.
    #[arg(long, value_name = "N")]
    k: Option<usize>,

    /// Total arrival rate for the polling preset.
    #[arg(long, value_name = "RATE", allow_negative_numbers = true)]
    load: Option<f64>,

    /// Routing scheme: cyclic, lop, symmetric.
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,

    /// Swept parameter: lambda, service_rate, vacation_rate.
    #[arg(long, value_name = "NAME")]
    param: Option<String>,

    /// Comma-separated sweep values.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,

    /// Generated sweep axis start:stop:count.
    #[arg(long, value_name = "RANGE")]
    range: Option<String>,

    /// Sweep spacing: linear or log.
    #[arg(long, value_name = "NAME")]
    scale: Option<String>,

    /// Base random seed for simulation.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Delivered peaks per simulation replication.
    #[arg(long, value_name = "N")]
    peaks: Option<usize>,

    /// Independent simulation replications to pool.
    #[arg(long, value_name = "N")]
    replications: Option<usize>,

    /// CSV destination; stdout when unset.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Emit a JSON envelope on stdout instead of CSV.
    #[arg(long)]
    json: bool,
}

// =====================================================================
// Assembly
// =====================================================================

fn parse_distribution(field: &'static str, literal: &str) -> Result<DistributionSpec> {
    literal
        .parse::<DistributionSpec>()
        .map_err(|e| invalid(field, e.to_string()))
}

/// Merge the file (or defaults), the command's mode, and the flags into
/// one validated configuration. `mode` is `None` for `dump-config`,
/// which keeps whatever mode the file names.
fn assemble(mode: Option<Mode>, args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(mode) = mode {
        config.mode = mode;
    }

    if let Some(names) = &args.policy {
        let mut policies = Vec::with_capacity(names.len());
        for name in names {
            policies.push(name.parse::<Policy>().map_err(|e| invalid("policy", e.to_string()))?);
        }
        config.policies = policies;
    }

    if args.lambda.is_some() || args.service.is_some() || args.vacation.is_some() {
        let queue = config.queue.get_or_insert_with(QueueSection::default);
        if let Some(lambda) = args.lambda {
            queue.lambda = lambda;
        }
        if let Some(literal) = &args.service {
            queue.service = parse_distribution("service", literal)?;
        }
        if let Some(literal) = &args.vacation {
            queue.vacation = parse_distribution("vacation", literal)?;
        }
    }

    if args.k.is_some() || args.load.is_some() || args.scheme.is_some() {
        let polling = config.polling.get_or_insert_with(PollingSection::default);
        if let Some(k) = args.k {
            polling.k = Some(k);
        }
        if let Some(load) = args.load {
            polling.load = Some(load);
        }
        if let Some(name) = &args.scheme {
            polling.scheme = Some(name.parse().map_err(|e: Error| invalid("scheme", e.to_string()))?);
        }
    }
    // Polling mode falls back to the built-in preset ring.
    if config.mode == Mode::Polling && config.polling.is_none() {
        config.polling = Some(PollingSection::default());
    }

    if args.param.is_some() || args.values.is_some() || args.range.is_some() || args.scale.is_some() {
        let sweep = config.sweep.get_or_insert_with(SweepSection::empty);
        if let Some(name) = &args.param {
            sweep.parameter = name.clone();
        }
        if let Some(values) = &args.values {
            sweep.values = Some(values.clone());
            sweep.range = None;
        }
        if let Some(range) = &args.range {
            sweep.range = Some(range.clone());
            sweep.values = None;
        }
        if let Some(name) = &args.scale {
            sweep.scale = Some(name.parse()?);
        }
    }

    if args.seed.is_some() || args.peaks.is_some() || args.replications.is_some() {
        let sim = config.sim.get_or_insert_with(SimSection::default);
        if let Some(seed) = args.seed {
            sim.seed = Some(seed);
        }
        if let Some(peaks) = args.peaks {
            sim.peaks = Some(peaks);
        }
        if let Some(replications) = args.replications {
            sim.replications = Some(replications);
        }
    }

    if let Some(out) = &args.out {
        config.out = Some(out.display().to_string());
    }
    if args.json {
        config.json = true;
    }

    config.validate()?;
    Ok(config)
}

// =====================================================================
// Process plumbing
// =====================================================================

/// Cap the worker pool when `AGEFRESH_THREADS` is set.
fn init_threads() -> Result<()> {
    let Ok(raw) = env::var("AGEFRESH_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid("AGEFRESH_THREADS", format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| invalid("AGEFRESH_THREADS", e.to_string()))
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::InvalidParameter { .. } | Error::Parse(_) | Error::Unsupported(_) => 2,
        Error::SingularSystem { .. } | Error::NumericalInconsistency { .. } => 3,
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let (mode, args) = match &cli.command {
        Command::Analytic(args) => (Some(Mode::Analytic), args),
        Command::NoVacation(args) => (Some(Mode::NoVacation), args),
        Command::Polling(args) => (Some(Mode::Polling), args),
        Command::Simulate(args) => (Some(Mode::Simulate), args),
        Command::Sweep(args) => (Some(Mode::Sweep), args),
        Command::Verify(args) => (Some(Mode::Verify), args),
        Command::Dominance(args) => (Some(Mode::Dominance), args),
        Command::DumpConfig(args) => (None, args),
    };
    let config = assemble(mode, args)?;
    if matches!(cli.command, Command::DumpConfig(_)) {
        run::dump(&config)
    } else {
        run::execute(&config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(error) = init_threads() {
        eprintln!("agefresh: {error}");
        return ExitCode::from(2);
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(error) => {
            eprintln!("agefresh: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}
