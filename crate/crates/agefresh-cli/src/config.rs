//! Experiment configuration: the versioned file schema, its defaults, and
//! the validation that turns raw input into runnable model descriptions.
//!
//! A configuration names a run mode, the policies to evaluate, one or two
//! model sections, and optional sweep and simulation controls:
//!
//! | Section     | Purpose                                                 |
//! |-------------|---------------------------------------------------------|
//! | top level   | `schema_version`, `mode`, `policies`, `out`, `json`     |
//! | `[queue]`   | single-station model: `lambda`, `service`, `vacation`   |
//! | `[polling]` | ring model: explicit vectors or the `k`/`load` preset   |
//! | `[sweep]`   | one parameter axis, explicit `values` or a `range`      |
//! | `[sim]`     | peak target, warmup, seed, replications, batch count    |
//!
//! Distribution fields hold literals such as `exp(1)`, `gamma(2,0.5)`, or
//! `det(1)`. The `[sweep]` section is valid only in sweep mode and must
//! name a parameter that exists in the queue model. Serializing a
//! configuration and parsing the output reproduces the original value
//! exactly, which keeps `dump-config` round trips lossless.
//!
//! # Design Notes
//!
//! The polling preset with no explicit arrival rates places 45% of the
//! offered load on stations 1 and 4 of an eight-station ring and splits
//! the remaining 10% evenly; other station counts share the load equally.
//! Unset preset fields fall back to `k = 8`, `load = 0.85`, exponential
//! unit-mean service, `det(0.0125)` switchovers, and cyclic routing.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use agefresh::analytic::{IidVacationModel, Policy};
use agefresh::distributions::DistributionSpec;
use agefresh::polling::{build_routing, PollingModel, RoutingScheme};
use agefresh::sim::SimConfig;
use agefresh::{Error, Result};
use serde::{Deserialize, Serialize};

/// Schema revision this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 3] = ["lambda", "service_rate", "vacation_rate"];

/// Shorthand for the field-level validation error.
pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        message: message.into(),
    }
}

// =====================================================================
// Run modes
// =====================================================================

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact freshness metrics for the queue model.
    Analytic,
    /// Closed forms for the three vacation-free reference systems.
    NoVacation,
    /// Exact per-station peak age for the polling model.
    Polling,
    /// Discrete-event simulation with confidence intervals.
    Simulate,
    /// Exact metrics along one swept model parameter.
    Sweep,
    /// Exact metrics cross-checked against simulation intervals.
    Verify,
    /// Policy-comparison diagnostics for the queue model.
    Dominance,
}

impl Mode {
    /// Identifier used in file configs and output envelopes.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::NoVacation => "no_vacation",
            Mode::Polling => "polling",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
            Mode::Dominance => "dominance",
        }
    }
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Analytic
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// =====================================================================
// Sections
// =====================================================================

/// Single-station model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSection {
    /// Arrival rate of the Poisson source.
    pub lambda: f64,
    /// Service-time distribution literal.
    pub service: DistributionSpec,
    /// Vacation-time distribution literal.
    pub vacation: DistributionSpec,
}

impl QueueSection {
    /// Build the validated queue model.
    pub fn model(&self) -> Result<IidVacationModel> {
        IidVacationModel::new(self.lambda, self.service, self.vacation)
    }
}

impl Default for QueueSection {
    fn default() -> Self {
        QueueSection {
            lambda: 1.0,
            service: DistributionSpec::exponential(1.0).expect("unit rate is valid"),
            vacation: DistributionSpec::exponential(1.0).expect("unit rate is valid"),
        }
    }
}

/// Polling-ring model parameters. Every field is optional: unset fields
/// fall back to the documented preset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PollingSection {
    /// Station count for the load preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Total arrival rate split by the preset weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
    /// Explicit per-station arrival rates; replaces the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Routing scheme used to build the transition matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<RoutingScheme>,
    /// Explicit row-stochastic routing matrix; replaces `scheme`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routing: Option<Vec<Vec<f64>>>,
    /// Service distribution shared by every station.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<DistributionSpec>,
    /// Per-station service distributions; replaces `service`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub services: Option<Vec<DistributionSpec>>,
    /// Switchover distribution shared by every ordered station pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switchover: Option<DistributionSpec>,
    /// Full switchover matrix indexed `[from][to]`; replaces `switchover`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switchovers: Option<Vec<Vec<DistributionSpec>>>,
}

/// Preset arrival-rate weights: two hot stations on the eight-station
/// ring, an even split otherwise.
fn preset_weights(k: usize) -> Vec<f64> {
    if k == 8 {
        let rest = 0.10 / 6.0;
        let mut weights = vec![rest; 8];
        weights[0] = 0.45;
        weights[3] = 0.45;
        weights
    } else {
        vec![1.0 / k as f64; k]
    }
}

impl PollingSection {
    /// Build the validated polling model, resolving preset defaults.
    pub fn model(&self) -> Result<PollingModel> {
        let lambdas = match &self.lambdas {
            Some(lambdas) => {
                if let Some(k) = self.k {
                    if k != lambdas.len() {
                        return Err(invalid(
                            "polling.k",
                            format!("k = {k} disagrees with {} explicit arrival rates", lambdas.len()),
                        ));
                    }
                }
                if self.load.is_some() {
                    return Err(invalid(
                        "polling.load",
                        "give either explicit `lambdas` or a `load` preset, not both",
                    ));
                }
                lambdas.clone()
            }
            None => {
                let k = self.k.unwrap_or(8);
                if k == 0 {
                    return Err(invalid("polling.k", "need at least one station"));
                }
                let load = self.load.unwrap_or(0.85);
                if !load.is_finite() || load <= 0.0 {
                    return Err(invalid("polling.load", format!("load must be positive, got {load}")));
                }
                preset_weights(k).iter().map(|w| w * load).collect()
            }
        };
        let k = lambdas.len();
        let services = match (&self.services, &self.service) {
            (Some(_), Some(_)) => {
                return Err(invalid("polling.services", "give `service` or `services`, not both"));
            }
            (Some(services), None) => {
                if services.len() != k {
                    return Err(invalid(
                        "polling.services",
                        format!("expected {k} entries, got {}", services.len()),
                    ));
                }
                services.clone()
            }
            (None, Some(shared)) => vec![*shared; k],
            (None, None) => vec![DistributionSpec::exponential(1.0)?; k],
        };
        let switchovers = match (&self.switchovers, &self.switchover) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "polling.switchovers",
                    "give `switchover` or `switchovers`, not both",
                ));
            }
            (Some(matrix), None) => matrix.clone(),
            (None, shared) => {
                let entry = match shared {
                    Some(entry) => *entry,
                    None => DistributionSpec::deterministic(0.0125)?,
                };
                vec![vec![entry; k]; k]
            }
        };
        let routing = match (&self.routing, self.scheme) {
            (Some(_), Some(_)) => {
                return Err(invalid("polling.routing", "give `scheme` or `routing`, not both"));
            }
            (Some(matrix), None) => matrix.clone(),
            (None, scheme) => build_routing(scheme.unwrap_or(RoutingScheme::Cyclic), &lambdas)?,
        };
        PollingModel::new(lambdas, services, switchovers, routing)
    }
}

/// Spacing of generated sweep ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    /// Evenly spaced values.
    Linear,
    /// Geometrically spaced values; endpoints must be positive.
    Log,
}

impl FromStr for SweepScale {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(SweepScale::Linear),
            "log" => Ok(SweepScale::Log),
            other => Err(Error::Parse(format!("unknown scale `{other}`; expected linear or log"))),
        }
    }
}

/// One swept parameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    /// Which queue-model parameter varies.
    pub parameter: String,
    /// Explicit axis values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Generated axis `start:stop:count`; replaces `values`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    /// Spacing of a generated axis; defaults to linear.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<SweepScale>,
}

impl SweepSection {
    /// Empty section flags fill in.
    pub fn empty() -> Self {
        SweepSection {
            parameter: String::new(),
            values: None,
            range: None,
            scale: None,
        }
    }

    /// Check the parameter name against the queue model it will vary.
    pub fn validate_parameter(&self, queue: &QueueSection) -> Result<()> {
        match self.parameter.as_str() {
            "" => Err(invalid("sweep.parameter", "sweep mode needs a parameter name")),
            "lambda" => Ok(()),
            "service_rate" => match queue.service {
                DistributionSpec::Exponential { .. } => Ok(()),
                other => Err(invalid(
                    "sweep.parameter",
                    format!("service_rate varies an exponential service model, got {other}"),
                )),
            },
            "vacation_rate" => match queue.vacation {
                DistributionSpec::Exponential { .. } => Ok(()),
                other => Err(invalid(
                    "sweep.parameter",
                    format!("vacation_rate varies an exponential vacation model, got {other}"),
                )),
            },
            other => Err(invalid(
                "sweep.parameter",
                format!("unknown parameter `{other}`; valid names: {}", SWEEP_PARAMETERS.join(", ")),
            )),
        }
    }

    /// Materialize the axis values in sweep order.
    pub fn resolve_values(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(_), Some(_)) => Err(invalid("sweep.values", "give `values` or `range`, not both")),
            (None, None) => Err(invalid(
                "sweep.values",
                "need `values` or a `range` of the form start:stop:count",
            )),
            (Some(values), None) => {
                if values.is_empty() {
                    return Err(invalid("sweep.values", "need at least one value"));
                }
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(invalid("sweep.values", format!("values must be finite, got {bad}")));
                }
                if self.scale.is_some() {
                    return Err(invalid("sweep.scale", "scale applies to `range`, not explicit `values`"));
                }
                Ok(values.clone())
            }
            (None, Some(range)) => self.resolve_range(range),
        }
    }

    fn resolve_range(&self, range: &str) -> Result<Vec<f64>> {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(
                "sweep.range",
                format!("expected start:stop:count, got `{range}`"),
            ));
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| invalid("sweep.range", format!("bad start `{}`", parts[0])))?;
        let stop: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| invalid("sweep.range", format!("bad stop `{}`", parts[1])))?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| invalid("sweep.range", format!("bad count `{}`", parts[2])))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err(invalid("sweep.range", "endpoints must be finite"));
        }
        if count == 0 {
            return Err(invalid("sweep.range", "count must be at least 1"));
        }
        let scale = self.scale.unwrap_or(SweepScale::Linear);
        if scale == SweepScale::Log && (start <= 0.0 || stop <= 0.0) {
            return Err(invalid("sweep.range", "log spacing needs positive endpoints"));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = |i: usize| i as f64 / (count - 1) as f64;
        Ok((0..count)
            .map(|i| match scale {
                SweepScale::Linear => start + step(i) * (stop - start),
                SweepScale::Log => (start.ln() + step(i) * (stop.ln() - start.ln())).exp(),
            })
            .collect())
    }
}

/// Apply one sweep value to the base queue model.
pub fn apply_sweep(parameter: &str, value: f64, base: &QueueSection) -> Result<QueueSection> {
    let mut next = *base;
    match parameter {
        "lambda" => next.lambda = value,
        "service_rate" => next.service = DistributionSpec::exponential(value)?,
        "vacation_rate" => next.vacation = DistributionSpec::exponential(value)?,
        other => {
            return Err(invalid("sweep.parameter", format!("unknown parameter `{other}`")));
        }
    }
    Ok(next)
}

/// Simulation controls; unset fields use the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimSection {
    /// Delivered peaks per replication (default 100000).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peaks: Option<usize>,
    /// Peaks discarded before measurement (default 1% of the target).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    /// Base random seed (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Independent replications to pool (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    /// Batch count for the batch-means intervals (default 32).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
}

impl SimSection {
    /// Build the validated simulation configuration.
    pub fn build(&self) -> Result<SimConfig> {
        let peaks = self.peaks.unwrap_or(100_000);
        let warmup = self.warmup.unwrap_or(peaks / 100);
        SimConfig::with(
            peaks,
            warmup,
            self.seed.unwrap_or(1),
            self.replications.unwrap_or(1),
            self.batches.unwrap_or(32),
        )
    }
}

// =====================================================================
// Top-level configuration
// =====================================================================

fn default_policies() -> Vec<Policy> {
    Policy::ALL.to_vec()
}

fn is_false(flag: &bool) -> bool {
    !flag
}

/// A complete experiment description. Files carry exactly this structure;
/// command-line flags override individual fields after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Schema revision; must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// What the run computes.
    #[serde(default)]
    pub mode: Mode,
    /// Policies evaluated, in output order.
    #[serde(default = "default_policies")]
    pub policies: Vec<Policy>,
    /// CSV destination; stdout when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Emit a JSON envelope on stdout instead of CSV.
    #[serde(default, skip_serializing_if = "is_false")]
    pub json: bool,
    /// Single-station model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue: Option<QueueSection>,
    /// Polling-ring model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polling: Option<PollingSection>,
    /// Swept parameter axis; valid only in sweep mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Simulation controls for simulate and verify modes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            mode: Mode::Analytic,
            policies: default_policies(),
            out: None,
            json: false,
            queue: Some(QueueSection::default()),
            polling: None,
            sweep: None,
            sim: None,
        }
    }
}

impl ExperimentConfig {
    /// Parse a configuration file.
    ///
    /// # Errors
    ///
    /// Maps I/O failures to a field-level error on `config` and syntax or
    /// schema mismatches to parse errors carrying the file position.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Serialize in the exact form [`ExperimentConfig::load`] accepts.
    pub fn dump(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("serialize config: {e}")))
    }

    /// The queue section, or a field-level error naming the mode that
    /// needed it.
    pub fn require_queue(&self) -> Result<&QueueSection> {
        self.queue
            .as_ref()
            .ok_or_else(|| invalid("queue", format!("{} mode needs a [queue] section", self.mode)))
    }

    /// The polling section, or a field-level error naming the mode that
    /// needed it.
    pub fn require_polling(&self) -> Result<&PollingSection> {
        self.polling
            .as_ref()
            .ok_or_else(|| invalid("polling", format!("{} mode needs a [polling] section", self.mode)))
    }

    /// Check every invariant the run relies on: schema version, policy
    /// list, section presence per mode, sweep axis shape, and that the
    /// sections the mode uses build valid models.
    ///
    /// # Errors
    ///
    /// Field-level `InvalidParameter` for each violated rule.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("this build reads schema version {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.policies.is_empty() {
            return Err(invalid("policies", "need at least one policy"));
        }
        if self.mode != Mode::Sweep && self.sweep.is_some() {
            return Err(invalid("sweep", "the [sweep] section is only valid in sweep mode"));
        }
        match self.mode {
            Mode::Analytic | Mode::NoVacation | Mode::Verify | Mode::Dominance => {
                self.require_queue()?.model()?;
            }
            Mode::Sweep => {
                let queue = self.require_queue()?;
                queue.model()?;
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| invalid("sweep", "sweep mode needs a [sweep] section"))?;
                sweep.validate_parameter(queue)?;
                sweep.resolve_values()?;
            }
            Mode::Polling => {
                self.require_polling()?.model()?;
            }
            Mode::Simulate => {
                match &self.polling {
                    Some(polling) => {
                        polling.model()?;
                    }
                    None => {
                        self.require_queue()?.model()?;
                    }
                }
            }
        }
        if matches!(self.mode, Mode::Simulate | Mode::Verify) {
            self.sim.unwrap_or_default().build()?;
        }
        Ok(())
    }
}

// =====================================================================
// Tests
// =====================================================================
