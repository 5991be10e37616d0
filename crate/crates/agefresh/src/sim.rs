//! Discrete-event simulation of the information-age process, the
//! independent oracle for every closed form in this crate.
//!
//! The simulator replays the exact buffer rules of the three policies for
//! the single-queue vacation system and the multi-station polling system,
//! records the completion and generation times of informative packets,
//! and reduces the resulting sawtooth to point estimates with 95%
//! batch-means confidence intervals.
//!
//! | Operation | Computes |
//! |---|---|
//! | [`simulate_iid`] | CI estimates for one vacation queue |
//! | [`simulate_polling`] | per-station CI estimates for a polling system |
//! | [`simulate_iid_trace`] | one replication's raw trace, for debugging |
//! | [`simulate_polling_trace`] | per-station raw traces, for debugging |
//! | [`trace_metrics`] | deterministic reduction of a trace to AoI + peaks |
//!
//! # Mathematical Definition
//!
//! The age at time t is Δ(t) = t − max{r_l : C_l ≤ t}, where r_l and C_l
//! are the generation and completion times of the l-th informative packet.
//! Between completions the age grows at unit rate and drops to C_l − r_l
//! at each C_l, so the time-average age over [C_a, T] is a sum of exact
//! trapezoid areas,
//!
//! ```text
//! ∫ Δ = Σ_l [ (C_l − r_{l−1})² − (C_{l−1} − r_{l−1})² ] / 2  +  tail,
//! ```
//!
//! and the l-th peak is the height just before the drop,
//! A_l = C_l − r_{l−1}; the first completion yields no peak.
//!
//! # Design Notes
//!
//! The event calendar is a bounded set (per-queue next arrival plus the
//! single pending server event), scanned for the minimum event time with
//! ties broken by fixed event-type priority: completion, then
//! vacation/switch-over end, then arrival, then lowest station index.
//! Every replication runs single-threaded on its own counter-seeded
//! ChaCha stream; replications run in parallel and are merged in
//! replication order, so results are bit-identical for a given
//! configuration regardless of thread scheduling. Confidence intervals
//! come from batch means: each replication's peak sequence is split into
//! equal batches, and the pooled batch values of all replications give
//! the half-widths as 1.96·s/√n. The peak-variance estimate uses the
//! within-batch sample variance as the batch value.

use crate::analytic::{IidVacationModel, Policy};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::polling::PollingModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fraction of `peaks_target` discarded as warmup by the default
/// constructor.
const DEFAULT_WARMUP_FRACTION: f64 = 0.01;

/// Default number of batch-means batches.
const DEFAULT_BATCH_COUNT: usize = 32;

/// Two-sided 95% normal quantile used for the half-widths.
const Z_95: f64 = 1.96;

// =====================================================================
// Configuration
// =====================================================================

/// Stopping, warmup, seeding, and batching parameters for one simulation.
///
/// | Field | Meaning |
/// |---|---|
/// | `peaks_target` | informative completions to keep per queue, ≥ 1000 |
/// | `warmup_peaks` | initial peaks discarded before statistics |
/// | `seed` | base RNG seed; replication r uses `seed + r` |
/// | `replications` | independent replications, pooled for CIs |
/// | `batch_count` | batch-means batches per replication, ≥ 10 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSimConfig")]
pub struct SimConfig {
    peaks_target: usize,
    warmup_peaks: usize,
    seed: u64,
    replications: usize,
    batch_count: usize,
}

#[derive(Deserialize)]
struct RawSimConfig {
    peaks_target: usize,
    warmup_peaks: usize,
    seed: u64,
    replications: usize,
    batch_count: usize,
}

impl TryFrom<RawSimConfig> for SimConfig {
    type Error = Error;

    fn try_from(raw: RawSimConfig) -> Result<Self> {
        SimConfig::with(raw.peaks_target, raw.warmup_peaks, raw.seed, raw.replications, raw.batch_count)
    }
}

impl SimConfig {
    /// Default shape: 1% warmup, one replication, 32 batches.
    pub fn new(peaks_target: usize, seed: u64) -> Result<Self> {
        let warmup = (peaks_target as f64 * DEFAULT_WARMUP_FRACTION).round() as usize;
        SimConfig::with(peaks_target, warmup, seed, 1, DEFAULT_BATCH_COUNT)
    }

    /// Fully specified configuration.
    ///
    /// # Errors
    ///
    /// Rejects `peaks_target < 1000`, `batch_count < 10`, batches that
    /// would hold fewer than two peaks, and zero replications.
    pub fn with(
        peaks_target: usize,
        warmup_peaks: usize,
        seed: u64,
        replications: usize,
        batch_count: usize,
    ) -> Result<Self> {
        if peaks_target < 1000 {
            return Err(Error::invalid("peaks_target", "need at least 1000 peaks"));
        }
        if batch_count < 10 {
            return Err(Error::invalid("batch_count", "need at least 10 batches"));
        }
        if peaks_target < 2 * batch_count {
            return Err(Error::invalid(
                "batch_count",
                "each batch must hold at least two peaks",
            ));
        }
        if replications == 0 {
            return Err(Error::invalid("replications", "need at least one replication"));
        }
        Ok(SimConfig { peaks_target, warmup_peaks, seed, replications, batch_count })
    }

    /// Informative completions kept per queue.
    pub fn peaks_target(&self) -> usize {
        self.peaks_target
    }

    /// Initial peaks discarded before statistics.
    pub fn warmup_peaks(&self) -> usize {
        self.warmup_peaks
    }

    /// Base RNG seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent replications pooled for the intervals.
    pub fn replications(&self) -> usize {
        self.replications
    }

    /// Batch-means batches per replication.
    pub fn batch_count(&self) -> usize {
        self.batch_count
    }
}

// =====================================================================
// Estimates
// =====================================================================

/// A point estimate with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width_95: f64,
}

impl Estimate {
    /// True when `value` lies inside the 95% interval.
    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width_95
    }

    fn from_batches(values: &[f64]) -> Estimate {
        let m = mean(values);
        let hw = Z_95 * (sample_variance(values) / values.len() as f64).sqrt();
        Estimate { mean: m, half_width_95: hw }
    }
}

/// Simulation estimates for the three freshness metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimates {
    /// Time-average age.
    pub aoi: Estimate,
    /// Mean peak age.
    pub paoi: Estimate,
    /// Variance of the peak age.
    pub var_peak: Estimate,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

// =====================================================================
// Traces
// =====================================================================

/// The informative-packet record of one replication: (completion,
/// generation) pairs in completion order, plus the total simulated time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeTrace {
    points: Vec<(f64, f64)>,
    total_time: f64,
}

impl AgeTrace {
    /// Validate and wrap a trace.
    ///
    /// # Errors
    ///
    /// Rejects non-finite entries, completions that do not strictly
    /// increase, generations that do not strictly increase, generations
    /// after their completion, and a total time before the last
    /// completion.
    pub fn new(points: Vec<(f64, f64)>, total_time: f64) -> Result<Self> {
        if !total_time.is_finite() || total_time < 0.0 {
            return Err(Error::invalid("total_time", "must be finite and nonnegative"));
        }
        for (l, &(c, r)) in points.iter().enumerate() {
            if !c.is_finite() || !r.is_finite() {
                return Err(Error::invalid("points", format!("entry {l} is not finite")));
            }
            if r > c {
                return Err(Error::invalid(
                    "points",
                    format!("entry {l} was generated after its completion"),
                ));
            }
            if l > 0 {
                let (pc, pr) = points[l - 1];
                if c <= pc {
                    return Err(Error::invalid(
                        "points",
                        format!("completion times must strictly increase at entry {l}"),
                    ));
                }
                if r <= pr {
                    return Err(Error::invalid(
                        "points",
                        format!("generation times must strictly increase at entry {l}"),
                    ));
                }
            }
        }
        if let Some(&(c, _)) = points.last() {
            if total_time < c {
                return Err(Error::invalid(
                    "total_time",
                    "must not precede the last completion",
                ));
            }
        }
        Ok(AgeTrace { points, total_time })
    }

    /// (completion, generation) pairs in completion order.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Total simulated time.
    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// One `completion<TAB>generation` line per informative packet.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for &(c, r) in &self.points {
            out.push_str(&format!("{c}\t{r}\n"));
        }
        out
    }
}

/// Deterministic reduction of a trace: time-average age and peak sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics {
    /// Time-average age over the post-warmup window.
    pub aoi: f64,
    /// Peaks A_l = C_l − r_{l−1} after warmup.
    pub peaks: Vec<f64>,
}

/// Reduce a trace to its age integral and peak sequence, discarding the
/// first `warmup_peaks` peaks (and the time they cover).
///
/// # Errors
///
/// Rejects an empty trace and a post-warmup window that spans no time.
pub fn trace_metrics(trace: &AgeTrace, warmup_peaks: usize) -> Result<TraceMetrics> {
    let points = trace.points();
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("trace", "no informative completions"));
    }
    let start = warmup_peaks.min(n - 1);
    let mut area = 0.0;
    let mut peaks = Vec::with_capacity(n - 1 - start);
    for l in (start + 1)..n {
        let (c, _) = points[l];
        let (pc, pr) = points[l - 1];
        let peak = c - pr;
        peaks.push(peak);
        area += (peak * peak - (pc - pr) * (pc - pr)) / 2.0;
    }
    let (last_c, last_r) = points[n - 1];
    let t = trace.total_time();
    area += ((t - last_r) * (t - last_r) - (last_c - last_r) * (last_c - last_r)) / 2.0;
    let elapsed = t - points[start].0;
    if elapsed <= 0.0 {
        return Err(Error::invalid("trace", "spans no time after warmup"));
    }
    Ok(TraceMetrics { aoi: area / elapsed, peaks })
}

// =====================================================================
// Single-queue event loop
// =====================================================================

/// Chronological server phases, recorded only on instrumented runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PhaseKind {
    Service,
    Vacation,
}

/// Instrumentation sink for policy-rule tests: every arrival epoch, every
/// server phase, and each delivery's service start.
#[derive(Debug, Default)]
struct RunLog {
    arrivals: Vec<f64>,
    phases: Vec<(PhaseKind, f64, f64)>,
    service_starts: Vec<f64>,
}

enum ServerState {
    Vacationing { until: f64 },
    Serving { until: f64, generation: f64, started: f64 },
}

/// Run one replication of the vacation queue until `deliveries` packets
/// complete, starting from an empty system on a fresh vacation.
fn run_iid(
    model: &IidVacationModel,
    policy: Policy,
    deliveries: usize,
    rng: &mut ChaCha12Rng,
    mut log: Option<&mut RunLog>,
) -> Result<AgeTrace> {
    let arrivals = DistributionSpec::exponential(model.lambda())?;
    let service = *model.service();
    let vacation = *model.vacation();

    let mut points: Vec<(f64, f64)> = Vec::with_capacity(deliveries);
    let mut now = 0.0;
    let mut next_arrival = arrivals.sample(rng);
    let mut buffer: Option<f64> = None;
    let mut state = ServerState::Vacationing { until: vacation.sample(rng) };
    let mut phase_start = 0.0;

    while points.len() < deliveries {
        let server_time = match state {
            ServerState::Vacationing { until } | ServerState::Serving { until, .. } => until,
        };
        // Server events take priority on ties: completion, then
        // vacation end, then arrival.
        if server_time <= next_arrival {
            now = server_time;
            match state {
                ServerState::Serving { generation, started, .. } => {
                    points.push((now, generation));
                    if let Some(log) = log.as_deref_mut() {
                        log.service_starts.push(started);
                        log.phases.push((PhaseKind::Service, phase_start, now));
                    }
                    // Every completion empties the system; the server
                    // leaves on vacation under all three policies.
                    phase_start = now;
                    state = ServerState::Vacationing { until: now + vacation.sample(rng) };
                }
                ServerState::Vacationing { .. } => {
                    if let Some(log) = log.as_deref_mut() {
                        log.phases.push((PhaseKind::Vacation, phase_start, now));
                    }
                    phase_start = now;
                    state = match buffer.take() {
                        Some(generation) => ServerState::Serving {
                            until: now + service.sample(rng),
                            generation,
                            started: now,
                        },
                        None => ServerState::Vacationing { until: now + vacation.sample(rng) },
                    };
                }
            }
        } else {
            now = next_arrival;
            next_arrival = now + arrivals.sample(rng);
            if let Some(log) = log.as_deref_mut() {
                log.arrivals.push(now);
            }
            match (&mut state, policy) {
                (ServerState::Vacationing { .. }, _) => buffer = Some(now),
                // Arrivals during service are rejected outright.
                (ServerState::Serving { .. }, Policy::Cbs) => {}
                // Arrivals during service wait in the buffer for the
                // visit after the next vacation.
                (ServerState::Serving { .. }, Policy::Brs) => buffer = Some(now),
                // Arrivals during service discard the packet in service
                // and restart service on the fresh packet.
                (ServerState::Serving { until, generation, started }, Policy::Cbsp) => {
                    *until = now + service.sample(rng);
                    *generation = now;
                    *started = now;
                    if let Some(log) = log.as_deref_mut() {
                        log.phases.push((PhaseKind::Service, phase_start, now));
                    }
                    phase_start = now;
                }
            }
        }
    }
    AgeTrace::new(points, now)
}

// =====================================================================
// Polling event loop
// =====================================================================

enum PollingServer {
    Switching { until: f64, to: usize },
    Serving { until: f64, queue: usize, generation: f64 },
}

/// Sample the routing row of station `from`.
fn route_next(routing: &[Vec<f64>], from: usize, rng: &mut ChaCha12Rng) -> usize {
    let row = &routing[from];
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.len() - 1
}

/// Run one replication of the polling system until every station has
/// `deliveries` completed packets. Stations that reach the target keep
/// operating but stop recording.
fn run_polling(
    model: &PollingModel,
    policy: Policy,
    deliveries: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<AgeTrace>> {
    let k = model.k();
    let arrival_dists: Vec<DistributionSpec> = model
        .lambdas()
        .iter()
        .map(|&lam| DistributionSpec::exponential(lam))
        .collect::<Result<_>>()?;

    let mut points: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(deliveries); k];
    let mut remaining = k;
    let mut now = 0.0;
    let mut next_arrival: Vec<f64> = arrival_dists.iter().map(|d| d.sample(rng)).collect();
    let mut buffer: Vec<Option<f64>> = vec![None; k];
    // The server materializes at station 0 at time zero.
    let mut server = PollingServer::Switching { until: 0.0, to: 0 };

    while remaining > 0 {
        let server_time = match server {
            PollingServer::Switching { until, .. } | PollingServer::Serving { until, .. } => until,
        };
        let mut arrival_queue = 0;
        for q in 1..k {
            if next_arrival[q] < next_arrival[arrival_queue] {
                arrival_queue = q;
            }
        }
        // Server events take priority on ties: completion, then
        // switch-over end, then arrival (lowest station index first).
        if server_time <= next_arrival[arrival_queue] {
            now = server_time;
            match server {
                PollingServer::Serving { queue, generation, .. } => {
                    if points[queue].len() < deliveries {
                        points[queue].push((now, generation));
                        if points[queue].len() == deliveries {
                            remaining -= 1;
                        }
                    }
                    let to = route_next(model.routing(), queue, rng);
                    server = PollingServer::Switching {
                        until: now + model.switchovers()[queue][to].sample(rng),
                        to,
                    };
                }
                PollingServer::Switching { to, .. } => match buffer[to].take() {
                    Some(generation) => {
                        server = PollingServer::Serving {
                            until: now + model.services()[to].sample(rng),
                            queue: to,
                            generation,
                        };
                    }
                    None => {
                        // An empty station triggers the next switch-over
                        // immediately.
                        let next = route_next(model.routing(), to, rng);
                        server = PollingServer::Switching {
                            until: now + model.switchovers()[to][next].sample(rng),
                            to: next,
                        };
                    }
                },
            }
        } else {
            let q = arrival_queue;
            now = next_arrival[q];
            next_arrival[q] = now + arrival_dists[q].sample(rng);
            match &mut server {
                PollingServer::Serving { until, queue, generation } if *queue == q => {
                    match policy {
                        Policy::Cbs => {}
                        Policy::Brs => buffer[q] = Some(now),
                        Policy::Cbsp => {
                            *until = now + model.services()[q].sample(rng);
                            *generation = now;
                        }
                    }
                }
                _ => buffer[q] = Some(now),
            }
        }
    }
    points
        .into_iter()
        .map(|pts| {
            let end = pts.last().map_or(now, |&(c, _)| c);
            AgeTrace::new(pts, end)
        })
        .collect()
}

// =====================================================================
// Batch-means reduction
// =====================================================================

/// Per-segment statistics of one replication after warmup: the peak, the
/// exact trapezoid area, and the time span of each inter-completion
/// segment.
struct RepSeries {
    peaks: Vec<f64>,
    areas: Vec<f64>,
    spans: Vec<f64>,
}

fn rep_series(trace: &AgeTrace, warmup: usize) -> Result<RepSeries> {
    let points = trace.points();
    let n = points.len();
    if n < warmup + 2 {
        return Err(Error::invalid("trace", "too few completions for the warmup"));
    }
    let m = n - warmup - 1;
    let mut peaks = Vec::with_capacity(m);
    let mut areas = Vec::with_capacity(m);
    let mut spans = Vec::with_capacity(m);
    for l in (warmup + 1)..n {
        let (c, _) = points[l];
        let (pc, pr) = points[l - 1];
        let peak = c - pr;
        peaks.push(peak);
        areas.push((peak * peak - (pc - pr) * (pc - pr)) / 2.0);
        spans.push(c - pc);
    }
    Ok(RepSeries { peaks, areas, spans })
}

/// Pool the batch values of every replication into the three estimates.
fn estimates_from_series(series: &[RepSeries], batch_count: usize) -> SimEstimates {
    let mut aoi_batches = Vec::with_capacity(series.len() * batch_count);
    let mut paoi_batches = Vec::with_capacity(series.len() * batch_count);
    let mut var_batches = Vec::with_capacity(series.len() * batch_count);
    for rep in series {
        let m = rep.peaks.len();
        for b in 0..batch_count {
            let lo = b * m / batch_count;
            let hi = (b + 1) * m / batch_count;
            let peaks = &rep.peaks[lo..hi];
            paoi_batches.push(mean(peaks));
            var_batches.push(sample_variance(peaks));
            let area: f64 = rep.areas[lo..hi].iter().sum();
            let span: f64 = rep.spans[lo..hi].iter().sum();
            aoi_batches.push(area / span);
        }
    }
    SimEstimates {
        aoi: Estimate::from_batches(&aoi_batches),
        paoi: Estimate::from_batches(&paoi_batches),
        var_peak: Estimate::from_batches(&var_batches),
    }
}

// =====================================================================
// Public simulation entry points
// =====================================================================

/// Estimate the three freshness metrics of a vacation queue by
/// discrete-event simulation.
///
/// Runs `config.replications()` independent event loops (replication r on
/// ChaCha stream `seed + r`), discards `warmup_peaks` initial peaks per
/// replication, and pools batch means for the confidence intervals.
/// Identical configurations give bit-identical results.
///
/// # Errors
///
/// Propagates trace-construction failures; model validity is enforced by
/// [`IidVacationModel`] itself.
pub fn simulate_iid(
    model: &IidVacationModel,
    policy: Policy,
    config: &SimConfig,
) -> Result<SimEstimates> {
    let deliveries = config.warmup_peaks() + config.peaks_target() + 1;
    let series: Vec<RepSeries> = (0..config.replications())
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed().wrapping_add(rep as u64));
            let trace = run_iid(model, policy, deliveries, &mut rng, None)?;
            rep_series(&trace, config.warmup_peaks())
        })
        .collect::<Result<_>>()?;
    Ok(estimates_from_series(&series, config.batch_count()))
}

/// Estimate per-station freshness metrics of a polling system by
/// discrete-event simulation.
///
/// Each replication runs until every station has collected
/// `warmup_peaks + peaks_target + 1` completions; stations that finish
/// early keep operating without recording. Results are pooled per
/// station exactly as in [`simulate_iid`].
///
/// # Errors
///
/// Propagates trace-construction failures; model validity is enforced by
/// [`PollingModel`] itself.
pub fn simulate_polling(
    model: &PollingModel,
    policy: Policy,
    config: &SimConfig,
) -> Result<Vec<SimEstimates>> {
    let deliveries = config.warmup_peaks() + config.peaks_target() + 1;
    let per_rep: Vec<Vec<RepSeries>> = (0..config.replications())
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed().wrapping_add(rep as u64));
            let traces = run_polling(model, policy, deliveries, &mut rng)?;
            traces
                .iter()
                .map(|trace| rep_series(trace, config.warmup_peaks()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let k = model.k();
    let mut stations: Vec<Vec<RepSeries>> = (0..k).map(|_| Vec::new()).collect();
    for reps in per_rep {
        for (q, series) in reps.into_iter().enumerate() {
            stations[q].push(series);
        }
    }
    Ok(stations
        .iter()
        .map(|station| estimates_from_series(station, config.batch_count()))
        .collect())
}

/// One replication's raw trace of a vacation queue, for debugging and
/// golden tests. `deliveries` must be at least two (a peak needs a
/// predecessor).
///
/// # Errors
///
/// Rejects `deliveries < 2`; otherwise as [`simulate_iid`].
pub fn simulate_iid_trace(
    model: &IidVacationModel,
    policy: Policy,
    deliveries: usize,
    seed: u64,
) -> Result<AgeTrace> {
    if deliveries < 2 {
        return Err(Error::invalid("deliveries", "need at least two completions"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    run_iid(model, policy, deliveries, &mut rng, None)
}

/// One replication's raw per-station traces of a polling system.
///
/// # Errors
///
/// Rejects `deliveries < 2`; otherwise as [`simulate_polling`].
pub fn simulate_polling_trace(
    model: &PollingModel,
    policy: Policy,
    deliveries: usize,
    seed: u64,
) -> Result<Vec<AgeTrace>> {
    if deliveries < 2 {
        return Err(Error::invalid("deliveries", "need at least two completions"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    run_polling(model, policy, deliveries, &mut rng)
}

// =====================================================================
// Tests
// =====================================================================


// =====================================================================
// Property tests
// =====================================================================
