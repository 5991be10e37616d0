//! Exact peak-age analysis for multi-station polling systems with
//! single-buffer queues and Markovian server routing.
//!
//! A single server visits `k` stations. Station `i` receives Poisson
//! traffic at rate λ_i and keeps only the newest waiting packet. After a
//! visit to station `j` the server moves to station `i` with probability
//! `p_ji`, traversing a switch-over span distributed as `U_{j→i}`. Buffer
//! gating during a visit follows the same three policies as the
//! single-queue module ([`Policy`]); the spans between visits to a station
//! play the role that vacations play there.
//!
//! | Operation | Computes |
//! |---|---|
//! | [`build_routing`] | routing matrix for a named scheme |
//! | [`stationary`] | stationary visit distribution π of the routing chain |
//! | [`tilde_coefficients`] | per-term coefficients of one balance equation |
//! | [`solve_boundary`] | boundary values F_i(b) and delivery probabilities α_i |
//! | [`gamma_rates`] | delivery rate γ_i of each station |
//! | [`mean_waiting`] | mean waiting time E[W_i] of delivered packets |
//! | [`solve_derivatives`] | partials ∂F_i/∂z_l at every binary point |
//! | [`paoi`] | exact per-station and average peak age of information |
//!
//! # Mathematical Definition
//!
//! Tag each station `l` with a mark variable z_l ∈ [0, 1] and let F_i(z)
//! be the stationary joint transform, observed when the server arrives at
//! station `i`, of the indicators "station l's buffer holds no packet
//! that will be delivered at l's next visit". The F_i satisfy a linear
//! balance system that closes over the binary points z ∈ {0, 1}^k:
//!
//! ```text
//! F_i(b) = Σ_j (π_j/π_i) p_ji · U*_{j→i}(σ(b))
//!          · [ (1 − H̃_j(b)) F_j(b with b_j = 0) + H̃_j(b) F_j(b with b_j = 1) ]
//! ```
//!
//! where σ(b) = Σ_l λ_l (1 − b_l) and H̃_j is the policy-dependent chance
//! that station j's visit delivers nothing fresh for the stations still
//! marked 0: H*_j(σ(b) − λ_j(1 − b_j)) when arrivals during service are
//! rejected, H*_j(σ(b)) when they replace the buffered packet, and the
//! preemption-aware span transform [`ServeSpan`](Component::ServeSpan) at
//! σ(b) − λ_j(1 − b_j) when they restart service. With F_i(1,…,1) = 1
//! pinned, the remaining k·(2^k − 1) values are determined. Station i's
//! per-visit delivery probability is α_i = 1 − F_i(1,…,0_i,…,1), its
//! waiting-time transform at s = λ_i is W_i*(λ_i) = (∂F_i/∂z_i)/α_i at
//! that same point, and the peak age follows from the shared waiting-time
//! kernel [`paoi_from_waiting`].
//!
//! # Design Notes
//!
//! Three solver paths produce the boundary and derivative tables.
//! Single-successor (permutation) routing is solved as a transfer-operator
//! chain around the ring: one 2^k system for the starting station, forward
//! substitution for the rest, and pure forward marches for every
//! derivative axis. Identical routing rows combined with
//! destination-independent switch-overs make F_i independent of i, so the
//! station index collapses and a single 2^k system remains. Everything
//! else assembles the dense k·(2^k − 1) system and factors it with partial
//! pivoting, capped at [`MAX_QUEUES`] stations. Every path ends the same
//! way: the solution is substituted back into the full balance equations
//! and rejected unless the worst residual is within
//! [`RESIDUAL_TOLERANCE`], so a structural shortcut can never silently
//! change the answer. If a shortcut fails its residual check the dense
//! path is tried before giving up.

use crate::analytic::{paoi_from_waiting, serve_jet, validate_rate, Policy};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[cfg(doc)]
use crate::analytic::Component;

/// Largest station count accepted by the solvers.
pub const MAX_QUEUES: usize = 8;

/// Worst-case residual tolerated when a solved table is substituted back
/// into the full balance equations.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Slack allowed on quantities that are probabilities by construction.
const RANGE_TOLERANCE: f64 = 1e-9;

/// Row sums of a routing matrix must be within this of one.
const STOCHASTIC_TOLERANCE: f64 = 1e-12;

// =====================================================================
// Routing schemes and the routing chain
// =====================================================================

/// Named construction rules for the server's routing matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RoutingScheme {
    /// Deterministic ring: after station i the server visits i+1 (mod k).
    Cyclic,
    /// Rows identical with p_ij = λ_j / Σ_l λ_l: busier stations are
    /// visited proportionally more often.
    LoadProportional,
    /// Rows identical with p_ij = 1/k: uniformly random next station.
    Symmetric,
}

impl RoutingScheme {
    /// Every scheme, in presentation order.
    pub const ALL: [RoutingScheme; 3] =
        [RoutingScheme::Cyclic, RoutingScheme::LoadProportional, RoutingScheme::Symmetric];

    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            RoutingScheme::Cyclic => "cyclic",
            RoutingScheme::LoadProportional => "lop",
            RoutingScheme::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for RoutingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoutingScheme {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "cyclic" => Ok(RoutingScheme::Cyclic),
            "lop" | "load-proportional" | "load_proportional" => {
                Ok(RoutingScheme::LoadProportional)
            }
            "symmetric" => Ok(RoutingScheme::Symmetric),
            other => Err(Error::Parse(format!(
                "unknown routing scheme '{other}' (expected cyclic, lop, or symmetric)"
            ))),
        }
    }
}

impl TryFrom<String> for RoutingScheme {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        text.parse()
    }
}

impl From<RoutingScheme> for String {
    fn from(scheme: RoutingScheme) -> String {
        scheme.name().to_owned()
    }
}

/// Build the routing matrix of a named scheme for the given arrival rates.
///
/// The arrival rates only matter for [`RoutingScheme::LoadProportional`];
/// the other schemes use just their count.
///
/// # Errors
///
/// Rejects an empty rate list and non-finite or non-positive rates.
pub fn build_routing(scheme: RoutingScheme, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let k = lambdas.len();
    if k == 0 {
        return Err(Error::invalid("lambdas", "need at least one station"));
    }
    for (i, &lam) in lambdas.iter().enumerate() {
        if !lam.is_finite() || lam <= 0.0 {
            return Err(Error::invalid(
                "lambdas",
                format!("entry {i} must be a positive finite rate, got {lam}"),
            ));
        }
    }
    let matrix = match scheme {
        RoutingScheme::Cyclic => (0..k)
            .map(|i| {
                let mut row = vec![0.0; k];
                row[(i + 1) % k] = 1.0;
                row
            })
            .collect(),
        RoutingScheme::LoadProportional => {
            let total: f64 = lambdas.iter().sum();
            let row: Vec<f64> = lambdas.iter().map(|&lam| lam / total).collect();
            vec![row; k]
        }
        RoutingScheme::Symmetric => vec![vec![1.0 / k as f64; k]; k],
    };
    Ok(matrix)
}

/// Stationary distribution π of a routing chain: πP = π, Σ_i π_i = 1.
///
/// # Errors
///
/// Rejects a non-square or non-row-stochastic matrix, and fails with a
/// singular-system diagnostic when the chain has no unique positive
/// stationary distribution (reducible or degenerate routing).
pub fn stationary(routing: &[Vec<f64>]) -> Result<Vec<f64>> {
    validate_routing(routing)?;
    let k = routing.len();
    // (Pᵀ − I)π = 0 with the last balance equation replaced by Σπ = 1.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = routing[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = lu_solve(a, rhs, "stationary distribution of the routing chain")?;
    let mut out = Vec::with_capacity(k);
    for &p in pi.iter() {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::SingularSystem {
                context: "stationary distribution of the routing chain",
                diagnostic: Some(format!(
                    "solved weights contain a non-positive entry ({p}); the chain is reducible or degenerate"
                )),
            });
        }
        out.push(p);
    }
    Ok(out)
}

fn validate_routing(routing: &[Vec<f64>]) -> Result<()> {
    let k = routing.len();
    if k == 0 {
        return Err(Error::invalid("routing", "need at least one station"));
    }
    for (i, row) in routing.iter().enumerate() {
        if row.len() != k {
            return Err(Error::invalid(
                "routing",
                format!("row {i} has {} entries, expected {k}", row.len()),
            ));
        }
        let mut sum = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(
                    "routing",
                    format!("entry ({i}, {j}) must be a finite probability, got {p}"),
                ));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::invalid(
                "routing",
                format!("row {i} sums to {sum}, expected 1 within {STOCHASTIC_TOLERANCE:e}"),
            ));
        }
    }
    Ok(())
}

/// True when every station reaches every other through positive-probability
/// routing steps.
fn strongly_connected(routing: &[Vec<f64>]) -> bool {
    let k = routing.len();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..k {
                let p = if forward { routing[v][w] } else { routing[w][v] };
                if p > 0.0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}

// =====================================================================
// Model
// =====================================================================

/// A `k`-station polling system: Poisson arrivals, single buffers, one
/// server moving between stations by a Markov routing rule.
///
/// | Field | Meaning |
/// |---|---|
/// | `lambdas[i]` | Poisson arrival rate of station i |
/// | `services[i]` | service-time distribution of station i |
/// | `switchovers[j][i]` | travel span when the server moves from j to i |
/// | `routing[j][i]` | probability the server moves from j to i |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPollingModel")]
pub struct PollingModel {
    lambdas: Vec<f64>,
    services: Vec<DistributionSpec>,
    switchovers: Vec<Vec<DistributionSpec>>,
    routing: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPollingModel {
    lambdas: Vec<f64>,
    services: Vec<DistributionSpec>,
    switchovers: Vec<Vec<DistributionSpec>>,
    routing: Vec<Vec<f64>>,
}

impl TryFrom<RawPollingModel> for PollingModel {
    type Error = Error;

    fn try_from(raw: RawPollingModel) -> Result<Self> {
        PollingModel::new(raw.lambdas, raw.services, raw.switchovers, raw.routing)
    }
}

impl PollingModel {
    /// Build and validate a polling model.
    ///
    /// # Errors
    ///
    /// Rejects an empty system, non-positive arrival rates, dimension
    /// mismatches, zero-length service or switch-over spans, rows that do
    /// not sum to one within `1e-12`, and routing under which some station
    /// cannot reach some other (the visit chain must be irreducible).
    pub fn new(
        lambdas: Vec<f64>,
        services: Vec<DistributionSpec>,
        switchovers: Vec<Vec<DistributionSpec>>,
        routing: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = lambdas.len();
        if k == 0 {
            return Err(Error::invalid("lambdas", "need at least one station"));
        }
        for (i, &lam) in lambdas.iter().enumerate() {
            if !lam.is_finite() || lam <= 0.0 {
                return Err(Error::invalid(
                    "lambdas",
                    format!("entry {i} must be a positive finite rate, got {lam}"),
                ));
            }
        }
        if services.len() != k {
            return Err(Error::invalid(
                "services",
                format!("got {} entries, expected {k}", services.len()),
            ));
        }
        for (i, service) in services.iter().enumerate() {
            if service.is_zero() {
                return Err(Error::invalid(
                    "services",
                    format!("entry {i} must have positive mean"),
                ));
            }
        }
        if switchovers.len() != k {
            return Err(Error::invalid(
                "switchovers",
                format!("got {} rows, expected {k}", switchovers.len()),
            ));
        }
        for (j, row) in switchovers.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(
                    "switchovers",
                    format!("row {j} has {} entries, expected {k}", row.len()),
                ));
            }
            for (i, span) in row.iter().enumerate() {
                if span.is_zero() {
                    return Err(Error::invalid(
                        "switchovers",
                        format!("entry ({j}, {i}) must have positive mean"),
                    ));
                }
            }
        }
        if routing.len() != k {
            return Err(Error::invalid(
                "routing",
                format!("got {} rows, expected {k}", routing.len()),
            ));
        }
        validate_routing(&routing)?;
        if !strongly_connected(&routing) {
            return Err(Error::invalid(
                "routing",
                "the visit chain must be irreducible: every station must reach every other",
            ));
        }
        Ok(PollingModel { lambdas, services, switchovers, routing })
    }

    /// Number of stations.
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    /// Poisson arrival rates, one per station.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Service-time distributions, one per station.
    pub fn services(&self) -> &[DistributionSpec] {
        &self.services
    }

    /// Switch-over spans indexed `[from][to]`.
    pub fn switchovers(&self) -> &[Vec<DistributionSpec>] {
        &self.switchovers
    }

    /// Routing probabilities indexed `[from][to]`.
    pub fn routing(&self) -> &[Vec<f64>] {
        &self.routing
    }
}

// =====================================================================
// Result tables
// =====================================================================

/// Solved boundary values F_i(b) over binary marks plus the per-station
/// delivery probabilities α_i.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    k: usize,
    /// `values[i][mask]`; bit l of `mask` set means z_l = 1.
    values: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

impl BoundaryTable {
    /// Number of stations.
    pub fn k(&self) -> usize {
        self.k
    }

    /// F_i at the binary point encoded by `mask` (bit l set means z_l = 1).
    ///
    /// # Panics
    ///
    /// Panics when `queue ≥ k` or `mask ≥ 2^k`.
    pub fn value(&self, queue: usize, mask: usize) -> f64 {
        self.values[queue][mask]
    }

    /// Per-visit delivery probabilities α_i = 1 − F_i(1,…,0_i,…,1).
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// First partial derivatives ∂F_i/∂z_l at every binary point.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTable {
    k: usize,
    /// `values[axis][queue][mask]`.
    values: Vec<Vec<Vec<f64>>>,
}

impl DerivativeTable {
    /// Number of stations.
    pub fn k(&self) -> usize {
        self.k
    }

    /// ∂F_`queue`/∂z_`axis` at the binary point encoded by `mask`.
    ///
    /// # Panics
    ///
    /// Panics when `queue ≥ k`, `axis ≥ k`, or `mask ≥ 2^k`.
    pub fn value(&self, queue: usize, axis: usize, mask: usize) -> f64 {
        self.values[axis][queue][mask]
    }
}

/// Transform coefficients of one term of a balance equation, with their
/// partial derivatives along every mark axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeCoefficients {
    /// U*_{j→i}(σ(b)): the switch-over factor of the `j` term in station
    /// `i`'s equation.
    pub u_coeff: f64,
    /// H̃_j(b): the policy-dependent service factor of the same term.
    pub h_coeff: f64,
    /// ∂U*_{j→i}(σ(z))/∂z_l at b, one entry per axis l.
    pub u_partials: Vec<f64>,
    /// ∂H̃_j(z)/∂z_l at b, one entry per axis l.
    pub h_partials: Vec<f64>,
}

/// Exact peak-age results for a polling system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PollingPaoi {
    /// E[A_i] per station.
    pub per_queue: Vec<f64>,
    /// Unweighted mean of the per-station values.
    pub average: f64,
}

// =====================================================================
// Coefficient evaluation
// =====================================================================

/// Shared precomputation for one (model, policy) pair: the stationary
/// visit weights and σ(b) = Σ_{l: bit l clear} λ_l for every mask.
struct Coefficients<'a> {
    model: &'a PollingModel,
    policy: Policy,
    pi: Vec<f64>,
    full: usize,
    sigma: Vec<f64>,
}

impl<'a> Coefficients<'a> {
    fn new(model: &'a PollingModel, policy: Policy) -> Result<Self> {
        let pi = stationary(model.routing())?;
        let k = model.k();
        let full = (1usize << k) - 1;
        let sigma: Vec<f64> = (0..=full)
            .map(|mask| {
                (0..k).filter(|l| mask & (1 << l) == 0).map(|l| model.lambdas[l]).sum()
            })
            .collect();
        Ok(Coefficients { model, policy, pi, full, sigma })
    }

    fn k(&self) -> usize {
        self.model.lambdas.len()
    }

    /// Signed derivative of order `order` of U*_{j→i} at σ(mask).
    fn switch(&self, j: usize, i: usize, mask: usize, order: usize) -> f64 {
        self.model.switchovers[j][i].lst_deriv(order, self.sigma[mask])
    }

    /// Signed derivative of order `order` of the policy service factor
    /// H̃_j at its argument for `mask`. Buffer-gated policies thin out the
    /// station's own rate, so their argument is σ(mask with bit j set).
    fn serve_tilde(&self, j: usize, mask: usize, order: usize) -> f64 {
        match self.policy {
            Policy::Cbs => self.model.services[j].lst_deriv(order, self.sigma[mask | (1 << j)]),
            Policy::Brs => self.model.services[j].lst_deriv(order, self.sigma[mask]),
            Policy::Cbsp => {
                serve_jet(self.model.lambdas[j], &self.model.services[j], self.sigma[mask | (1 << j)])
                    .deriv(order)
            }
        }
    }

    /// ∂H̃_j/∂z_l at `mask`, including the −λ_l chain factor.
    fn serve_tilde_grad(&self, j: usize, l: usize, mask: usize) -> f64 {
        if l == j && matches!(self.policy, Policy::Cbs | Policy::Cbsp) {
            // The thinned argument never contains the station's own mark.
            return 0.0;
        }
        -self.model.lambdas[l] * self.serve_tilde(j, mask, 1)
    }

    /// (π_j/π_i) p_ji: the visit-frequency weight of the `j` term in
    /// station `i`'s equation.
    fn ratio(&self, j: usize, i: usize) -> f64 {
        self.pi[j] / self.pi[i] * self.model.routing[j][i]
    }
}

/// Right-hand side of station `i`'s balance equation at `mask`, evaluated
/// on a candidate boundary table.
fn boundary_rhs(co: &Coefficients<'_>, f: &[Vec<f64>], i: usize, mask: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..co.k() {
        if co.model.routing[j][i] <= 0.0 {
            continue;
        }
        let c = co.ratio(j, i) * co.switch(j, i, mask, 0);
        let h = co.serve_tilde(j, mask, 0);
        let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
        acc += c * ((1.0 - h) * f[j][m0] + h * f[j][m1]);
    }
    acc
}

/// The part of the (i, l, mask) derivative equation that involves only the
/// solved boundary values: coefficient derivatives times F levels.
fn derivative_known(
    co: &Coefficients<'_>,
    f: &[Vec<f64>],
    j: usize,
    i: usize,
    l: usize,
    mask: usize,
) -> f64 {
    let w = co.ratio(j, i);
    let u = co.switch(j, i, mask, 0);
    let du = -co.model.lambdas[l] * co.switch(j, i, mask, 1);
    let h = co.serve_tilde(j, mask, 0);
    let dh = co.serve_tilde_grad(j, l, mask);
    let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
    w * (du * ((1.0 - h) * f[j][m0] + h * f[j][m1]) + u * dh * (f[j][m1] - f[j][m0]))
}

/// Right-hand side of the (i, l, mask) derivative equation, evaluated on a
/// candidate axis-`l` derivative slice `d_l[station][mask]`. Substituting
/// b_j ∈ {0, 1} kills station j's own mark, so the j = l term carries no
/// derivative coupling.
fn derivative_rhs(
    co: &Coefficients<'_>,
    f: &[Vec<f64>],
    d_l: &[Vec<f64>],
    l: usize,
    i: usize,
    mask: usize,
) -> f64 {
    let mut acc = 0.0;
    for j in 0..co.k() {
        if co.model.routing[j][i] <= 0.0 {
            continue;
        }
        acc += derivative_known(co, f, j, i, l, mask);
        if j != l {
            let c = co.ratio(j, i) * co.switch(j, i, mask, 0);
            let h = co.serve_tilde(j, mask, 0);
            let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
            acc += c * ((1.0 - h) * d_l[j][m0] + h * d_l[j][m1]);
        }
    }
    acc
}

/// Sum of the per-balance-equation coefficients of one station's equation,
/// exposed so callers can inspect the transforms the solvers assemble.
///
/// The pair (i, j) addresses the `j` term of station `i`'s equation: the
/// switch-over factor belongs to the move from `j` into `i` and the service
/// factor to the visit at `j`.
///
/// # Errors
///
/// Rejects out-of-range station indices or masks and models whose routing
/// chain has no stationary distribution.
pub fn tilde_coefficients(
    model: &PollingModel,
    policy: Policy,
    mask: usize,
    i: usize,
    j: usize,
) -> Result<TildeCoefficients> {
    let k = model.k();
    if i >= k || j >= k {
        return Err(Error::invalid(
            "station",
            format!("indices ({i}, {j}) out of range for k = {k}"),
        ));
    }
    if mask >= (1usize << k) {
        return Err(Error::invalid(
            "mask",
            format!("binary point {mask:#b} out of range for k = {k}"),
        ));
    }
    let co = Coefficients::new(model, policy)?;
    let u_partials: Vec<f64> =
        (0..k).map(|l| -model.lambdas[l] * co.switch(j, i, mask, 1)).collect();
    let h_partials: Vec<f64> = (0..k).map(|l| co.serve_tilde_grad(j, l, mask)).collect();
    Ok(TildeCoefficients {
        u_coeff: co.switch(j, i, mask, 0),
        h_coeff: co.serve_tilde(j, mask, 0),
        u_partials,
        h_partials,
    })
}

// =====================================================================
// Linear algebra plumbing
// =====================================================================

fn lu_solve(a: DMatrix<f64>, b: DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    let lu = a.lu();
    match lu.solve(&b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => {
            let diag = lu.u().diagonal();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for v in diag.iter() {
                lo = lo.min(v.abs());
                hi = hi.max(v.abs());
            }
            let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            Err(Error::SingularSystem {
                context,
                diagnostic: Some(format!("pivot-ratio condition estimate {cond:.3e}")),
            })
        }
    }
}

fn check_cap(k: usize) -> Result<()> {
    if k > MAX_QUEUES {
        return Err(Error::Unsupported(format!(
            "{k} stations exceed the supported maximum of {MAX_QUEUES}"
        )));
    }
    Ok(())
}

// =====================================================================
// Boundary solve
// =====================================================================

enum SolverPath {
    /// Permutation routing; carries `next[i]`, the unique successor.
    Ring(Vec<usize>),
    /// Identical routing rows and destination-independent switch-overs.
    Collapsed,
    Dense,
}

fn detect_path(model: &PollingModel) -> SolverPath {
    if let Some(next) = ring_order(model.routing()) {
        return SolverPath::Ring(next);
    }
    let routing = model.routing();
    let k = model.k();
    let rows_identical = routing
        .iter()
        .all(|row| (0..k).all(|j| (row[j] - routing[0][j]).abs() <= 1e-13));
    let destination_uniform = model
        .switchovers()
        .iter()
        .all(|row| row.iter().all(|span| *span == row[0]));
    if rows_identical && destination_uniform {
        return SolverPath::Collapsed;
    }
    SolverPath::Dense
}

/// Successor station per row when the routing is a single-cycle
/// permutation, `None` otherwise.
fn ring_order(routing: &[Vec<f64>]) -> Option<Vec<usize>> {
    let k = routing.len();
    let mut next = vec![0usize; k];
    for (i, row) in routing.iter().enumerate() {
        let nonzero: Vec<usize> = (0..k).filter(|&j| row[j] > STOCHASTIC_TOLERANCE).collect();
        if nonzero.len() != 1 {
            return None;
        }
        next[i] = nonzero[0];
    }
    let mut seen = vec![false; k];
    let mut at = 0usize;
    for _ in 0..k {
        if seen[at] {
            return None;
        }
        seen[at] = true;
        at = next[at];
    }
    (at == 0 && seen.into_iter().all(|s| s)).then_some(next)
}

/// Solve the boundary system of a polling model.
///
/// Pins F_i(1,…,1) = 1 and determines the remaining k·(2^k − 1) values,
/// then the delivery probabilities α_i = 1 − F_i(1,…,0_i,…,1).
///
/// # Errors
///
/// Rejects more than [`MAX_QUEUES`] stations, fails with a singular-system
/// diagnostic when the balance system cannot be factored, and fails when
/// any solved value leaves [0, 1] beyond `1e-9`, any α_i is not in (0, 1],
/// or the back-substituted residual exceeds [`RESIDUAL_TOLERANCE`].
pub fn solve_boundary(model: &PollingModel, policy: Policy) -> Result<BoundaryTable> {
    let co = Coefficients::new(model, policy)?;
    solve_boundary_inner(&co)
}

fn solve_boundary_inner(co: &Coefficients<'_>) -> Result<BoundaryTable> {
    check_cap(co.k())?;
    let fast = match detect_path(co.model) {
        SolverPath::Ring(next) => Some(solve_boundary_ring(co, &next)),
        SolverPath::Collapsed => Some(solve_boundary_collapsed(co)),
        SolverPath::Dense => None,
    };
    if let Some(Ok(f)) = fast {
        if let Ok(table) = finalize_boundary(co, f) {
            return Ok(table);
        }
    }
    let f = solve_boundary_dense(co)?;
    finalize_boundary(co, f)
}

/// Permutation routing: station i's equation couples only to prev(i), so
/// composing the per-station transfer operators around the ring closes a
/// 2^k system for the starting station; the rest follow by substitution.
fn solve_boundary_ring(co: &Coefficients<'_>, next: &[usize]) -> Result<Vec<Vec<f64>>> {
    let k = co.k();
    let n = co.full + 1;
    let mut order = Vec::with_capacity(k);
    let mut at = 0usize;
    for _ in 0..k {
        order.push(at);
        at = next[at];
    }
    // Compose F_0 = M_prev(0) ∘ … ∘ M_0 F_0 by applying the stages to the
    // identity in visit order; each stage row mixes two rows of its input.
    let mut x = DMatrix::<f64>::identity(n, n);
    for &j in &order {
        let i = next[j];
        let w = co.ratio(j, i);
        let mut y = DMatrix::<f64>::zeros(n, n);
        for mask in 0..n {
            let c = w * co.switch(j, i, mask, 0);
            let h = co.serve_tilde(j, mask, 0);
            let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
            for col in 0..n {
                y[(mask, col)] = c * ((1.0 - h) * x[(m0, col)] + h * x[(m1, col)]);
            }
        }
        x = y;
    }
    let mut a = DMatrix::<f64>::identity(n, n) - x;
    let mut rhs = DVector::<f64>::zeros(n);
    for col in 0..n {
        a[(co.full, col)] = 0.0;
    }
    a[(co.full, co.full)] = 1.0;
    rhs[co.full] = 1.0;
    let f0 = lu_solve(a, rhs, "ring boundary system")?;

    let mut f = vec![vec![0.0; n]; k];
    f[0] = f0.iter().copied().collect();
    for &j in &order[..k - 1] {
        let i = next[j];
        let w = co.ratio(j, i);
        let mut out = vec![0.0; n];
        for (mask, slot) in out.iter_mut().enumerate() {
            let c = w * co.switch(j, i, mask, 0);
            let h = co.serve_tilde(j, mask, 0);
            let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
            *slot = c * ((1.0 - h) * f[j][m0] + h * f[j][m1]);
        }
        f[i] = out;
    }
    for row in f.iter_mut() {
        row[co.full] = 1.0;
    }
    Ok(f)
}

/// Identical routing rows with destination-independent switch-overs make
/// every station's equation identical, so one 2^k − 1 system serves all.
fn solve_boundary_collapsed(co: &Coefficients<'_>) -> Result<Vec<Vec<f64>>> {
    let k = co.k();
    let full = co.full;
    let mut a = DMatrix::<f64>::zeros(full, full);
    let mut rhs = DVector::<f64>::zeros(full);
    for mask in 0..full {
        a[(mask, mask)] += 1.0;
        for j in 0..k {
            let c = co.ratio(j, 0) * co.switch(j, 0, mask, 0);
            let h = co.serve_tilde(j, mask, 0);
            let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
            a[(mask, m0)] -= c * (1.0 - h);
            if m1 == full {
                rhs[mask] += c * h;
            } else {
                a[(mask, m1)] -= c * h;
            }
        }
    }
    let x = lu_solve(a, rhs, "collapsed boundary system")?;
    let mut row = vec![0.0; full + 1];
    for mask in 0..full {
        row[mask] = x[mask];
    }
    row[full] = 1.0;
    Ok(vec![row; k])
}

fn solve_boundary_dense(co: &Coefficients<'_>) -> Result<Vec<Vec<f64>>> {
    let k = co.k();
    let full = co.full;
    let n = k * full;
    let idx = |i: usize, mask: usize| i * full + mask;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..k {
        for mask in 0..full {
            let r = idx(i, mask);
            a[(r, r)] += 1.0;
            for j in 0..k {
                if co.model.routing[j][i] <= 0.0 {
                    continue;
                }
                let c = co.ratio(j, i) * co.switch(j, i, mask, 0);
                let h = co.serve_tilde(j, mask, 0);
                let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
                a[(r, idx(j, m0))] -= c * (1.0 - h);
                if m1 == full {
                    rhs[r] += c * h;
                } else {
                    a[(r, idx(j, m1))] -= c * h;
                }
            }
        }
    }
    let x = lu_solve(a, rhs, "dense boundary system")?;
    let mut f = vec![vec![0.0; full + 1]; k];
    for (i, row) in f.iter_mut().enumerate() {
        for mask in 0..full {
            row[mask] = x[idx(i, mask)];
        }
        row[full] = 1.0;
    }
    Ok(f)
}

/// Range-check, residual-check, and package a candidate boundary table.
fn finalize_boundary(co: &Coefficients<'_>, f: Vec<Vec<f64>>) -> Result<BoundaryTable> {
    let k = co.k();
    for (i, row) in f.iter().enumerate() {
        for (mask, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < -RANGE_TOLERANCE || v > 1.0 + RANGE_TOLERANCE {
                return Err(Error::numeric(
                    "polling boundary solve",
                    format!("F_{i}({mask:#b}) = {v} is outside [0, 1]"),
                ));
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..k {
        for mask in 0..co.full {
            worst = worst.max((f[i][mask] - boundary_rhs(co, &f, i, mask)).abs());
        }
    }
    if !(worst <= RESIDUAL_TOLERANCE) {
        return Err(Error::numeric(
            "polling boundary solve",
            format!("worst balance-equation residual {worst:.3e} exceeds {RESIDUAL_TOLERANCE:e}"),
        ));
    }
    let alphas: Vec<f64> = (0..k).map(|i| 1.0 - f[i][co.full & !(1 << i)]).collect();
    for (i, &alpha) in alphas.iter().enumerate() {
        if !(alpha > 0.0 && alpha <= 1.0 + RANGE_TOLERANCE) {
            return Err(Error::numeric(
                "polling boundary solve",
                format!("delivery probability α_{i} = {alpha} is outside (0, 1]"),
            ));
        }
    }
    Ok(BoundaryTable { k, values: f, alphas })
}

// =====================================================================
// Throughput and waiting
// =====================================================================

/// Mean span the buffer-gating policy charges to one visit of station `j`:
/// the full service for non-preemptive policies, the truncated remnant
/// (1 − H*_j(λ_j)) / (λ_j H*_j(λ_j)) when arrivals restart service.
fn effective_service_mean(model: &PollingModel, policy: Policy, j: usize) -> f64 {
    match policy {
        Policy::Cbs | Policy::Brs => model.services[j].mean(),
        Policy::Cbsp => {
            let lam = model.lambdas[j];
            model.services[j].one_minus_lst(lam) / (lam * model.services[j].lst_deriv(0, lam))
        }
    }
}

/// Delivery rates γ_i: informative deliveries of station i per unit time.
///
/// γ_i = (λ_i/π_i) Σ_j π_j (α_j m_j + Σ_l p_jl E[U_{j→l}]) minus, for the
/// policies that stay put only while a packet is present, the station's own
/// per-visit service charge λ_i α_i m_i; m_j is the policy's effective
/// service mean.
///
/// # Errors
///
/// Rejects dimension mismatches, non-positive visit weights, and rates
/// that come out non-positive or non-finite.
pub fn gamma_rates(
    model: &PollingModel,
    policy: Policy,
    table: &BoundaryTable,
    pi: &[f64],
) -> Result<Vec<f64>> {
    let k = model.k();
    if table.k != k {
        return Err(Error::invalid(
            "table",
            format!("boundary table has {} stations, model has {k}", table.k),
        ));
    }
    if pi.len() != k {
        return Err(Error::invalid(
            "pi",
            format!("got {} visit weights, expected {k}", pi.len()),
        ));
    }
    for (i, &p) in pi.iter().enumerate() {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::invalid(
                "pi",
                format!("entry {i} must be a positive weight, got {p}"),
            ));
        }
    }
    let means: Vec<f64> = (0..k).map(|j| effective_service_mean(model, policy, j)).collect();
    let mut cycle = 0.0;
    for j in 0..k {
        let switch_mean: f64 =
            (0..k).map(|l| model.routing[j][l] * model.switchovers[j][l].mean()).sum();
        cycle += pi[j] * (table.alphas[j] * means[j] + switch_mean);
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let own_visit = match policy {
            Policy::Brs => 0.0,
            Policy::Cbs | Policy::Cbsp => model.lambdas[i] * table.alphas[i] * means[i],
        };
        let gamma = model.lambdas[i] / pi[i] * cycle - own_visit;
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::numeric(
                "polling delivery rates",
                format!("γ_{i} = {gamma} is not a positive rate"),
            ));
        }
        out.push(gamma);
    }
    Ok(out)
}

/// Mean waiting times E[W_i] = γ_i/(λ_i α_i) − 1/λ_i of delivered packets.
///
/// # Errors
///
/// Rejects dimension mismatches, invalid rates, non-positive α_i, and
/// waits that come out negative beyond rounding noise.
pub fn mean_waiting(table: &BoundaryTable, gammas: &[f64], lambdas: &[f64]) -> Result<Vec<f64>> {
    let k = table.k;
    if gammas.len() != k || lambdas.len() != k {
        return Err(Error::invalid(
            "gammas",
            format!("got {} rates and {} lambdas, expected {k} each", gammas.len(), lambdas.len()),
        ));
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        validate_rate("lambda", lambdas[i])?;
        let alpha = table.alphas[i];
        if alpha <= 0.0 {
            return Err(Error::invalid(
                "table",
                format!("delivery probability α_{i} = {alpha} must be positive"),
            ));
        }
        let wait = gammas[i] / (lambdas[i] * alpha) - 1.0 / lambdas[i];
        if wait < 0.0 {
            if wait < -RANGE_TOLERANCE * (1.0f64).max(1.0 / lambdas[i]) {
                return Err(Error::numeric(
                    "polling mean waiting",
                    format!("E[W_{i}] = {wait} is negative"),
                ));
            }
            out.push(0.0);
        } else {
            out.push(wait);
        }
    }
    Ok(out)
}

// =====================================================================
// Derivative solve
// =====================================================================

/// Solve for ∂F_i/∂z_l at every binary point, for every axis l.
///
/// Differentiating the balance equations along one axis leaves the solved
/// boundary values as constants and couples only same-axis derivatives, so
/// the k axes separate into independent systems sharing the boundary
/// coefficients.
///
/// # Errors
///
/// Rejects more than [`MAX_QUEUES`] stations and mismatched tables, fails
/// with a singular-system diagnostic when a derivative system cannot be
/// factored, and fails when the back-substituted residual exceeds
/// [`RESIDUAL_TOLERANCE`].
pub fn solve_derivatives(
    model: &PollingModel,
    policy: Policy,
    table: &BoundaryTable,
) -> Result<DerivativeTable> {
    if table.k != model.k() {
        return Err(Error::invalid(
            "table",
            format!("boundary table has {} stations, model has {}", table.k, model.k()),
        ));
    }
    let co = Coefficients::new(model, policy)?;
    solve_derivatives_inner(&co, table)
}

fn solve_derivatives_inner(
    co: &Coefficients<'_>,
    table: &BoundaryTable,
) -> Result<DerivativeTable> {
    check_cap(co.k())?;
    let f = &table.values;
    let fast = match detect_path(co.model) {
        SolverPath::Ring(next) => Some(Ok(derivatives_ring(co, f, &next))),
        SolverPath::Collapsed => Some(derivatives_collapsed(co, f)),
        SolverPath::Dense => None,
    };
    if let Some(Ok(d)) = fast {
        if let Ok(out) = finalize_derivatives(co, f, d) {
            return Ok(out);
        }
    }
    let d = derivatives_dense(co, f)?;
    finalize_derivatives(co, f, d)
}

/// Permutation routing: the axis-l system starts at station next(l), whose
/// only coupling (to station l) carries no derivative term, and marches
/// forward around the ring with no linear solve at all.
fn derivatives_ring(co: &Coefficients<'_>, f: &[Vec<f64>], next: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let k = co.k();
    let n = co.full + 1;
    let mut d = vec![vec![vec![0.0; n]; k]; k];
    for l in 0..k {
        let mut src = l;
        for _ in 0..k {
            let dst = next[src];
            let w = co.ratio(src, dst);
            let mut row = vec![0.0; n];
            for (mask, slot) in row.iter_mut().enumerate() {
                let mut v = derivative_known(co, f, src, dst, l, mask);
                if src != l {
                    let c = w * co.switch(src, dst, mask, 0);
                    let h = co.serve_tilde(src, mask, 0);
                    let (m0, m1) = (mask & !(1 << src), mask | (1 << src));
                    v += c * ((1.0 - h) * d[l][src][m0] + h * d[l][src][m1]);
                }
                *slot = v;
            }
            d[l][dst] = row;
            src = dst;
        }
    }
    d
}

/// Collapsed stations: one 2^k system per axis.
fn derivatives_collapsed(co: &Coefficients<'_>, f: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let k = co.k();
    let n = co.full + 1;
    let mut d = Vec::with_capacity(k);
    for l in 0..k {
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for mask in 0..n {
            a[(mask, mask)] += 1.0;
            for j in 0..k {
                rhs[mask] += derivative_known(co, f, j, 0, l, mask);
                if j != l {
                    let c = co.ratio(j, 0) * co.switch(j, 0, mask, 0);
                    let h = co.serve_tilde(j, mask, 0);
                    let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
                    a[(mask, m0)] -= c * (1.0 - h);
                    a[(mask, m1)] -= c * h;
                }
            }
        }
        let x = lu_solve(a, rhs, "collapsed derivative system")?;
        let slice: Vec<f64> = x.iter().copied().collect();
        d.push(vec![slice; k]);
    }
    Ok(d)
}

fn derivatives_dense(co: &Coefficients<'_>, f: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
    let k = co.k();
    let n_masks = co.full + 1;
    let n = k * n_masks;
    let idx = |i: usize, mask: usize| i * n_masks + mask;
    let mut d = Vec::with_capacity(k);
    for l in 0..k {
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..k {
            for mask in 0..n_masks {
                let r = idx(i, mask);
                a[(r, r)] += 1.0;
                for j in 0..k {
                    if co.model.routing[j][i] <= 0.0 {
                        continue;
                    }
                    rhs[r] += derivative_known(co, f, j, i, l, mask);
                    if j != l {
                        let c = co.ratio(j, i) * co.switch(j, i, mask, 0);
                        let h = co.serve_tilde(j, mask, 0);
                        let (m0, m1) = (mask & !(1 << j), mask | (1 << j));
                        a[(r, idx(j, m0))] -= c * (1.0 - h);
                        a[(r, idx(j, m1))] -= c * h;
                    }
                }
            }
        }
        let x = lu_solve(a, rhs, "dense derivative system")?;
        let mut slice = vec![vec![0.0; n_masks]; k];
        for (i, row) in slice.iter_mut().enumerate() {
            for (mask, slot) in row.iter_mut().enumerate() {
                *slot = x[idx(i, mask)];
            }
        }
        d.push(slice);
    }
    Ok(d)
}

fn finalize_derivatives(
    co: &Coefficients<'_>,
    f: &[Vec<f64>],
    d: Vec<Vec<Vec<f64>>>,
) -> Result<DerivativeTable> {
    let k = co.k();
    for l in 0..k {
        for i in 0..k {
            for mask in 0..=co.full {
                let v = d[l][i][mask];
                if !v.is_finite() {
                    return Err(Error::numeric(
                        "polling derivative solve",
                        format!("∂F_{i}/∂z_{l}({mask:#b}) is not finite"),
                    ));
                }
                let residual = (v - derivative_rhs(co, f, &d[l], l, i, mask)).abs();
                if !(residual <= RESIDUAL_TOLERANCE * v.abs().max(1.0)) {
                    return Err(Error::numeric(
                        "polling derivative solve",
                        format!(
                            "residual {residual:.3e} at (station {i}, axis {l}, {mask:#b}) exceeds {RESIDUAL_TOLERANCE:e}"
                        ),
                    ));
                }
            }
        }
    }
    Ok(DerivativeTable { k, values: d })
}

// =====================================================================
// Peak age
// =====================================================================

/// Exact per-station and average peak age of information.
///
/// Chains the boundary solve, the delivery rates, the mean waits, and the
/// derivative solve, then feeds each station's E[W_i] and W_i*(λ_i) =
/// (∂F_i/∂z_i at z_i = 0, rest 1)/α_i through [`paoi_from_waiting`].
///
/// # Errors
///
/// Propagates every failure mode of the underlying solves.
pub fn paoi(model: &PollingModel, policy: Policy) -> Result<PollingPaoi> {
    let co = Coefficients::new(model, policy)?;
    let table = solve_boundary_inner(&co)?;
    let gammas = gamma_rates(model, policy, &table, &co.pi)?;
    let waits = mean_waiting(&table, &gammas, model.lambdas())?;
    let derivs = solve_derivatives_inner(&co, &table)?;
    let k = model.k();
    let mut per_queue = Vec::with_capacity(k);
    for i in 0..k {
        let wait_lst = derivs.value(i, i, co.full & !(1 << i)) / table.alphas()[i];
        per_queue.push(paoi_from_waiting(
            model.lambdas[i],
            &model.services[i],
            co.policy,
            waits[i],
            wait_lst,
        )?);
    }
    let average = per_queue.iter().sum::<f64>() / k as f64;
    Ok(PollingPaoi { per_queue, average })
}

// =====================================================================
// Tests
// =====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{components, metrics, Component, IidVacationModel};
    use crate::distributions::LstQuery;
    use approx::assert_relative_eq;

    fn exp(rate: f64) -> DistributionSpec {
        DistributionSpec::exponential(rate).unwrap()
    }

    fn gamma_d(shape: f64, scale: f64) -> DistributionSpec {
        DistributionSpec::gamma(shape, scale).unwrap()
    }

    fn det(value: f64) -> DistributionSpec {
        DistributionSpec::deterministic(value).unwrap()
    }

    fn uniform_switchovers(k: usize, span: DistributionSpec) -> Vec<Vec<DistributionSpec>> {
        vec![vec![span; k]; k]
    }

    /// Switch-overs that vary with both endpoints, to defeat collapsing.
    fn varied_switchovers(k: usize) -> Vec<Vec<DistributionSpec>> {
        (0..k)
            .map(|j| (0..k).map(|i| det(0.15 + 0.05 * (j as f64) + 0.03 * (i as f64))).collect())
            .collect()
    }

    fn cyclic_model(
        lambdas: Vec<f64>,
        services: Vec<DistributionSpec>,
        switchovers: Vec<Vec<DistributionSpec>>,
    ) -> PollingModel {
        let routing = build_routing(RoutingScheme::Cyclic, &lambdas).unwrap();
        PollingModel::new(lambdas, services, switchovers, routing).unwrap()
    }

    fn single_station(lambda: f64, service: DistributionSpec, span: DistributionSpec) -> PollingModel {
        cyclic_model(vec![lambda], vec![service], vec![vec![span]])
    }

    /// The heavy reference configuration: two busy stations (45% of the
    /// load each) among eight, service exp(1), every switch-over det(1/80).
    fn eight_station_model(load: f64, scheme: RoutingScheme) -> PollingModel {
        let mut weights = vec![0.10 / 6.0; 8];
        weights[0] = 0.45;
        weights[3] = 0.45;
        let lambdas: Vec<f64> = weights.iter().map(|w| w * load).collect();
        let routing = build_routing(scheme, &lambdas).unwrap();
        PollingModel::new(
            lambdas,
            vec![exp(1.0); 8],
            uniform_switchovers(8, det(1.0 / 80.0)),
            routing,
        )
        .unwrap()
    }

    #[test]
    fn routing_schemes_build_documented_matrices() {
        let cyclic = build_routing(RoutingScheme::Cyclic, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(cyclic[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(cyclic[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(cyclic[2], vec![1.0, 0.0, 0.0]);

        let lop = build_routing(RoutingScheme::LoadProportional, &[1.0, 3.0]).unwrap();
        for row in &lop {
            assert_relative_eq!(row[0], 0.25);
            assert_relative_eq!(row[1], 0.75);
        }

        let sym = build_routing(RoutingScheme::Symmetric, &[2.0, 2.0]).unwrap();
        for row in &sym {
            assert_eq!(row, &vec![0.5, 0.5]);
        }

        assert!(build_routing(RoutingScheme::Cyclic, &[]).is_err());
        assert!(build_routing(RoutingScheme::Symmetric, &[1.0, -1.0]).is_err());
        assert_eq!("lop".parse::<RoutingScheme>().unwrap(), RoutingScheme::LoadProportional);
        assert_eq!(RoutingScheme::Cyclic.to_string(), "cyclic");
        assert!("roundrobin".parse::<RoutingScheme>().is_err());
    }

    #[test]
    fn stationary_matches_known_chains() {
        let cyclic = build_routing(RoutingScheme::Cyclic, &[1.0; 4]).unwrap();
        for p in stationary(&cyclic).unwrap() {
            assert_relative_eq!(p, 0.25, max_relative = 1e-12);
        }

        let lop = build_routing(RoutingScheme::LoadProportional, &[1.0, 3.0]).unwrap();
        let pi = stationary(&lop).unwrap();
        assert_relative_eq!(pi[0], 0.25, max_relative = 1e-12);
        assert_relative_eq!(pi[1], 0.75, max_relative = 1e-12);

        assert_eq!(stationary(&build_routing(RoutingScheme::Cyclic, &[1.0]).unwrap()).unwrap(), vec![1.0]);

        // Reducible chain: two absorbing stations have no unique weights.
        let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(stationary(&identity).is_err());
        // Shape defects are rejected up front.
        assert!(stationary(&[vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn model_validation_rejects_defects() {
        let ok = || {
            (
                vec![1.0, 2.0],
                vec![exp(1.0), exp(2.0)],
                uniform_switchovers(2, det(0.5)),
                build_routing(RoutingScheme::Cyclic, &[1.0, 2.0]).unwrap(),
            )
        };

        let (l, s, u, r) = ok();
        assert!(PollingModel::new(l, s, u, r).is_ok());

        let (_, s, u, r) = ok();
        assert!(PollingModel::new(vec![1.0, 0.0], s, u, r).is_err());

        let (l, _, u, r) = ok();
        assert!(PollingModel::new(l, vec![exp(1.0)], u, r).is_err());

        let (l, s, _, r) = ok();
        assert!(PollingModel::new(l, s, uniform_switchovers(2, det(0.0)), r).is_err());

        let (l, s, u, _) = ok();
        assert!(PollingModel::new(l, s, u, vec![vec![0.6, 0.3], vec![0.5, 0.5]]).is_err());

        // Reducible routing: the stations never exchange the server.
        let (l, s, u, _) = ok();
        assert!(PollingModel::new(l, s, u, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn model_serde_round_trip_revalidates() {
        let model = cyclic_model(
            vec![0.7, 1.3],
            vec![exp(1.0), gamma_d(2.0, 0.4)],
            varied_switchovers(2),
        );
        let text = serde_json::to_string(&model).unwrap();
        let back: PollingModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);

        let corrupt = text.replace("0.7", "-0.7");
        assert!(serde_json::from_str::<PollingModel>(&corrupt).is_err());
    }

    #[test]
    fn coefficients_are_unity_at_all_ones() {
        let model = cyclic_model(
            vec![0.6, 1.1, 0.4],
            vec![exp(1.2), det(0.5), gamma_d(1.5, 0.5)],
            varied_switchovers(3),
        );
        let full = (1usize << 3) - 1;
        for policy in Policy::ALL {
            for i in 0..3 {
                for j in 0..3 {
                    let c = tilde_coefficients(&model, policy, full, i, j).unwrap();
                    assert_relative_eq!(c.u_coeff, 1.0, max_relative = 1e-12);
                    assert_relative_eq!(c.h_coeff, 1.0, max_relative = 1e-12);
                }
            }
        }
        assert!(tilde_coefficients(&model, Policy::Cbs, full + 1, 0, 0).is_err());
        assert!(tilde_coefficients(&model, Policy::Cbs, 0, 3, 0).is_err());
    }

    #[test]
    fn own_axis_service_partials_vanish_for_thinned_policies() {
        let model = cyclic_model(
            vec![0.9, 0.5, 1.4],
            vec![gamma_d(2.0, 0.3), exp(0.8), det(0.4)],
            varied_switchovers(3),
        );
        for mask in 0..(1usize << 3) {
            for j in 0..3 {
                for policy in [Policy::Cbs, Policy::Cbsp] {
                    let c = tilde_coefficients(&model, policy, mask, 0, j).unwrap();
                    assert_eq!(c.h_partials[j], 0.0);
                }
                // Replacement during service keeps the own-mark dependence.
                let c = tilde_coefficients(&model, Policy::Brs, mask, 0, j).unwrap();
                assert!(c.h_partials[j] != 0.0);
            }
        }
        // A single station under preemption: the thinned argument is zero
        // regardless of the mark, so the service factor is exactly one.
        let single = single_station(1.0, exp(1.0), exp(1.0));
        let c = tilde_coefficients(&single, Policy::Cbsp, 0, 0, 0).unwrap();
        assert_relative_eq!(c.h_coeff, 1.0, max_relative = 1e-14);
    }

    /// The central oracle: a one-station ring is exactly the single-queue
    /// vacation model with the switch-over span as the vacation.
    #[test]
    fn single_station_reduces_to_vacation_queue() {
        let cases = [
            (1.0, exp(1.0), exp(1.0)),
            (0.7, gamma_d(2.0, 0.6), det(0.8)),
            (2.3, det(0.3), gamma_d(0.7, 1.1)),
            (0.4, exp(2.5), gamma_d(3.0, 0.2)),
        ];
        for (lam, service, span) in cases {
            let model = single_station(lam, service, span);
            let iid = IidVacationModel::new(lam, service, span).unwrap();
            for policy in Policy::ALL {
                let comps = components(&iid, policy);
                let expect_wait =
                    -comps.eval(Component::Wait, LstQuery::new(0.0, 1).unwrap()).unwrap();
                let expect_wstar =
                    comps.eval(Component::Wait, LstQuery::value_at(lam).unwrap()).unwrap();
                let expect_paoi = metrics(&iid, policy).unwrap().paoi;

                let table = solve_boundary(&model, policy).unwrap();
                let pi = stationary(model.routing()).unwrap();
                let gammas = gamma_rates(&model, policy, &table, &pi).unwrap();
                let waits = mean_waiting(&table, &gammas, model.lambdas()).unwrap();
                let derivs = solve_derivatives(&model, policy, &table).unwrap();
                let wstar = derivs.value(0, 0, 0) / table.alphas()[0];

                assert_relative_eq!(waits[0], expect_wait, max_relative = 1e-8);
                assert_relative_eq!(wstar, expect_wstar, max_relative = 1e-8);
                let got = paoi(&model, policy).unwrap();
                assert_relative_eq!(got.per_queue[0], expect_paoi, max_relative = 1e-8);
                assert_relative_eq!(got.average, expect_paoi, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn single_station_delivery_rate_matches_hand_value() {
        // λ = 1, service exp(1), switch-over mean 2: the subtraction in
        // the gated rate removes the visit charge and leaves γ = E[U] = 2.
        let model = single_station(1.0, exp(1.0), det(2.0));
        let table = solve_boundary(&model, Policy::Cbs).unwrap();
        let pi = stationary(model.routing()).unwrap();
        let gammas = gamma_rates(&model, Policy::Cbs, &table, &pi).unwrap();
        assert_relative_eq!(gammas[0], 2.0, max_relative = 1e-12);

        // α = 1 − U*(λ) = 1 − e^{-2}.
        let alpha = -(-2.0f64).exp_m1();
        assert_relative_eq!(table.alphas()[0], alpha, max_relative = 1e-12);
        let waits = mean_waiting(&table, &gammas, model.lambdas()).unwrap();
        assert_relative_eq!(waits[0], 2.0 / alpha - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn solver_paths_agree_on_boundary_and_derivatives() {
        // Ring vs dense on a heterogeneous three-station cycle.
        let ring = cyclic_model(
            vec![0.4, 1.1, 0.7],
            vec![exp(1.3), gamma_d(2.0, 0.4), det(0.6)],
            varied_switchovers(3),
        );
        // Collapsed vs dense on identical rows with uniform switch-overs.
        let lop_routing = build_routing(RoutingScheme::LoadProportional, &[0.5, 0.9, 0.3]).unwrap();
        let collapsed = PollingModel::new(
            vec![0.5, 0.9, 0.3],
            vec![exp(1.0), det(0.5), gamma_d(1.4, 0.6)],
            uniform_switchovers(3, det(0.4)),
            lop_routing,
        )
        .unwrap();

        for (model, is_ring) in [(&ring, true), (&collapsed, false)] {
            for policy in Policy::ALL {
                let co = Coefficients::new(model, policy).unwrap();
                let fast = match detect_path(model) {
                    SolverPath::Ring(next) => {
                        assert!(is_ring);
                        solve_boundary_ring(&co, &next).unwrap()
                    }
                    SolverPath::Collapsed => {
                        assert!(!is_ring);
                        solve_boundary_collapsed(&co).unwrap()
                    }
                    SolverPath::Dense => panic!("expected a structural shortcut"),
                };
                let dense = solve_boundary_dense(&co).unwrap();
                for i in 0..model.k() {
                    for mask in 0..=co.full {
                        assert_relative_eq!(fast[i][mask], dense[i][mask], epsilon = 1e-11);
                    }
                }

                let table = finalize_boundary(&co, fast).unwrap();
                let fast_d = match detect_path(model) {
                    SolverPath::Ring(next) => derivatives_ring(&co, &table.values, &next),
                    SolverPath::Collapsed => derivatives_collapsed(&co, &table.values).unwrap(),
                    SolverPath::Dense => unreachable!(),
                };
                let dense_d = derivatives_dense(&co, &table.values).unwrap();
                for l in 0..model.k() {
                    for i in 0..model.k() {
                        for mask in 0..=co.full {
                            assert_relative_eq!(
                                fast_d[l][i][mask],
                                dense_d[l][i][mask],
                                epsilon = 1e-10,
                                max_relative = 1e-9
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_stations_share_peak_age() {
        for scheme in [RoutingScheme::Cyclic, RoutingScheme::Symmetric] {
            let lambdas = vec![0.6; 5];
            let routing = build_routing(scheme, &lambdas).unwrap();
            let model = PollingModel::new(
                lambdas,
                vec![gamma_d(1.5, 0.4); 5],
                uniform_switchovers(5, det(0.25)),
                routing,
            )
            .unwrap();
            for policy in Policy::ALL {
                let got = paoi(&model, policy).unwrap();
                let (lo, hi) = got
                    .per_queue
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                assert!(hi - lo <= 1e-8 * hi, "spread {} vs {}", lo, hi);
                assert_relative_eq!(got.average, got.per_queue[0], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn rotating_the_ring_rotates_per_station_results() {
        let lambdas = vec![0.4, 1.1, 0.7];
        let services = vec![exp(1.3), gamma_d(2.0, 0.4), det(0.6)];
        let span = det(0.3);
        let base = cyclic_model(lambdas.clone(), services.clone(), uniform_switchovers(3, span));
        let rotated = cyclic_model(
            vec![lambdas[1], lambdas[2], lambdas[0]],
            vec![services[1], services[2], services[0]],
            uniform_switchovers(3, span),
        );
        for policy in Policy::ALL {
            let a = paoi(&base, policy).unwrap();
            let b = paoi(&rotated, policy).unwrap();
            for i in 0..3 {
                assert_relative_eq!(a.per_queue[(i + 1) % 3], b.per_queue[i], max_relative = 1e-9);
            }
            assert_relative_eq!(a.average, b.average, max_relative = 1e-9);
        }
    }

    #[test]
    fn light_traffic_wait_transform_expands_linearly() {
        // At tiny rates W*(λ_i) = 1 − λ_i E[W_i] + O(λ²).
        let lambdas = vec![1e-3; 3];
        let model = cyclic_model(
            lambdas.clone(),
            vec![exp(1.0), det(0.7), gamma_d(2.0, 0.4)],
            varied_switchovers(3),
        );
        for policy in Policy::ALL {
            let table = solve_boundary(&model, policy).unwrap();
            let pi = stationary(model.routing()).unwrap();
            let gammas = gamma_rates(&model, policy, &table, &pi).unwrap();
            let waits = mean_waiting(&table, &gammas, model.lambdas()).unwrap();
            let derivs = solve_derivatives(&model, policy, &table).unwrap();
            let full = (1usize << 3) - 1;
            for i in 0..3 {
                let wstar = derivs.value(i, i, full & !(1 << i)) / table.alphas()[i];
                assert!(
                    (wstar - (1.0 - lambdas[i] * waits[i])).abs() <= 1e-3,
                    "station {i}: {wstar} vs {}",
                    1.0 - lambdas[i] * waits[i]
                );
            }
        }
    }

    /// Re-solve the balance equations with one mark held at a real value
    /// and the rest binary; the closure adds one solve per displacement.
    fn real_axis_values(
        model: &PollingModel,
        policy: Policy,
        table: &BoundaryTable,
        axis: usize,
        t: f64,
    ) -> Vec<Vec<f64>> {
        let k = model.k();
        let pi = stationary(model.routing()).unwrap();
        let rest_bits = k - 1;
        let rest_count = 1usize << rest_bits;
        // Coordinates other than `axis`, in ascending station order.
        let rest_coords: Vec<usize> = (0..k).filter(|&m| m != axis).collect();
        let z_of = |rest: usize| -> Vec<f64> {
            let mut z = vec![0.0; k];
            z[axis] = t;
            for (pos, &m) in rest_coords.iter().enumerate() {
                z[m] = if rest & (1 << pos) != 0 { 1.0 } else { 0.0 };
            }
            z
        };
        let binary_mask = |rest: usize, axis_bit: bool| -> usize {
            let mut mask = 0usize;
            for (pos, &m) in rest_coords.iter().enumerate() {
                if rest & (1 << pos) != 0 {
                    mask |= 1 << m;
                }
            }
            if axis_bit {
                mask |= 1 << axis;
            }
            mask
        };
        let idx = |i: usize, rest: usize| i * rest_count + rest;
        let n = k * rest_count;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..k {
            for rest in 0..rest_count {
                let r = idx(i, rest);
                a[(r, r)] += 1.0;
                let z = z_of(rest);
                let sigma: f64 = (0..k).map(|m| model.lambdas()[m] * (1.0 - z[m])).sum();
                for j in 0..k {
                    if model.routing()[j][i] <= 0.0 {
                        continue;
                    }
                    let thinned = sigma - model.lambdas()[j] * (1.0 - z[j]);
                    let h = match policy {
                        Policy::Cbs => model.services()[j].lst_deriv(0, thinned),
                        Policy::Brs => model.services()[j].lst_deriv(0, sigma),
                        Policy::Cbsp => {
                            serve_jet(model.lambdas()[j], &model.services()[j], thinned).deriv(0)
                        }
                    };
                    let c = pi[j] / pi[i]
                        * model.routing()[j][i]
                        * model.switchovers()[j][i].lst_deriv(0, sigma);
                    for (weight, bit) in [(c * (1.0 - h), false), (c * h, true)] {
                        if j == axis {
                            rhs[r] += weight * table.value(j, binary_mask(rest, bit));
                        } else {
                            let pos = rest_coords.iter().position(|&m| m == j).unwrap();
                            let sub = if bit { rest | (1 << pos) } else { rest & !(1 << pos) };
                            a[(r, idx(j, sub))] -= weight;
                        }
                    }
                }
            }
        }
        let x = lu_solve(a, rhs, "real-axis check system").unwrap();
        (0..k)
            .map(|i| (0..rest_count).map(|rest| x[idx(i, rest)]).collect())
            .collect()
    }

    #[test]
    fn derivative_tables_match_real_axis_differences() {
        // General routing exercises the dense path end to end.
        let routing = vec![
            vec![0.2, 0.5, 0.3],
            vec![0.4, 0.1, 0.5],
            vec![0.6, 0.3, 0.1],
        ];
        let model = PollingModel::new(
            vec![0.5, 1.2, 0.8],
            vec![exp(1.1), gamma_d(2.0, 0.35), det(0.45)],
            varied_switchovers(3),
            routing,
        )
        .unwrap();
        let eps = 1e-4;
        let full = (1usize << 3) - 1;
        for policy in Policy::ALL {
            let table = solve_boundary(&model, policy).unwrap();
            let derivs = solve_derivatives(&model, policy, &table).unwrap();
            for axis in 0..3 {
                let rest_ones = (1usize << 2) - 1;
                let near = real_axis_values(&model, policy, &table, axis, 1.0 - eps);
                let far = real_axis_values(&model, policy, &table, axis, 1.0 - 2.0 * eps);
                let lo_near = real_axis_values(&model, policy, &table, axis, eps);
                let lo_far = real_axis_values(&model, policy, &table, axis, 2.0 * eps);
                for i in 0..3 {
                    // One-sided second-order differences at both ends of the axis.
                    let analytic_at_one = derivs.value(i, axis, full);
                    let fd_at_one = (3.0 * table.value(i, full) - 4.0 * near[i][rest_ones]
                        + far[i][rest_ones])
                        / (2.0 * eps);
                    assert!(
                        (analytic_at_one - fd_at_one).abs()
                            <= 1e-5 * analytic_at_one.abs().max(1.0),
                        "axis {axis} station {i} at 1: {analytic_at_one} vs {fd_at_one}"
                    );

                    let zero_mask = full & !(1 << axis);
                    let analytic_at_zero = derivs.value(i, axis, zero_mask);
                    let fd_at_zero = (-3.0 * table.value(i, zero_mask) + 4.0 * lo_near[i][rest_ones]
                        - lo_far[i][rest_ones])
                        / (2.0 * eps);
                    assert!(
                        (analytic_at_zero - fd_at_zero).abs()
                            <= 1e-5 * analytic_at_zero.abs().max(1.0),
                        "axis {axis} station {i} at 0: {analytic_at_zero} vs {fd_at_zero}"
                    );
                }
            }
        }
    }

    #[test]
    fn exponential_service_equates_gated_and_preemptive_solves() {
        // With exponential service the preemptive span transform collapses
        // to the plain service transform, so the solves coincide and only
        // the peak-age kernel separates the two policies.
        let model = cyclic_model(
            vec![0.6, 1.4, 0.9],
            vec![exp(1.2), exp(0.7), exp(2.1)],
            varied_switchovers(3),
        );
        let table_cbs = solve_boundary(&model, Policy::Cbs).unwrap();
        let table_p = solve_boundary(&model, Policy::Cbsp).unwrap();
        let full = (1usize << 3) - 1;
        for i in 0..3 {
            for mask in 0..=full {
                assert_relative_eq!(
                    table_cbs.value(i, mask),
                    table_p.value(i, mask),
                    epsilon = 1e-12
                );
            }
        }
        let pi = stationary(model.routing()).unwrap();
        let g_cbs = gamma_rates(&model, Policy::Cbs, &table_cbs, &pi).unwrap();
        let g_p = gamma_rates(&model, Policy::Cbsp, &table_p, &pi).unwrap();
        let w_cbs = mean_waiting(&table_cbs, &g_cbs, model.lambdas()).unwrap();
        let w_p = mean_waiting(&table_p, &g_p, model.lambdas()).unwrap();
        let d_cbs = solve_derivatives(&model, Policy::Cbs, &table_cbs).unwrap();

        let a_cbs = paoi(&model, Policy::Cbs).unwrap();
        let a_p = paoi(&model, Policy::Cbsp).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g_cbs[i], g_p[i], max_relative = 1e-12);
            assert_relative_eq!(w_cbs[i], w_p[i], max_relative = 1e-11);

            // Shared wait statistics reduce the peak-age gap to a closed
            // form in the service rate and W_i*(λ_i).
            let lam = model.lambdas()[i];
            let h = model.services()[i].mean();
            let wstar = d_cbs.value(i, i, full & !(1 << i)) / table_cbs.alphas()[i];
            let hl = model.services()[i].lst_deriv(0, lam);
            let expect_gap = (1.0 - hl) * (1.0 - wstar) / lam + h - 1.0 / (1.0 / h + lam);
            let gap = a_cbs.per_queue[i] - a_p.per_queue[i];
            assert_relative_eq!(gap, expect_gap, max_relative = 1e-9);
            assert!(gap >= -1e-9);
        }
    }

    #[test]
    fn station_cap_is_enforced() {
        let k = MAX_QUEUES + 1;
        let lambdas = vec![0.5; k];
        let routing = build_routing(RoutingScheme::Cyclic, &lambdas).unwrap();
        let model = PollingModel::new(
            lambdas,
            vec![exp(1.0); k],
            uniform_switchovers(k, det(0.1)),
            routing,
        )
        .unwrap();
        assert!(matches!(solve_boundary(&model, Policy::Cbs), Err(Error::Unsupported(_))));
        assert!(matches!(paoi(&model, Policy::Cbs), Err(Error::Unsupported(_))));
    }

    #[test]
    fn heavy_ring_reference_values() {
        // Eight stations, total load 0.85, two busy stations: the busy
        // stations see fresh peaks near 5.44 and the idle ones near 74.3.
        let model = eight_station_model(0.85, RoutingScheme::Cyclic);
        let cbs = paoi(&model, Policy::Cbs).unwrap();
        assert!((cbs.per_queue[0] - 5.4396).abs() <= 5e-3, "got {}", cbs.per_queue[0]);
        assert!((cbs.per_queue[1] - 74.2941).abs() <= 5e-3, "got {}", cbs.per_queue[1]);
        let brs = paoi(&model, Policy::Brs).unwrap();
        assert!((brs.per_queue[0] - 5.0996).abs() <= 5e-3, "got {}", brs.per_queue[0]);
        let cbsp = paoi(&model, Policy::Cbsp).unwrap();
        assert!((cbsp.per_queue[0] - 5.0688).abs() <= 5e-3, "got {}", cbsp.per_queue[0]);
    }

    #[test]
    fn scheme_ordering_holds_on_small_mixed_system() {
        // Unbalanced arrivals at moderate load: the deterministic cycle
        // beats random visiting, and uniform beats load-biased visiting.
        let weights = [0.1, 0.2, 0.7];
        let load = 2.0;
        let lambdas: Vec<f64> = weights.iter().map(|w| w * load).collect();
        for policy in Policy::ALL {
            let mut averages = Vec::new();
            for scheme in RoutingScheme::ALL {
                let routing = build_routing(scheme, &lambdas).unwrap();
                let model = PollingModel::new(
                    lambdas.clone(),
                    vec![exp(1.0); 3],
                    uniform_switchovers(3, det(0.2)),
                    routing,
                )
                .unwrap();
                averages.push(paoi(&model, policy).unwrap().average);
            }
            // ALL is ordered cyclic, lop, symmetric.
            let (cyclic, lop, symmetric) = (averages[0], averages[1], averages[2]);
            assert!(
                cyclic <= symmetric + 1e-9 && symmetric <= lop + 1e-9,
                "{policy}: cyclic {cyclic}, symmetric {symmetric}, lop {lop}"
            );
        }
    }
}

// =====================================================================
// Property tests
// =====================================================================
