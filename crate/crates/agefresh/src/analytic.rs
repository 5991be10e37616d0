//! Closed-form information-freshness metrics for a single-buffer source
//! whose server takes i.i.d. vacations, plus the vacation-free
//! specializations of the same queue.
//!
//! A source emits packets as a Poisson process with rate λ. The server
//! keeps at most one packet in a replacement buffer (a newer arrival
//! overwrites an older buffered packet) and leaves on repeated vacations
//! whenever the buffering policy sends it away:
//!
//! | Policy | Buffering rule |
//! |--------|----------------|
//! | [`Policy::Cbs`]  | buffer accepts arrivals only while the server is away; arrivals during service are dropped; a vacation follows every service completion |
//! | [`Policy::Brs`]  | buffer accepts arrivals from the moment a service starts; vacations repeat only while the buffer is empty |
//! | [`Policy::Cbsp`] | buffer rule of `Cbs`, but an arrival during service preempts and replaces the packet being served; vacations are taken only when the system is empty |
//!
//! Metrics come from a renewal-reward decomposition of the age sawtooth
//! into per-cycle spans. Each span is carried as a Laplace-Stieltjes
//! transform evaluated through order-2 jets, so means, second moments, and
//! variances are exact up to rounding:
//!
//! | Component | Policies | Span measured |
//! |-----------|----------|---------------|
//! | [`Component::Wait`] | all | arrival of an eventually-delivered packet to its first service start |
//! | [`Component::Cycle`] | `Cbs`, `Brs` | one informative delivery to the next |
//! | [`Component::StartAge`] | `Cbs`, `Brs` | age of the buffered packet at the instant its service starts |
//! | [`Component::VacationBlock`] | all | contiguous vacation span that begins with an empty buffer |
//! | [`Component::ServeSpan`] | `Cbsp` | first service start to the next delivery, spanning preempted attempts |
//! | [`Component::DeliveryAge`] | `Cbsp` | arrival to delivery for a packet that completes service |
//!
//! # Design Notes
//!
//! - Every metric is computed twice, once from the flattened closed forms
//!   and once from component moments, and the two routes must agree to
//!   [`DUAL_ROUTE_TOLERANCE`] relative or the call fails. A transcription
//!   slip in either route cannot silently corrupt results.
//! - Every `1 − X*(s)` and `X*(m)(s) − X*(m)(t)` factor routes through the
//!   cancellation-free distribution helpers, so both routes keep full
//!   precision even when the vacation rate is pushed toward the
//!   no-vacation limit.
//! - The waiting-time transform has a removable singularity at s = λ.
//!   Inside |s − λ| < 1e−7·λ a fourth-order series in (s − λ) replaces the
//!   raw quotient; outside, the factored numerator difference keeps full
//!   precision.

use crate::distributions::{DistributionSpec, LstQuery};
use crate::error::{Error, Result};
use crate::jet::Jet;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Required relative agreement between the flattened closed forms and the
/// component-moment route for every metric returned by this module.
pub const DUAL_ROUTE_TOLERANCE: f64 = 1e-10;

/// Relative half-width of the removable-singularity window around s = λ
/// in the waiting-time transforms.
const WAIT_WINDOW: f64 = 1e-7;

// =====================================================================
// Policies and vacation-free systems
// =====================================================================

/// Buffering policy of the single-buffer vacation queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// Conventional buffering: the buffer fills only during vacations and
    /// a vacation follows every service completion.
    Cbs,
    /// Relaxed buffering: the buffer also fills during service, so the
    /// server takes a single vacation whenever an arrival was seen.
    Brs,
    /// Conventional buffering with preemption: an arrival during service
    /// replaces the packet in service; vacations only start from an empty
    /// system.
    Cbsp,
}

impl Policy {
    /// All policies, in canonical reporting order.
    pub const ALL: [Policy; 3] = [Policy::Cbs, Policy::Brs, Policy::Cbsp];

    /// Canonical lowercase name used in CLI flags and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Policy::Cbs => "cbs",
            Policy::Brs => "brs",
            Policy::Cbsp => "cbsp",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cbs" => Ok(Policy::Cbs),
            "brs" => Ok(Policy::Brs),
            "cbsp" | "cbs-p" | "cbs_p" => Ok(Policy::Cbsp),
            other => Err(Error::Parse(format!(
                "unknown policy '{other}' (expected cbs, brs, or cbsp)"
            ))),
        }
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.name().to_string()
    }
}

/// Vacation-free specializations reached when the vacation length shrinks
/// to zero, in Kendall notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoVacationSystem {
    /// M/G/1/1: no buffer; arrivals during service are dropped. Limit of
    /// [`Policy::Cbs`].
    MG11,
    /// M/G/1/2*: one replacement buffer slot next to the server. Limit of
    /// [`Policy::Brs`].
    MG12Star,
    /// M/G/1/1 with preemption: an arrival replaces the packet in service.
    /// Limit of [`Policy::Cbsp`].
    MG11Preemptive,
}

impl NoVacationSystem {
    /// All systems, in canonical reporting order.
    pub const ALL: [NoVacationSystem; 3] = [
        NoVacationSystem::MG11,
        NoVacationSystem::MG12Star,
        NoVacationSystem::MG11Preemptive,
    ];

    /// Canonical name used in CLI flags and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            NoVacationSystem::MG11 => "m_g_1_1",
            NoVacationSystem::MG12Star => "m_g_1_2star",
            NoVacationSystem::MG11Preemptive => "m_g_1_1_preemptive",
        }
    }

    /// The vacation policy whose zero-vacation limit this system is.
    pub fn matching_policy(self) -> Policy {
        match self {
            NoVacationSystem::MG11 => Policy::Cbs,
            NoVacationSystem::MG12Star => Policy::Brs,
            NoVacationSystem::MG11Preemptive => Policy::Cbsp,
        }
    }
}

impl fmt::Display for NoVacationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoVacationSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m_g_1_1" | "mg11" | "m/g/1/1" => Ok(NoVacationSystem::MG11),
            "m_g_1_2star" | "mg12star" | "m/g/1/2*" | "m_g_1_2*" => {
                Ok(NoVacationSystem::MG12Star)
            }
            "m_g_1_1_preemptive" | "mg11p" | "m/g/1/1/p" | "m/g/1/1/preemptive" => {
                Ok(NoVacationSystem::MG11Preemptive)
            }
            other => Err(Error::Parse(format!(
                "unknown system '{other}' (expected m_g_1_1, m_g_1_2star, or m_g_1_1_preemptive)"
            ))),
        }
    }
}

impl TryFrom<String> for NoVacationSystem {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoVacationSystem> for String {
    fn from(sys: NoVacationSystem) -> String {
        sys.name().to_string()
    }
}

// =====================================================================
// Model
// =====================================================================

/// Poisson-arrival single-buffer queue with i.i.d. service times H and
/// i.i.d. vacation times V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIidVacationModel")]
pub struct IidVacationModel {
    lambda: f64,
    service: DistributionSpec,
    vacation: DistributionSpec,
}

/// Unvalidated mirror used so deserialization passes through [`IidVacationModel::new`].
#[derive(Deserialize)]
struct RawIidVacationModel {
    lambda: f64,
    service: DistributionSpec,
    vacation: DistributionSpec,
}

impl TryFrom<RawIidVacationModel> for IidVacationModel {
    type Error = Error;

    fn try_from(raw: RawIidVacationModel) -> Result<Self> {
        IidVacationModel::new(raw.lambda, raw.service, raw.vacation)
    }
}

impl IidVacationModel {
    /// Build a model from an arrival rate, a service distribution, and a
    /// vacation distribution.
    ///
    /// # Errors
    ///
    /// Rejects a non-finite or non-positive `lambda` and degenerate
    /// zero-length service or vacation distributions.
    pub fn new(lambda: f64, service: DistributionSpec, vacation: DistributionSpec) -> Result<Self> {
        validate_rate("lambda", lambda)?;
        if service.is_zero() {
            return Err(Error::invalid("service", "service time must have positive mean"));
        }
        if vacation.is_zero() {
            return Err(Error::invalid("vacation", "vacation time must have positive mean"));
        }
        Ok(Self { lambda, service, vacation })
    }

    /// Poisson arrival rate λ.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Service-time distribution H.
    pub fn service(&self) -> &DistributionSpec {
        &self.service
    }

    /// Vacation-time distribution V.
    pub fn vacation(&self) -> &DistributionSpec {
        &self.vacation
    }
}

pub(crate) fn validate_rate(field: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(field, format!("must be a positive finite rate, got {value}")));
    }
    Ok(())
}

// =====================================================================
// Metrics container
// =====================================================================

/// Time-average age, expected peak age, and variance of peak age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreshnessMetrics {
    /// Time-average age of information E[Δ].
    pub aoi: f64,
    /// Expected peak age E[A].
    pub paoi: f64,
    /// Variance of the peak age Var(A).
    pub var_peak: f64,
}

impl FreshnessMetrics {
    /// Validate computed values: positive ages, nonnegative variance.
    /// Variance values within rounding noise below zero are clamped to 0.
    pub(crate) fn checked(aoi: f64, paoi: f64, var_peak: f64, context: &'static str) -> Result<Self> {
        if !aoi.is_finite() || aoi <= 0.0 {
            return Err(Error::numeric(context, format!("aoi must be positive, got {aoi}")));
        }
        if !paoi.is_finite() || paoi <= 0.0 {
            return Err(Error::numeric(context, format!("paoi must be positive, got {paoi}")));
        }
        let noise_floor = -1e-9 * paoi.max(1.0).powi(2);
        let var_peak = if var_peak >= 0.0 {
            var_peak
        } else if var_peak >= noise_floor {
            0.0
        } else {
            return Err(Error::numeric(
                context,
                format!("var_peak must be nonnegative, got {var_peak}"),
            ));
        };
        if !var_peak.is_finite() {
            return Err(Error::numeric(context, format!("var_peak must be finite, got {var_peak}")));
        }
        Ok(Self { aoi, paoi, var_peak })
    }
}

// =====================================================================
// Component transforms
// =====================================================================

/// Per-cycle span of the age process whose transform can be queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// W: arrival of an eventually-delivered packet to its first service start.
    Wait,
    /// I: one informative delivery to the next.
    Cycle,
    /// G: age of the buffered packet at the instant its service starts.
    StartAge,
    /// B: contiguous vacation span that begins with an empty buffer.
    VacationBlock,
    /// L: first service start to the next delivery, spanning preempted attempts.
    ServeSpan,
    /// D: arrival to delivery for a packet that completes service.
    DeliveryAge,
}

impl Component {
    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Component::Wait => "wait",
            Component::Cycle => "cycle",
            Component::StartAge => "start_age",
            Component::VacationBlock => "vacation_block",
            Component::ServeSpan => "serve_span",
            Component::DeliveryAge => "delivery_age",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluators for the per-cycle span transforms of one model under one
/// policy. Supports order-{0,1,2} queries at any s ≥ 0.
#[derive(Debug, Clone)]
pub struct ComponentLsts {
    model: IidVacationModel,
    policy: Policy,
}

const NONPREEMPTIVE_COMPONENTS: [Component; 4] = [
    Component::Wait,
    Component::Cycle,
    Component::StartAge,
    Component::VacationBlock,
];

const PREEMPTIVE_COMPONENTS: [Component; 4] = [
    Component::Wait,
    Component::VacationBlock,
    Component::ServeSpan,
    Component::DeliveryAge,
];

impl ComponentLsts {
    /// Policy the evaluators were built for.
    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Components defined under this policy.
    pub fn supported(&self) -> &'static [Component] {
        match self.policy {
            Policy::Cbs | Policy::Brs => &NONPREEMPTIVE_COMPONENTS,
            Policy::Cbsp => &PREEMPTIVE_COMPONENTS,
        }
    }

    /// Signed transform derivative of the requested order at `query.s()`.
    ///
    /// # Errors
    ///
    /// Fails when `component` is not defined under this policy.
    pub fn eval(&self, component: Component, query: LstQuery) -> Result<f64> {
        Ok(self.jet(component, query.s())?.deriv(query.order()))
    }

    /// Order-2 jet of the component transform at `s`.
    fn jet(&self, component: Component, s: f64) -> Result<Jet> {
        let lambda = self.model.lambda;
        let service = &self.model.service;
        let vacation = &self.model.vacation;
        match (self.policy, component) {
            (_, Component::VacationBlock) => Ok(block_jet(lambda, vacation, s)),
            (Policy::Cbs | Policy::Cbsp, Component::Wait) => Ok(wait_cbs_jet(lambda, vacation, s)),
            (Policy::Brs, Component::Wait) => Ok(wait_brs_jet(lambda, service, vacation, s)),
            (Policy::Cbs, Component::Cycle) => {
                Ok(service.jet(s) * block_jet(lambda, vacation, s))
            }
            (Policy::Brs, Component::Cycle) => Ok(cycle_brs_jet(lambda, service, vacation, s)),
            (Policy::Cbs, Component::StartAge) => Ok(start_cbs_jet(lambda, vacation, s)),
            (Policy::Brs, Component::StartAge) => Ok(start_brs_jet(lambda, service, vacation, s)),
            (Policy::Cbsp, Component::ServeSpan) => Ok(serve_jet(lambda, service, s)),
            (Policy::Cbsp, Component::DeliveryAge) => {
                Ok(delivery_jet(lambda, service, vacation, s))
            }
            (policy, component) => Err(Error::Unsupported(format!(
                "component '{component}' is not defined under policy '{policy}'"
            ))),
        }
    }
}

/// Build the component evaluators for a model under a policy.
pub fn components(model: &IidVacationModel, policy: Policy) -> ComponentLsts {
    ComponentLsts { model: model.clone(), policy }
}

/// Standalone evaluator for the vacation-block transform B*(s), which is
/// shared by every policy.
#[derive(Debug, Clone)]
pub struct VacationBlockLst {
    lambda: f64,
    vacation: DistributionSpec,
}

impl VacationBlockLst {
    /// Signed transform derivative of the requested order at `query.s()`.
    pub fn eval(&self, query: LstQuery) -> f64 {
        block_jet(self.lambda, &self.vacation, query.s()).deriv(query.order())
    }
}

/// Evaluator for B*(s) = (V*(s) − V*(s+λ)) / (1 − V*(s+λ)), the span of
/// consecutive vacations until one ends with a packet in the buffer.
pub fn vacation_block_lst(model: &IidVacationModel) -> VacationBlockLst {
    VacationBlockLst { lambda: model.lambda, vacation: model.vacation.clone() }
}

// ---------------------------------------------------------------------
// Jet builders
// ---------------------------------------------------------------------

/// Order-2 jet of T*(s) = λ/(λ+s), the exponential inter-arrival transform.
fn interarrival_jet(lambda: f64, s: f64) -> Jet {
    let r = 1.0 / (lambda + s);
    let f = lambda * r;
    Jet::new(f, -f * r, 2.0 * f * r * r)
}

/// B*(s) = (V*(s) − V*(s+λ)) / (1 − V*(s+λ)); both factors are
/// cancellation-free.
fn block_jet(lambda: f64, vacation: &DistributionSpec, s: f64) -> Jet {
    vacation.jet_diff(s, lambda) / vacation.jet_one_minus(s + lambda)
}

/// W*(s) = λ(V*(λ) − V*(s)) / ((s−λ)(1 − V*(λ))) for the policies that
/// buffer only during vacations.
///
/// # Mathematical Definition
///
/// The quotient has a removable singularity at s = λ; inside the window
/// it is replaced by the series
/// W*(λ+δ) = −(λ/q)·Σ_{n≥1} V*⁽ⁿ⁾(λ) δ^{n−1}/n!, truncated after n = 4.
fn wait_cbs_jet(lambda: f64, vacation: &DistributionSpec, s: f64) -> Jet {
    let q = vacation.one_minus_lst(lambda);
    let delta = s - lambda;
    if delta.abs() < WAIT_WINDOW * lambda {
        let d: [f64; 4] = std::array::from_fn(|i| vacation.lst_deriv(i + 1, lambda));
        let value = d[0] + delta * (d[1] / 2.0 + delta * (d[2] / 6.0 + delta * d[3] / 24.0));
        let d1 = d[1] / 2.0 + delta * (d[2] / 3.0 + delta * d[3] / 8.0);
        let d2 = d[2] / 3.0 + delta * d[3] / 4.0;
        Jet::new(value, d1, d2).scale(-lambda / q)
    } else {
        // Factored numerator keeps precision when s is near but outside the window.
        let numer = Jet::new(
            vacation.lst_deriv_diff(0, lambda, s),
            -vacation.lst_deriv(1, s),
            -vacation.lst_deriv(2, s),
        );
        (numer / Jet::new(delta, 1.0, 0.0)).scale(lambda / q)
    }
}

/// G*(s) = (λ/(λ+s)) (1 − V*(λ+s)) / (1 − V*(λ)) for the policies that
/// buffer only during vacations. Singularity-free product form; equal to
/// λ/(λ+s) + (s/(λ+s))·W*(λ+s).
fn start_cbs_jet(lambda: f64, vacation: &DistributionSpec, s: f64) -> Jet {
    let q = vacation.one_minus_lst(lambda);
    interarrival_jet(lambda, s) * vacation.jet_one_minus(s + lambda).scale(1.0 / q)
}

/// I*(s) = H*(s)V*(s) + H*(λ+s) V*(λ+s)(V*(s) − 1)/(1 − V*(λ+s)) for the
/// policy that buffers during service: the cycle is service plus one
/// vacation when an arrival came during service, else service plus a
/// whole vacation block.
fn cycle_brs_jet(lambda: f64, service: &DistributionSpec, vacation: &DistributionSpec, s: f64) -> Jet {
    service.jet(s) * vacation.jet(s)
        + service.jet(s + lambda) * vacation.jet(s + lambda) * (-vacation.jet_one_minus(s))
            / vacation.jet_one_minus(s + lambda)
}

/// W*(s) = λ(Z*(λ) − Z*(s))/(s−λ) + Z*(λ)·W_cbs*(s) with Z* = V*·H*, for
/// the policy that buffers during service.
///
/// # Mathematical Definition
///
/// The first term's removable singularity at s = λ is handled by the same
/// series device as the vacation-only wait, using the product-rule
/// derivatives of Z at λ.
fn wait_brs_jet(lambda: f64, service: &DistributionSpec, vacation: &DistributionSpec, s: f64) -> Jet {
    let z_at_lambda = vacation.lst_deriv(0, lambda) * service.lst_deriv(0, lambda);
    let delta = s - lambda;
    let gated = if delta.abs() < WAIT_WINDOW * lambda {
        let v: [f64; 5] = std::array::from_fn(|i| vacation.lst_deriv(i, lambda));
        let h: [f64; 5] = std::array::from_fn(|i| service.lst_deriv(i, lambda));
        let z1 = v[1] * h[0] + v[0] * h[1];
        let z2 = v[2] * h[0] + 2.0 * v[1] * h[1] + v[0] * h[2];
        let z3 = v[3] * h[0] + 3.0 * v[2] * h[1] + 3.0 * v[1] * h[2] + v[0] * h[3];
        let z4 = v[4] * h[0] + 4.0 * v[3] * h[1] + 6.0 * v[2] * h[2] + 4.0 * v[1] * h[3]
            + v[0] * h[4];
        let value = z1 + delta * (z2 / 2.0 + delta * (z3 / 6.0 + delta * z4 / 24.0));
        let d1 = z2 / 2.0 + delta * (z3 / 3.0 + delta * z4 / 8.0);
        let d2 = z3 / 3.0 + delta * z4 / 4.0;
        Jet::new(value, d1, d2).scale(-lambda)
    } else {
        // Z*(s) − Z*(λ) split across the factored per-family differences.
        let dv = vacation.lst_deriv_diff(0, s, lambda);
        let dh = service.lst_deriv_diff(0, s, lambda);
        let z_gap = service.lst_deriv(0, s) * dv + vacation.lst_deriv(0, lambda) * dh;
        let z_jet = vacation.jet(s) * service.jet(s);
        let numer = Jet::new(-z_gap, -z_jet.deriv(1), -z_jet.deriv(2));
        (numer / Jet::new(delta, 1.0, 0.0)).scale(lambda)
    };
    gated + wait_cbs_jet(lambda, vacation, s).scale(z_at_lambda)
}

/// G*(s) = (λ/(λ+s))[1 + (V*(λ)H*(λ)/(1−V*(λ)))(1 − V*(λ+s)) − V*(λ+s)H*(λ+s)]
/// for the policy that buffers during service.
fn start_brs_jet(lambda: f64, service: &DistributionSpec, vacation: &DistributionSpec, s: f64) -> Jet {
    let q = vacation.one_minus_lst(lambda);
    let gate = vacation.lst_deriv(0, lambda) * service.lst_deriv(0, lambda) / q;
    let bracket = Jet::constant(1.0) + vacation.jet_one_minus(s + lambda).scale(gate)
        - vacation.jet(s + lambda) * service.jet(s + lambda);
    interarrival_jet(lambda, s) * bracket
}

/// L*(s) = (s+λ)H*(s+λ) / (s + λH*(s+λ)): the span from a service start
/// to the next delivery, where each arrival restarts service.
pub(crate) fn serve_jet(lambda: f64, service: &DistributionSpec, s: f64) -> Jet {
    let shifted = service.jet(s + lambda);
    let numer = (Jet::variable(s) + Jet::constant(lambda)) * shifted;
    let denom = Jet::variable(s) + shifted.scale(lambda);
    numer / denom
}

/// D*(s) = H*(λ+s)(G*(s) + 1/H*(λ) − 1): delivered packets either waited
/// in the buffer (age G at service start) or preempted a service, and in
/// both cases their service lasted less than one inter-arrival gap.
fn delivery_jet(lambda: f64, service: &DistributionSpec, vacation: &DistributionSpec, s: f64) -> Jet {
    let boost = service.one_minus_lst(lambda) / service.lst_deriv(0, lambda);
    service.jet(s + lambda) * (start_cbs_jet(lambda, vacation, s) + Jet::constant(boost))
}

// ---------------------------------------------------------------------
// Moment helpers
// ---------------------------------------------------------------------

fn mean_of(jet: Jet) -> f64 {
    -jet.deriv(1)
}

fn second_moment_of(jet: Jet) -> f64 {
    jet.deriv(2)
}

fn variance_of(jet: Jet) -> f64 {
    jet.deriv(2) - jet.deriv(1) * jet.deriv(1)
}

// =====================================================================
// Closed-form metrics with i.i.d. vacations
// =====================================================================

/// AoI, PAoI, and variance of peak age for the model under the policy.
///
/// # Mathematical Definition
///
/// For `Cbs` and `Brs`: AoI = E[I²]/(2E[I]) + E[G] + E[H],
/// PAoI = E[G] + E[I] + E[H], Var(A) = Var(G) + Var(I) + Var(H).
/// For `Cbsp`: AoI = (E[L²] + 2E[L]E[B] + E[B²])/(2(E[L]+E[B])) + E[D],
/// PAoI = E[D] + E[B] + E[L], Var(A) = Var(L) + Var(B) + Var(D).
///
/// # Errors
///
/// Fails with a numerical-inconsistency error when the flattened closed
/// forms and the component moments disagree beyond
/// [`DUAL_ROUTE_TOLERANCE`], or when a computed metric violates
/// positivity.
pub fn metrics(model: &IidVacationModel, policy: Policy) -> Result<FreshnessMetrics> {
    let comps = components(model, policy);
    let (aoi_c, paoi_c, var_c) = component_route(&comps)?;
    let lambda = model.lambda;
    let (service, vacation) = (&model.service, &model.vacation);
    let (aoi, paoi, var_peak) = match policy {
        Policy::Cbs => {
            let (aoi_t, paoi_t, var_t) = cbs_closed_forms(lambda, service, vacation);
            let paoi = reconcile("cbs paoi", paoi_t, paoi_c, 0.0)?;
            (
                reconcile("cbs aoi", aoi_t, aoi_c, 0.0)?,
                paoi,
                reconcile("cbs var_peak", var_t, var_c, paoi * paoi)?,
            )
        }
        Policy::Brs => {
            let (aoi_t, paoi_t) = brs_closed_forms(lambda, service, vacation);
            (
                reconcile("brs aoi", aoi_t, aoi_c, 0.0)?,
                reconcile("brs paoi", paoi_t, paoi_c, 0.0)?,
                var_c,
            )
        }
        Policy::Cbsp => {
            let (aoi_t, paoi_t) = cbsp_closed_forms(lambda, service, vacation);
            (
                reconcile("cbsp aoi", aoi_t, aoi_c, 0.0)?,
                reconcile("cbsp paoi", paoi_t, paoi_c, 0.0)?,
                var_c,
            )
        }
    };
    FreshnessMetrics::checked(aoi, paoi, var_peak, "vacation-queue metrics")
}

/// Enforce dual-route agreement, returning the flattened-form value.
///
/// `floor` sets the smallest scale the comparison is relative to: 0 for
/// the age metrics, paoi² for the variance, whose two routes both form a
/// difference of second moments of that magnitude.
fn reconcile(label: &'static str, flattened: f64, component: f64, floor: f64) -> Result<f64> {
    let scale = flattened.abs().max(component.abs()).max(floor).max(1e-12);
    if !flattened.is_finite()
        || !component.is_finite()
        || (flattened - component).abs() > DUAL_ROUTE_TOLERANCE * scale
    {
        return Err(Error::numeric(
            label,
            format!("closed form {flattened} vs component route {component}"),
        ));
    }
    Ok(flattened)
}

/// Metrics from component moments only.
fn component_route(comps: &ComponentLsts) -> Result<(f64, f64, f64)> {
    let service = &comps.model.service;
    let e_h = -service.lst_deriv(1, 0.0);
    let var_h = service.lst_deriv(2, 0.0) - e_h * e_h;
    match comps.policy {
        Policy::Cbs | Policy::Brs => {
            let cycle = comps.jet(Component::Cycle, 0.0)?;
            let start = comps.jet(Component::StartAge, 0.0)?;
            let e_i = mean_of(cycle);
            let aoi = second_moment_of(cycle) / (2.0 * e_i) + mean_of(start) + e_h;
            let paoi = mean_of(start) + e_i + e_h;
            let var = variance_of(start) + variance_of(cycle) + var_h;
            Ok((aoi, paoi, var))
        }
        Policy::Cbsp => {
            let serve = comps.jet(Component::ServeSpan, 0.0)?;
            let block = comps.jet(Component::VacationBlock, 0.0)?;
            let delivery = comps.jet(Component::DeliveryAge, 0.0)?;
            let (e_l, e_b) = (mean_of(serve), mean_of(block));
            let aoi = (second_moment_of(serve) + 2.0 * e_l * e_b + second_moment_of(block))
                / (2.0 * (e_l + e_b))
                + mean_of(delivery);
            let paoi = mean_of(delivery) + e_b + e_l;
            let var = variance_of(serve) + variance_of(block) + variance_of(delivery);
            Ok((aoi, paoi, var))
        }
    }
}

/// Flattened closed forms for the vacation-only buffering policy.
fn cbs_closed_forms(
    lambda: f64,
    service: &DistributionSpec,
    vacation: &DistributionSpec,
) -> (f64, f64, f64) {
    let q = vacation.one_minus_lst(lambda);
    let h1_0 = service.lst_deriv(1, 0.0);
    let h2_0 = service.lst_deriv(2, 0.0);
    let v1_0 = vacation.lst_deriv(1, 0.0);
    let v2_0 = vacation.lst_deriv(2, 0.0);
    let v1_l = vacation.lst_deriv(1, lambda);
    // V*⁽¹⁾(λ) − V*⁽¹⁾(0) and V*⁽²⁾(0) − V*⁽²⁾(λ), factored.
    let dv1 = vacation.lst_deriv_diff(1, lambda, 0.0);
    let dv2 = vacation.lst_deriv_diff(2, 0.0, lambda);
    let aoi = -(h2_0 + 2.0 * h1_0 * v1_0 / q + 2.0 * v1_0 * v1_l / (q * q) + v2_0 / q)
        / (2.0 * (h1_0 + v1_0 / q))
        + 1.0 / lambda
        + v1_l / q
        - h1_0;
    let paoi = 1.0 / lambda + dv1 / q - 2.0 * h1_0;
    let var = dv2 / q - (dv1 / q).powi(2) + 1.0 / (lambda * lambda) + 2.0 * h2_0
        - 2.0 * h1_0 * h1_0;
    (aoi, paoi, var)
}

/// Flattened closed forms (AoI, PAoI) for the policy that buffers during
/// service. Its peak-age variance has no compact flattened form and comes
/// from the component route only.
fn brs_closed_forms(
    lambda: f64,
    service: &DistributionSpec,
    vacation: &DistributionSpec,
) -> (f64, f64) {
    let q = vacation.one_minus_lst(lambda);
    let h1_0 = service.lst_deriv(1, 0.0);
    let v1_0 = vacation.lst_deriv(1, 0.0);
    let h0_l = service.lst_deriv(0, lambda);
    let h1_l = service.lst_deriv(1, lambda);
    let v0_l = vacation.lst_deriv(0, lambda);
    let v1_l = vacation.lst_deriv(1, lambda);
    let dv1 = vacation.lst_deriv_diff(1, lambda, 0.0);
    let cycle = cycle_brs_jet(lambda, service, vacation, 0.0);
    let aoi = -cycle.deriv(2) / (2.0 * cycle.deriv(1))
        + v1_l * h0_l
        + v0_l * h1_l
        + (v1_l / q) * v0_l * h0_l
        + 1.0 / lambda
        - h1_0;
    let paoi = -2.0 * h1_0 - v1_0 + 1.0 / lambda + v1_l * h0_l + v0_l * h1_l
        + h0_l * v0_l * dv1 / q;
    (aoi, paoi)
}

/// Flattened closed forms (AoI, PAoI) for the preemptive policy. Its
/// peak-age variance comes from the component route only.
fn cbsp_closed_forms(
    lambda: f64,
    service: &DistributionSpec,
    vacation: &DistributionSpec,
) -> (f64, f64) {
    let q = vacation.one_minus_lst(lambda);
    let v1_0 = vacation.lst_deriv(1, 0.0);
    let v2_0 = vacation.lst_deriv(2, 0.0);
    let v1_l = vacation.lst_deriv(1, lambda);
    let h0_l = service.lst_deriv(0, lambda);
    let h1_l = service.lst_deriv(1, lambda);
    let one_minus_h = service.one_minus_lst(lambda);
    // E[L] = (1 − H*(λ))/(λH*(λ)) and the core of E[L²].
    let mean_serve = one_minus_h / (lambda * h0_l);
    let serve_core = one_minus_h / lambda + h1_l;
    let brace = v2_0 / q + 2.0 * v1_0 * v1_l / (q * q) - 2.0 * (v1_0 / q) * mean_serve
        + (2.0 / (lambda * h0_l * h0_l)) * serve_core;
    let aoi = brace / (2.0 * (-v1_0 / q + mean_serve)) - h1_l / h0_l
        + h0_l * (1.0 / lambda + v1_l / q);
    let paoi = (one_minus_h - lambda * h1_l + h0_l * h0_l) / (lambda * h0_l)
        + (h0_l * v1_l - v1_0) / q;
    (aoi, paoi)
}

// =====================================================================
// Vacation-free specializations
// =====================================================================

/// AoI, PAoI, and variance of peak age for the zero-vacation systems.
///
/// # Errors
///
/// Rejects invalid `lambda`; fails when the flattened forms and the
/// component moments disagree beyond [`DUAL_ROUTE_TOLERANCE`].
pub fn metrics_no_vacation(
    lambda: f64,
    service: &DistributionSpec,
    system: NoVacationSystem,
) -> Result<FreshnessMetrics> {
    validate_rate("lambda", lambda)?;
    if service.is_zero() {
        return Err(Error::invalid("service", "service time must have positive mean"));
    }
    let (aoi_t, paoi_t, var_t) = match system {
        NoVacationSystem::MG11 => buffer_free_closed_forms(lambda, service),
        NoVacationSystem::MG12Star => replacement_closed_forms(lambda, service),
        NoVacationSystem::MG11Preemptive => preemptive_closed_forms(lambda, service),
    };
    let (aoi_c, paoi_c, var_c) = no_vacation_component_route(lambda, service, system);
    let aoi = reconcile("no-vacation aoi", aoi_t, aoi_c, 0.0)?;
    let paoi = reconcile("no-vacation paoi", paoi_t, paoi_c, 0.0)?;
    let var = reconcile("no-vacation var_peak", var_t, var_c, paoi * paoi)?;
    FreshnessMetrics::checked(aoi, paoi, var, "no-vacation metrics")
}

/// M/G/1/1: the cycle is an idle exponential gap plus one service, the
/// peak is service + gap + service, and there is no waiting.
fn buffer_free_closed_forms(lambda: f64, service: &DistributionSpec) -> (f64, f64, f64) {
    let h1_0 = service.lst_deriv(1, 0.0);
    let h2_0 = service.lst_deriv(2, 0.0);
    let aoi = (2.0 / (lambda * lambda) - 2.0 * h1_0 / lambda + h2_0)
        / (2.0 * (1.0 / lambda - h1_0))
        - h1_0;
    let paoi = 1.0 / lambda - 2.0 * h1_0;
    let var = 1.0 / (lambda * lambda) + 2.0 * h2_0 - 2.0 * h1_0 * h1_0;
    (aoi, paoi, var)
}

/// M/G/1/2*: the cycle is max{service, exponential gap}; waiting occurs
/// only when an arrival lands during a service.
fn replacement_closed_forms(lambda: f64, service: &DistributionSpec) -> (f64, f64, f64) {
    let h1_0 = service.lst_deriv(1, 0.0);
    let h2_0 = service.lst_deriv(2, 0.0);
    let h0_l = service.lst_deriv(0, lambda);
    let h1_l = service.lst_deriv(1, lambda);
    let h2_l = service.lst_deriv(2, lambda);
    let aoi = (0.5 * h2_0 + h0_l / (lambda * lambda) - h1_l / lambda)
        / (h0_l / lambda - h1_0)
        + 1.0 / lambda
        - h0_l / lambda
        + h1_l
        - h1_0;
    let paoi = -2.0 * h1_0 + 1.0 / lambda + h1_l;
    // Var(G) + Var(I) + Var(H) flattened over the max{H, T} cycle.
    let var = 2.0 * h2_0 - 2.0 * h1_0 * h1_0
        + 2.0 * h0_l * service.one_minus_lst(lambda) / (lambda * lambda)
        + (2.0 * h0_l / lambda) * (h1_0 + h1_l)
        + 1.0 / (lambda * lambda)
        - h2_l
        - 2.0 * h1_l / lambda
        - h1_l * h1_l;
    (aoi, paoi, var)
}

/// M/G/1/1 with preemption: peak = delivery age + exponential gap +
/// restart span; only services shorter than the next gap complete.
fn preemptive_closed_forms(lambda: f64, service: &DistributionSpec) -> (f64, f64, f64) {
    let h0_l = service.lst_deriv(0, lambda);
    let h1_l = service.lst_deriv(1, lambda);
    let h2_l = service.lst_deriv(2, lambda);
    let aoi = 1.0 / (lambda * h0_l);
    let paoi = -h1_l / h0_l + 1.0 / (lambda * h0_l);
    let var = h2_l / h0_l - (h1_l / h0_l).powi(2) + 1.0 / (lambda * h0_l).powi(2)
        + 2.0 * h1_l / (lambda * h0_l * h0_l);
    (aoi, paoi, var)
}

/// Component-moment route for the zero-vacation systems.
fn no_vacation_component_route(
    lambda: f64,
    service: &DistributionSpec,
    system: NoVacationSystem,
) -> (f64, f64, f64) {
    let e_h = -service.lst_deriv(1, 0.0);
    let var_h = service.lst_deriv(2, 0.0) - e_h * e_h;
    let (e_t, e_t2) = (1.0 / lambda, 2.0 / (lambda * lambda));
    let var_t = e_t2 - e_t * e_t;
    match system {
        NoVacationSystem::MG11 => {
            // I = T + H, G = 0, peak = H + T + H.
            let cycle = interarrival_jet(lambda, 0.0) * service.jet(0.0);
            let aoi = second_moment_of(cycle) / (2.0 * mean_of(cycle)) + e_h;
            let paoi = e_t + 2.0 * e_h;
            let var = var_t + 2.0 * var_h;
            (aoi, paoi, var)
        }
        NoVacationSystem::MG12Star => {
            // I* = H*(s) − (s/(λ+s))H*(λ+s), G* = (λ/(λ+s))(1 − H*(λ+s)) + H*(λ).
            let cycle = service.jet(0.0)
                - (Jet::constant(1.0) - interarrival_jet(lambda, 0.0)) * service.jet(lambda);
            let start = interarrival_jet(lambda, 0.0) * service.jet_one_minus(lambda)
                + Jet::constant(service.lst_deriv(0, lambda));
            let e_i = mean_of(cycle);
            let aoi = second_moment_of(cycle) / (2.0 * e_i) + mean_of(start) + e_h;
            let paoi = mean_of(start) + e_i + e_h;
            let var = variance_of(start) + variance_of(cycle) + var_h;
            (aoi, paoi, var)
        }
        NoVacationSystem::MG11Preemptive => {
            // Peak = D + T + L with D* = H*(λ+s)/H*(λ).
            let serve = serve_jet(lambda, service, 0.0);
            let delivery = service.jet(lambda).scale(1.0 / service.lst_deriv(0, lambda));
            let (e_l, e_d) = (mean_of(serve), mean_of(delivery));
            let aoi = (second_moment_of(serve) + 2.0 * e_l * e_t + e_t2)
                / (2.0 * (e_l + e_t))
                + e_d;
            let paoi = e_d + e_t + e_l;
            let var = variance_of(delivery) + var_t + variance_of(serve);
            (aoi, paoi, var)
        }
    }
}

// =====================================================================
// Peak age from waiting-time data
// =====================================================================

/// PAoI from the mean wait E[W] and the wait transform value W*(λ), for a
/// given arrival rate and service distribution.
///
/// This kernel is what couples the queue-level analysis to any process
/// that supplies waiting-time data, including the polling solver where
/// the other queues' activity plays the role of the vacations.
///
/// # Mathematical Definition
///
/// - `Cbs`:  −W*(λ)/λ + 2/λ + E[W] + 2E[H]
/// - `Brs`:  −W*(λ)/λ + 2/λ + E[W] + E[H]
/// - `Cbsp`: −H*⁽¹⁾(λ)/H*(λ) + H*(λ)(1 − W*(λ))/λ + E[W] + 1/(λH*(λ))
///
/// # Errors
///
/// Rejects invalid `lambda`, negative or non-finite `mean_wait`, and
/// `wait_lst_at_lambda` outside (0, 1]. Values up to 1 + 1e−9 are clamped
/// to 1 to absorb rounding from upstream solvers.
pub fn paoi_from_waiting(
    lambda: f64,
    service: &DistributionSpec,
    policy: Policy,
    mean_wait: f64,
    wait_lst_at_lambda: f64,
) -> Result<f64> {
    validate_rate("lambda", lambda)?;
    if !mean_wait.is_finite() || mean_wait < 0.0 {
        return Err(Error::invalid("mean_wait", format!("must be nonnegative, got {mean_wait}")));
    }
    if !(wait_lst_at_lambda > 0.0 && wait_lst_at_lambda <= 1.0 + 1e-9) {
        return Err(Error::invalid(
            "wait_lst_at_lambda",
            format!("must lie in (0, 1], got {wait_lst_at_lambda}"),
        ));
    }
    let w = wait_lst_at_lambda.min(1.0);
    let e_h = -service.lst_deriv(1, 0.0);
    Ok(match policy {
        Policy::Cbs => -w / lambda + 2.0 / lambda + mean_wait + 2.0 * e_h,
        Policy::Brs => -w / lambda + 2.0 / lambda + mean_wait + e_h,
        Policy::Cbsp => {
            let h0_l = service.lst_deriv(0, lambda);
            let h1_l = service.lst_deriv(1, lambda);
            -h1_l / h0_l + h0_l * (1.0 - w) / lambda + mean_wait + 1.0 / (lambda * h0_l)
        }
    })
}

// =====================================================================
// Tests
// =====================================================================
