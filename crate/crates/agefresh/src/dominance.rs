//! Programmatic checks of the policy-comparison guarantees: which
//! buffering policy delivers fresher information, and under exactly what
//! conditions the comparison is provable.
//!
//! | Operation | Comparison |
//! |-----------|------------|
//! | [`paoi_gap_cbs_minus_brs`] | buffering from service start never worsens PAoI |
//! | [`exp_service_dominance`] | with exponential service, preemption never worsens AoI or PAoI |
//! | [`preemption_sufficient_condition`] | mean-service test `E[H] ≥ (1 − H*(s))/(sH*(s))` that guarantees preemption helps PAoI |
//! | [`vacation_decay_margin`] | nonnegativity of the mean start age, valid for every vacation distribution |
//!
//! # Design Notes
//!
//! - The sufficient condition quantifies over all s > 0; a finite grid can
//!   only semi-decide it. The report therefore separates grid semantics
//!   (`holds_on_grid`, worst `margin`) from the exact classification
//!   (`holds_for_all_s`), which is filled in only for the families where
//!   the condition resolves analytically.
//! - Gap functions return signed values rather than booleans so callers
//!   can see how far apart the policies are, not just their order.

use crate::analytic::{metrics, validate_rate, IidVacationModel, Policy};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use serde::Serialize;

/// PAoI under vacation-only buffering minus PAoI under buffering from
/// service start, for the same model. Nonnegative for every model with
/// i.i.d. vacations.
///
/// # Errors
///
/// Propagates metric-evaluation failures.
pub fn paoi_gap_cbs_minus_brs(model: &IidVacationModel) -> Result<f64> {
    Ok(metrics(model, Policy::Cbs)?.paoi - metrics(model, Policy::Brs)?.paoi)
}

/// AoI and PAoI advantages of preemption under exponential service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpServiceDominance {
    /// AoI without preemption minus AoI with preemption.
    pub aoi_gap: f64,
    /// PAoI without preemption minus PAoI with preemption.
    pub paoi_gap: f64,
}

/// Both freshness gaps between the vacation-only policy and its
/// preemptive variant. With exponential service both gaps are guaranteed
/// nonnegative; for other service families preemption can hurt, so the
/// operation is scoped to exponential service.
///
/// # Errors
///
/// Rejects models whose service distribution is not exponential.
pub fn exp_service_dominance(model: &IidVacationModel) -> Result<ExpServiceDominance> {
    if !matches!(model.service(), DistributionSpec::Exponential { .. }) {
        return Err(Error::Unsupported(format!(
            "exp_service_dominance requires exponential service, got {}",
            model.service()
        )));
    }
    let base = metrics(model, Policy::Cbs)?;
    let preemptive = metrics(model, Policy::Cbsp)?;
    Ok(ExpServiceDominance {
        aoi_gap: base.aoi - preemptive.aoi,
        paoi_gap: base.paoi - preemptive.paoi,
    })
}

/// Report of the mean-service sufficient condition for preemption to
/// improve PAoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreemptionCondition {
    /// Whether `E[H] ≥ (1 − H*(s))/(sH*(s))` held (within −1e−12 noise) at
    /// every grid point.
    pub holds_on_grid: bool,
    /// Minimum over the grid of `E[H] − (1 − H*(s))/(sH*(s))`.
    pub margin: f64,
    /// Exact classification over all s > 0 where the family admits one:
    /// exponential always holds with equality, gamma holds iff shape ≤ 1,
    /// deterministic always fails. `None` would mark a family with no
    /// analytic resolution.
    pub holds_for_all_s: Option<bool>,
}

/// Evaluate `E[H] ≥ (1 − H*(s))/(sH*(s))` on a grid of transform
/// arguments. When the condition holds for all s > 0, the preemptive
/// policy's PAoI is no greater than the vacation-only policy's for every
/// arrival rate and vacation distribution.
///
/// # Mathematical Definition
///
/// `(1 − H*(s))/(sH*(s))` is the mean time from a service start to the
/// next completion when attempts restart at rate-s exponential marks, so
/// the condition asks that restarts never slow delivery down on average.
/// For exponential service it is an identity: both sides equal the mean.
/// For gamma service, `(1+βs)^α ⋛ 1+αβs` splits at shape α = 1. For
/// deterministic service the left side stays at d while the right side
/// `(e^{sd} − 1)/s` strictly exceeds d, so the condition fails everywhere.
///
/// # Errors
///
/// Rejects an empty grid or non-finite/non-positive grid points.
pub fn preemption_sufficient_condition(
    service: &DistributionSpec,
    s_grid: &[f64],
) -> Result<PreemptionCondition> {
    if s_grid.is_empty() {
        return Err(Error::invalid("s_grid", "grid must be nonempty"));
    }
    for &s in s_grid {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::invalid("s_grid", format!("grid points must be positive, got {s}")));
        }
    }
    let holds_for_all_s = Some(match service {
        DistributionSpec::Exponential { .. } => true,
        DistributionSpec::Gamma { shape, .. } => *shape <= 1.0,
        DistributionSpec::Deterministic { .. } => false,
    });
    // Equality case: the margin is identically zero, so do not let grid
    // round-off manufacture a sign.
    if matches!(service, DistributionSpec::Exponential { .. }) {
        return Ok(PreemptionCondition { holds_on_grid: true, margin: 0.0, holds_for_all_s });
    }
    let mean = service.mean();
    let margin = s_grid
        .iter()
        .map(|&s| mean - service.one_minus_lst(s) / (s * service.lst_deriv(0, s)))
        .fold(f64::INFINITY, f64::min);
    Ok(PreemptionCondition { holds_on_grid: margin >= -1e-12, margin, holds_for_all_s })
}

/// The margin `V*⁽¹⁾(λ)/(1 − V*(λ)) + 1/λ`, nonnegative for every
/// distribution V and rate λ: it equals the mean start age E[G] of the
/// vacation-gated policies, the expectation of a nonnegative span.
///
/// # Errors
///
/// Rejects a non-finite or non-positive `lambda`.
pub fn vacation_decay_margin(vacation: &DistributionSpec, lambda: f64) -> Result<f64> {
    validate_rate("lambda", lambda)?;
    Ok(vacation.lst_deriv(1, lambda) / vacation.one_minus_lst(lambda) + 1.0 / lambda)
}

// =====================================================================
// Tests
// =====================================================================
