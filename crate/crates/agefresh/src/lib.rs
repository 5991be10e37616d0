//! Exact information-freshness metrics for single-buffer queues whose server
//! takes vacations, plus a discrete-event simulator that cross-checks every
//! closed form.
//!
//! The library computes the time-average age of information (AoI), the
//! expected peak age (PAoI), and the variance of peak age for an M/G/1-type
//! source with a one-packet buffer under three buffer policies, for i.i.d.
//! vacations; exact per-queue PAoI for Markovian polling systems (where each
//! queue sees the other queues' service as non-i.i.d. vacations); dominance
//! diagnostics between the policies; and simulation estimates with
//! batch-means confidence intervals.

pub mod analytic;
pub mod distributions;
pub mod dominance;
pub mod error;
mod jet;
pub mod polling;
pub mod sim;

pub use analytic::{
    components, metrics, metrics_no_vacation, paoi_from_waiting, vacation_block_lst, Component,
    ComponentLsts, FreshnessMetrics, IidVacationModel, NoVacationSystem, Policy, VacationBlockLst,
};
pub use distributions::{DistributionSpec, LstQuery};
pub use dominance::{
    exp_service_dominance, paoi_gap_cbs_minus_brs, preemption_sufficient_condition,
    vacation_decay_margin, ExpServiceDominance, PreemptionCondition,
};
pub use error::{Error, Result};
pub use polling::{
    build_routing, gamma_rates, mean_waiting, paoi, solve_boundary, solve_derivatives,
    stationary, tilde_coefficients, BoundaryTable, DerivativeTable, PollingModel, PollingPaoi,
    RoutingScheme, TildeCoefficients, MAX_QUEUES,
};
pub use sim::{
    simulate_iid, simulate_iid_trace, simulate_polling, simulate_polling_trace, trace_metrics,
    AgeTrace, Estimate, SimConfig, SimEstimates, TraceMetrics,
};
