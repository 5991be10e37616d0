//! Mode execution: each run mode turns a validated configuration into
//! result rows, an optional structured summary, and an exit code.
//!
//! | Mode          | Rows produced                                        |
//! |---------------|------------------------------------------------------|
//! | `analytic`    | one exact row per policy                             |
//! | `no_vacation` | one exact row per reference system                   |
//! | `polling`     | one exact peak-age row per policy and station        |
//! | `simulate`    | estimate rows with 95% half widths                   |
//! | `sweep`       | one exact row per policy and swept value             |
//! | `verify`      | paired exact and estimate rows per policy            |
//! | `dominance`   | one margin row per diagnostic                        |
//!
//! # Design Notes
//!
//! Row order is fixed at policy, then swept value, then station, so a
//! rerun with the same configuration and seed emits identical bytes.
//! Sweep points evaluate on the worker pool; results collect back in
//! axis order. Verify gates its exit code on interval containment, not
//! on the relative errors it reports.

use std::fs;

use agefresh::analytic::{metrics, metrics_no_vacation, NoVacationSystem};
use agefresh::dominance::{
    exp_service_dominance, paoi_gap_cbs_minus_brs, preemption_sufficient_condition,
    vacation_decay_margin, ExpServiceDominance, PreemptionCondition,
};
use agefresh::polling::paoi;
use agefresh::sim::{simulate_iid, simulate_polling, Estimate};
use agefresh::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_sweep, invalid, ExperimentConfig, Mode};
use crate::report::{render_csv, render_json, Row};

/// Structured summary attached to the JSON envelope by some modes.
#[derive(Debug)]
pub enum Summary {
    /// Modes whose rows carry everything.
    None,
    /// Verify-mode containment report.
    Verify(VerifyReport),
    /// Dominance-mode diagnostic report.
    Dominance(DominanceReport),
}

// =====================================================================
// Entry point
// =====================================================================

/// Run the configured mode and emit its artifacts.
///
/// Returns the process exit code: 0 on success, 4 when verify mode finds
/// an exact value outside its simulation interval.
///
/// # Errors
///
/// Propagates model validation, numerical, and output I/O failures.
pub fn execute(config: &ExperimentConfig) -> Result<i32> {
    let mut exit = 0;
    let (rows, summary) = match config.mode {
        Mode::Analytic => (analytic_rows(config)?, Summary::None),
        Mode::NoVacation => (no_vacation_rows(config)?, Summary::None),
        Mode::Polling => (polling_rows(config)?, Summary::None),
        Mode::Simulate => (simulate_rows(config)?, Summary::None),
        Mode::Sweep => (sweep_rows(config)?, Summary::None),
        Mode::Verify => {
            let (rows, report) = verify_rows(config)?;
            if !report.all_pass {
                exit = 4;
            }
            (rows, Summary::Verify(report))
        }
        Mode::Dominance => {
            let (rows, report) = dominance_rows(config)?;
            (rows, Summary::Dominance(report))
        }
    };
    emit(config, &rows, &summary)?;
    Ok(exit)
}

/// Print the effective configuration in reloadable form.
pub fn dump(config: &ExperimentConfig) -> Result<i32> {
    let text = config.dump()?;
    match &config.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn write_file(path: &str, text: &str) -> Result<()> {
    fs::write(path, text.as_bytes()).map_err(|e| invalid("out", format!("{path}: {e}")))
}

fn emit(config: &ExperimentConfig, rows: &[Row], summary: &Summary) -> Result<()> {
    let csv = render_csv(rows);
    if let Some(path) = &config.out {
        write_file(path, &csv)?;
    }
    if config.json {
        println!("{}", render_json(config, rows, summary)?);
        return Ok(());
    }
    if config.out.is_none() {
        print!("{csv}");
    }
    match summary {
        Summary::Verify(report) => print_verify(report),
        Summary::Dominance(report) => print_dominance(report),
        Summary::None => {}
    }
    Ok(())
}

// =====================================================================
// Exact modes
// =====================================================================

fn analytic_rows(config: &ExperimentConfig) -> Result<Vec<Row>> {
    let model = config.require_queue()?.model()?;
    let mut rows = Vec::new();
    for &policy in &config.policies {
        let m = metrics(&model, policy)?;
        let mut row = Row::new(policy.name(), "analytic");
        row.aoi = Some(m.aoi);
        row.paoi = Some(m.paoi);
        row.var_peak = Some(m.var_peak);
        rows.push(row);
    }
    Ok(rows)
}

fn no_vacation_rows(config: &ExperimentConfig) -> Result<Vec<Row>> {
    let queue = config.require_queue()?;
    let mut rows = Vec::new();
    for system in NoVacationSystem::ALL {
        let m = metrics_no_vacation(queue.lambda, &queue.service, system)?;
        let mut row = Row::new(system.name(), "no_vacation");
        row.aoi = Some(m.aoi);
        row.paoi = Some(m.paoi);
        row.var_peak = Some(m.var_peak);
        rows.push(row);
    }
    Ok(rows)
}

fn polling_rows(config: &ExperimentConfig) -> Result<Vec<Row>> {
    let model = config.require_polling()?.model()?;
    let mut rows = Vec::new();
    for &policy in &config.policies {
        let result = paoi(&model, policy)?;
        for (station, &peak) in result.per_queue.iter().enumerate() {
            let mut row = Row::new(policy.name(), "polling");
            row.queue = Some(station + 1);
            row.paoi = Some(peak);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn sweep_rows(config: &ExperimentConfig) -> Result<Vec<Row>> {
    let queue = config.require_queue()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| invalid("sweep", "sweep mode needs a [sweep] section"))?;
    let values = sweep.resolve_values()?;
    let mut rows = Vec::new();
    for &policy in &config.policies {
        let points: Vec<Row> = values
            .par_iter()
            .map(|&value| -> Result<Row> {
                let varied = apply_sweep(&sweep.parameter, value, queue)?;
                let m = metrics(&varied.model()?, policy)?;
                let mut row = Row::new(policy.name(), "sweep");
                row.param_name = Some(sweep.parameter.clone());
                row.param_value = Some(value);
                row.aoi = Some(m.aoi);
                row.paoi = Some(m.paoi);
                row.var_peak = Some(m.var_peak);
                Ok(row)
            })
            .collect::<Result<Vec<Row>>>()?;
        rows.extend(points);
    }
    Ok(rows)
}

// =====================================================================
// Simulation modes
// =====================================================================

fn estimate_cells(row: &mut Row, aoi: Estimate, paoi: Estimate, var_peak: Estimate) {
    row.aoi = Some(aoi.mean);
    row.paoi = Some(paoi.mean);
    row.var_peak = Some(var_peak.mean);
    row.ci_aoi = Some(aoi.half_width_95);
    row.ci_paoi = Some(paoi.half_width_95);
    row.ci_var = Some(var_peak.half_width_95);
}

fn simulate_rows(config: &ExperimentConfig) -> Result<Vec<Row>> {
    let sim_config = config.sim.unwrap_or_default().build()?;
    let mut rows = Vec::new();
    if let Some(polling) = &config.polling {
        let model = polling.model()?;
        for &policy in &config.policies {
            let stations = simulate_polling(&model, policy, &sim_config)?;
            for (station, estimates) in stations.iter().enumerate() {
                let mut row = Row::new(policy.name(), "simulate");
                row.queue = Some(station + 1);
                estimate_cells(&mut row, estimates.aoi, estimates.paoi, estimates.var_peak);
                rows.push(row);
            }
        }
    } else {
        let model = config.require_queue()?.model()?;
        for &policy in &config.policies {
            let estimates = simulate_iid(&model, policy, &sim_config)?;
            let mut row = Row::new(policy.name(), "simulate");
            estimate_cells(&mut row, estimates.aoi, estimates.paoi, estimates.var_peak);
            rows.push(row);
        }
    }
    Ok(rows)
}

// =====================================================================
// Verify mode
// =====================================================================

/// One metric compared between the exact form and the simulation.
#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    /// Metric name: `aoi`, `paoi`, or `var_peak`.
    pub metric: &'static str,
    /// Exact value.
    pub exact: f64,
    /// Simulation point estimate.
    pub simulated: f64,
    /// 95% half width around the estimate.
    pub half_width_95: f64,
    /// `|simulated - exact| / |exact|`.
    pub rel_err: f64,
    /// Whether the interval contains the exact value.
    pub ci_pass: bool,
}

/// All checks for one policy.
#[derive(Debug, Serialize)]
pub struct VerifyPolicy {
    /// Policy name.
    pub policy: &'static str,
    /// Per-metric comparisons.
    pub checks: Vec<VerifyCheck>,
}

/// Full verify-mode outcome.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    /// Per-policy comparisons in output order.
    pub policies: Vec<VerifyPolicy>,
    /// Checks whose interval contained the exact value.
    pub passed: usize,
    /// Total checks.
    pub total: usize,
    /// Whether every interval contained its exact value.
    pub all_pass: bool,
}

fn check(metric: &'static str, exact: f64, estimate: Estimate) -> VerifyCheck {
    VerifyCheck {
        metric,
        exact,
        simulated: estimate.mean,
        half_width_95: estimate.half_width_95,
        rel_err: (estimate.mean - exact).abs() / exact.abs().max(f64::MIN_POSITIVE),
        ci_pass: estimate.contains(exact),
    }
}

fn verify_rows(config: &ExperimentConfig) -> Result<(Vec<Row>, VerifyReport)> {
    let model = config.require_queue()?.model()?;
    let sim_config = config.sim.unwrap_or_default().build()?;
    let mut rows = Vec::new();
    let mut policies = Vec::new();
    for &policy in &config.policies {
        let exact = metrics(&model, policy)?;
        let estimates = simulate_iid(&model, policy, &sim_config)?;

        let mut exact_row = Row::new(policy.name(), "analytic");
        exact_row.aoi = Some(exact.aoi);
        exact_row.paoi = Some(exact.paoi);
        exact_row.var_peak = Some(exact.var_peak);
        rows.push(exact_row);

        let mut estimate_row = Row::new(policy.name(), "simulate");
        estimate_cells(&mut estimate_row, estimates.aoi, estimates.paoi, estimates.var_peak);
        rows.push(estimate_row);

        policies.push(VerifyPolicy {
            policy: policy.name(),
            checks: vec![
                check("aoi", exact.aoi, estimates.aoi),
                check("paoi", exact.paoi, estimates.paoi),
                check("var_peak", exact.var_peak, estimates.var_peak),
            ],
        });
    }
    let total = policies.iter().map(|p| p.checks.len()).sum();
    let passed = policies
        .iter()
        .flat_map(|p| p.checks.iter())
        .filter(|c| c.ci_pass)
        .count();
    let report = VerifyReport {
        policies,
        passed,
        total,
        all_pass: passed == total,
    };
    Ok((rows, report))
}

fn print_verify(report: &VerifyReport) {
    for policy in &report.policies {
        for check in &policy.checks {
            println!(
                "verify {:<4} {:<8} exact={:.6} sim={:.6} half_width={:.6} rel_err={:.4}% {}",
                policy.policy,
                check.metric,
                check.exact,
                check.simulated,
                check.half_width_95,
                100.0 * check.rel_err,
                if check.ci_pass { "PASS" } else { "FAIL" },
            );
        }
    }
    println!(
        "verify: {} ({}/{} metrics inside the 95% confidence intervals)",
        if report.all_pass { "PASS" } else { "FAIL" },
        report.passed,
        report.total,
    );
}

// =====================================================================
// Dominance mode
// =====================================================================

/// Policy-comparison diagnostics for one queue model.
#[derive(Debug, Serialize)]
pub struct DominanceReport {
    /// Mean peak-age excess of the rejecting policy over the replacing one.
    pub paoi_gap_cbs_minus_brs: f64,
    /// Preemption gaps; present only for exponential service.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp_service: Option<ExpServiceDominance>,
    /// Mean-service sufficient condition for preemption to help.
    pub preemption: PreemptionCondition,
    /// Nonnegative margin behind the vacation-gated start age.
    pub vacation_decay_margin: f64,
}

/// Transform arguments probed by the preemption condition. Capped at 1e2
/// so heavy-tailed transforms stay in range.
fn preemption_grid() -> Vec<f64> {
    let (start, stop, count) = (1e-2f64, 1e2f64, 41);
    (0..count)
        .map(|i| (start.ln() + i as f64 / (count - 1) as f64 * (stop.ln() - start.ln())).exp())
        .collect()
}

fn dominance_rows(config: &ExperimentConfig) -> Result<(Vec<Row>, DominanceReport)> {
    let model = config.require_queue()?.model()?;
    let gap = paoi_gap_cbs_minus_brs(&model)?;
    let exp_service = match exp_service_dominance(&model) {
        Ok(gaps) => Some(gaps),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let preemption = preemption_sufficient_condition(model.service(), &preemption_grid())?;
    let decay = vacation_decay_margin(model.vacation(), model.lambda())?;

    let margin_row = |name: &str, value: f64| {
        let mut row = Row::new("", "dominance");
        row.param_name = Some(name.to_string());
        row.param_value = Some(value);
        row
    };
    let mut rows = vec![margin_row("paoi_gap_cbs_minus_brs", gap)];
    if let Some(gaps) = &exp_service {
        rows.push(margin_row("exp_service_aoi_gap", gaps.aoi_gap));
        rows.push(margin_row("exp_service_paoi_gap", gaps.paoi_gap));
    }
    rows.push(margin_row("preemption_margin", preemption.margin));
    rows.push(margin_row("vacation_decay_margin", decay));

    let report = DominanceReport {
        paoi_gap_cbs_minus_brs: gap,
        exp_service,
        preemption,
        vacation_decay_margin: decay,
    };
    Ok((rows, report))
}

fn print_dominance(report: &DominanceReport) {
    println!("paoi_gap_cbs_minus_brs = {:.9}", report.paoi_gap_cbs_minus_brs);
    match &report.exp_service {
        Some(gaps) => println!(
            "exp_service gaps: aoi = {:.9}, paoi = {:.9}",
            gaps.aoi_gap, gaps.paoi_gap
        ),
        None => println!("exp_service gaps: skipped (service is not exponential)"),
    }
    let verdict = match report.preemption.holds_for_all_s {
        Some(true) => "holds for all s",
        Some(false) => "fails for some s",
        None => "unresolved off the grid",
    };
    println!(
        "preemption condition: margin = {:.9}, holds_on_grid = {}, {}",
        report.preemption.margin, report.preemption.holds_on_grid, verdict,
    );
    println!("vacation_decay_margin = {:.9}", report.vacation_decay_margin);
}

// =====================================================================
// Tests
// =====================================================================
