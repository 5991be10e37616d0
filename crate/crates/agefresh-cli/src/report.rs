//! Result rows and their CSV and JSON renderings.
//!
//! Every mode reduces to a flat list of [`Row`] values sharing one column
//! set, so downstream tooling reads a single table shape:
//!
//! | Column        | Meaning                                             |
//! |---------------|-----------------------------------------------------|
//! | `policy`      | policy or reference-system name; blank if n/a      |
//! | `mode`        | how the row was produced (`analytic`, `simulate`, …)|
//! | `param_name`  | swept parameter or diagnostic name; blank if n/a    |
//! | `param_value` | swept value or diagnostic margin; blank if n/a      |
//! | `queue`       | 1-based station number; blank for single queues     |
//! | `aoi`         | time-average age                                    |
//! | `paoi`        | mean peak age                                       |
//! | `var_peak`    | variance of the peak age                            |
//! | `ci_*`        | 95% half widths; blank for exact rows               |
//!
//! # Design Notes
//!
//! Unset cells serialize as empty CSV fields and JSON nulls. Floats use
//! the shortest representation that parses back to the same value, so a
//! rerun with the same configuration and seed is byte-identical.

use agefresh::Result;
use serde::Serialize;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::run::Summary;

/// Header line of every CSV artifact.
pub const CSV_HEADER: &str = "policy,mode,param_name,param_value,queue,aoi,paoi,var_peak,ci_aoi,ci_paoi,ci_var";

/// One output record; unset fields render blank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    /// Policy or reference-system name.
    pub policy: String,
    /// How the row was produced.
    pub mode: &'static str,
    /// Swept parameter or diagnostic name.
    pub param_name: Option<String>,
    /// Swept value or diagnostic margin.
    pub param_value: Option<f64>,
    /// 1-based station number.
    pub queue: Option<usize>,
    /// Time-average age.
    pub aoi: Option<f64>,
    /// Mean peak age.
    pub paoi: Option<f64>,
    /// Variance of the peak age.
    pub var_peak: Option<f64>,
    /// 95% half width around `aoi`.
    pub ci_aoi: Option<f64>,
    /// 95% half width around `paoi`.
    pub ci_paoi: Option<f64>,
    /// 95% half width around `var_peak`.
    pub ci_var: Option<f64>,
}

impl Row {
    /// A row with every optional cell blank.
    pub fn new(policy: impl Into<String>, mode: &'static str) -> Self {
        Row {
            policy: policy.into(),
            mode,
            param_name: None,
            param_value: None,
            queue: None,
            aoi: None,
            paoi: None,
            var_peak: None,
            ci_aoi: None,
            ci_paoi: None,
            ci_var: None,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.mode,
            self.param_name.as_deref().unwrap_or(""),
            cell_f64(self.param_value),
            cell_usize(self.queue),
            cell_f64(self.aoi),
            cell_f64(self.paoi),
            cell_f64(self.var_peak),
            cell_f64(self.ci_aoi),
            cell_f64(self.ci_paoi),
            cell_f64(self.ci_var),
        )
    }
}

fn cell_f64(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

fn cell_usize(value: Option<usize>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Render the header plus one line per row.
pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    mode: &'a str,
    rows: &'a [Row],
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<&'a crate::run::VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dominance: Option<&'a crate::run::DominanceReport>,
}

/// Render the machine-readable envelope for `--json` runs.
pub fn render_json(config: &ExperimentConfig, rows: &[Row], summary: &Summary) -> Result<String> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        mode: config.mode.name(),
        rows,
        verify: match summary {
            Summary::Verify(report) => Some(report),
            _ => None,
        },
        dominance: match summary {
            Summary::Dominance(report) => Some(report),
            _ => None,
        },
    };
    serde_json::to_string_pretty(&envelope)
        .map_err(|e| agefresh::Error::Parse(format!("serialize envelope: {e}")))
}

// =====================================================================
// Tests
// =====================================================================
