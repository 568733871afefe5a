use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Current report schema version.
pub const SCHEMA: u32 = 1;

/// Number of worst points kept in a report.
pub const WITNESSES: usize = 5;

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Outcome of one named check over a grid.
///
/// `pass` holds exactly when `max_residual <= tolerance`. Residuals that could
/// not be computed are recorded as `f64::MAX` with the reason in `errors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub grid: String,
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

/// Collects grid evaluations in grid order and produces a report.
#[derive(Debug, Clone)]
pub struct ReportBuilder {
    check: String,
    grid: String,
    tolerance: f64,
    params: BTreeMap<String, Value>,
    rows: Vec<Witness>,
    errors: Vec<String>,
}

impl ReportBuilder {
    pub fn new(check: impl Into<String>, grid: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            grid: grid.into(),
            tolerance,
            params: BTreeMap::new(),
            rows: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn record(&mut self, point: Vec<f64>, lhs: f64, rhs: f64, residual: f64) {
        let residual = if residual.is_nan() { f64::MAX } else { residual.min(f64::MAX) };
        self.rows.push(Witness {
            point,
            lhs: finite(lhs),
            rhs: finite(rhs),
            residual,
        });
    }

    pub fn record_error(&mut self, point: Vec<f64>, message: impl Into<String>) {
        self.errors.push(format!("{point:?}: {}", message.into()));
        self.rows.push(Witness {
            point,
            lhs: f64::MAX,
            rhs: f64::MAX,
            residual: f64::MAX,
        });
    }

    pub fn finish(self) -> VerificationReport {
        let points = self.rows.len();
        let max_residual = self.rows.iter().map(|w| w.residual).fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..points).collect();
        // Stable sort keeps grid order among equal residuals.
        order.sort_by(|&i, &j| self.rows[j].residual.total_cmp(&self.rows[i].residual));
        let witnesses = order.into_iter().take(WITNESSES).map(|i| self.rows[i].clone()).collect();
        VerificationReport {
            schema: SCHEMA,
            check: self.check,
            params: self.params,
            grid: self.grid,
            points,
            max_residual,
            tolerance: self.tolerance,
            pass: max_residual <= self.tolerance,
            witnesses,
            errors: self.errors,
        }
    }
}

fn finite(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

/// A named group of reports, serialised as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub pass: bool,
    pub reports: Vec<VerificationReport>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, reports: Vec<VerificationReport>) -> Self {
        Self {
            schema: SCHEMA,
            suite: suite.into(),
            pass: reports.iter().all(|r| r.pass),
            reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers") + "\n"
    }
}
