//! Sampled residual statistics for law checks.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

/// One evaluated law instance; the raw material for a report.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub c1: f64,
    pub c2: f64,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// A worst-case sample retained in the report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub c1: f64,
    pub c2: f64,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Residual statistics for one law check.
///
/// `pass` holds exactly when `max_abs_residual <= tolerance` and every
/// auxiliary gate recorded through [`VerificationReport::gate`] holds.
/// Non-finite residuals (an evaluator returned NaN/inf, or 0 where the
/// codomain forbids it) are counted in `violations` and clamped to a
/// huge sentinel so that they fail the tolerance and still serialize as
/// ordinary numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub description: String,
    pub samples: usize,
    pub tolerance: f64,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
    pub violations: usize,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub worst: Vec<Counterexample>,
}

/// Sentinel replacing non-finite residuals in serialized reports.
pub const NONFINITE_SENTINEL: f64 = 1e300;

fn sanitize(x: f64) -> f64 {
    if x.is_nan() {
        NONFINITE_SENTINEL
    } else if x.is_infinite() {
        NONFINITE_SENTINEL.copysign(x)
    } else {
        x
    }
}

impl VerificationReport {
    pub fn from_outcomes(
        check: impl Into<String>,
        description: impl Into<String>,
        tolerance: f64,
        mut outcomes: Vec<Outcome>,
    ) -> Self {
        let samples = outcomes.len();
        let mut violations = 0usize;
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for o in outcomes.iter_mut() {
            if !o.residual.is_finite() {
                violations += 1;
            }
            o.residual = sanitize(o.residual).abs();
            o.lhs = sanitize(o.lhs);
            o.rhs = sanitize(o.rhs);
            sum += o.residual;
            max = max.max(o.residual);
        }
        outcomes.sort_by(|a, b| b.residual.total_cmp(&a.residual));
        let worst = outcomes
            .into_iter()
            .take(10)
            .map(|o| Counterexample {
                c1: o.c1,
                c2: o.c2,
                point: o.point,
                lhs: o.lhs,
                rhs: o.rhs,
                residual: o.residual,
            })
            .collect();
        VerificationReport {
            check: check.into(),
            description: description.into(),
            samples,
            tolerance,
            max_abs_residual: max,
            mean_abs_residual: if samples > 0 { sum / samples as f64 } else { 0.0 },
            violations,
            pass: max <= tolerance,
            metrics: BTreeMap::new(),
            worst,
        }
    }

    /// Record a named metric without affecting the pass flag.
    pub fn metric(mut self, name: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(name.into(), sanitize(value));
        self
    }

    /// Record a named auxiliary gate: `value` must stay within `tol` for
    /// the report to pass.
    pub fn gate(mut self, name: impl Into<String>, value: f64, tol: f64) -> Self {
        let name = name.into();
        let value = sanitize(value);
        self.metrics.insert(name.clone(), value);
        self.metrics.insert(format!("{name}_tol"), tol);
        if value.is_nan() || value.abs() > tol {
            self.pass = false;
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json().as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Counterexamples as delimited text: `c1,c2,point,lhs,rhs,residual`.
    pub fn write_counterexamples_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["c1", "c2", "point", "lhs", "rhs", "residual"])
            .map_err(csv_err)?;
        for ce in &self.worst {
            w.write_record([
                format!("{:.17e}", ce.c1),
                format!("{:.17e}", ce.c2),
                ce.point.clone(),
                format!("{:.17e}", ce.lhs),
                format!("{:.17e}", ce.rhs),
                format!("{:.17e}", ce.residual),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Config(format!("csv write failed: {e}"))
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[{}] {}: max {:.3e}, mean {:.3e} over {} samples (tol {:.1e}{})",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.max_abs_residual,
            self.mean_abs_residual,
            self.samples,
            self.tolerance,
            if self.violations > 0 {
                format!(", {} violations", self.violations)
            } else {
                String::new()
            }
        )?;
        if !self.description.is_empty() {
            writeln!(f, "  {}", self.description)?;
        }
        for (k, v) in &self.metrics {
            writeln!(f, "  {k} = {v:.6e}")?;
        }
        if !self.pass {
            for ce in self.worst.iter().take(3) {
                writeln!(
                    f,
                    "  worst: c1={:.6e} c2={:.6e} {} lhs={:.6e} rhs={:.6e} residual={:.3e}",
                    ce.c1, ce.c2, ce.point, ce.lhs, ce.rhs, ce.residual
                )?;
            }
        }
        Ok(())
    }
}
