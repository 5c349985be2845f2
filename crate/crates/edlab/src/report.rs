//! Check records shared by every verification suite.

use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// One verified identity. `residual_or_zscore` is a residual for deterministic
/// checks and a z-score for Monte Carlo checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_name: String,
    #[serde(rename = "paper_ref")]
    pub reference: String,
    pub status: Status,
    pub residual_or_zscore: f64,
    pub tolerance: f64,
    pub samples: Option<usize>,
    pub wall_time: f64,
    /// Monte Carlo estimate behind a z-score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Ordered collection of checks produced by one checker.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a deterministic residual; NaN fails.
    pub fn residual(&mut self, name: &str, reference: &str, residual: f64, tol: f64) -> &mut Check {
        let status = if residual.is_finite() && residual < tol { Status::Pass } else { Status::Fail };
        self.push(Check {
            check_name: name.to_string(),
            reference: reference.to_string(),
            status,
            residual_or_zscore: residual,
            tolerance: tol,
            samples: None,
            wall_time: 0.0,
            estimate: None,
            stderr: None,
            seed: None,
        })
    }

    /// Records a statistical check passing when `zscore < threshold`.
    pub fn zscore(&mut self, name: &str, reference: &str, zscore: f64, threshold: f64, samples: usize) -> &mut Check {
        let status = if zscore.is_finite() && zscore < threshold { Status::Pass } else { Status::Fail };
        self.push(Check {
            check_name: name.to_string(),
            reference: reference.to_string(),
            status,
            residual_or_zscore: zscore,
            tolerance: threshold,
            samples: Some(samples),
            wall_time: 0.0,
            estimate: None,
            stderr: None,
            seed: None,
        })
    }

    /// Records a boolean outcome as residual 0 (true) or 1 (false).
    pub fn flag(&mut self, name: &str, reference: &str, ok: bool) -> &mut Check {
        self.residual(name, reference, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn push(&mut self, check: Check) -> &mut Check {
        self.checks.push(check);
        self.checks.last_mut().expect("just pushed")
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }

    /// Appends `prefix/` to every check name.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.check_name = format!("{prefix}/{}", c.check_name);
        }
        self
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    /// Largest residual among checks whose name starts with `prefix`.
    pub fn max_residual(&self, prefix: &str) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.check_name.starts_with(prefix))
            .map(|c| c.residual_or_zscore)
            .fold(0.0, f64::max)
    }

    /// Merges checks with equal names, keeping the worst residual.
    pub fn worst_by_name(&self) -> CheckReport {
        let mut out: Vec<Check> = Vec::new();
        for c in &self.checks {
            match out.iter_mut().find(|o| o.check_name == c.check_name) {
                Some(o) => {
                    let wall = o.wall_time + c.wall_time;
                    if severity(c) > severity(o) {
                        *o = c.clone();
                    }
                    o.wall_time = wall;
                }
                None => out.push(c.clone()),
            }
        }
        CheckReport { checks: out }
    }
}

fn severity(c: &Check) -> (bool, f64) {
    let r = if c.residual_or_zscore.is_nan() { f64::INFINITY } else { c.residual_or_zscore };
    (!c.passed(), r)
}

/// Runs `f` and stamps its elapsed seconds on every produced check.
pub fn timed(f: impl FnOnce() -> CheckReport) -> CheckReport {
    let start = Instant::now();
    let mut rep = f();
    let secs = start.elapsed().as_secs_f64();
    let n = rep.checks.len().max(1) as f64;
    for c in &mut rep.checks {
        c.wall_time = secs / n;
    }
    rep
}

/// Max-abs difference scaled by `max(1, max|lhs|, max|rhs|)`.
pub fn rel_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    assert_eq!(lhs.len(), rhs.len(), "residual operands differ in length");
    let mut diff = 0.0f64;
    let mut scale = 1.0f64;
    for (a, b) in lhs.iter().zip(rhs) {
        diff = diff.max((a - b).abs());
        scale = scale.max(a.abs()).max(b.abs());
    }
    if diff.is_nan() {
        f64::NAN
    } else {
        diff / scale
    }
}

/// Max-abs difference.
pub fn abs_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    assert_eq!(lhs.len(), rhs.len(), "residual operands differ in length");
    lhs.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, |m, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        let mut r = CheckReport::new();
        r.residual("x", "y", f64::NAN, 1.0);
        assert!(!r.all_pass());
    }

    #[test]
    fn relative_residual_floors_scale_at_one() {
        assert_eq!(rel_residual(&[1e-3], &[0.0]), 1e-3);
        assert_eq!(rel_residual(&[100.0], &[99.0]), 0.01);
    }

    #[test]
    fn worst_by_name_keeps_failure() {
        let mut r = CheckReport::new();
        r.residual("a", "", 0.1, 1.0);
        r.residual("a", "", 2.0, 1.0);
        r.residual("a", "", 0.5, 1.0);
        let w = r.worst_by_name();
        assert_eq!(w.checks.len(), 1);
        assert_eq!(w.checks[0].residual_or_zscore, 2.0);
        assert!(!w.all_pass());
    }
}
