//! Report schema and aligned-text rendering derived from it.

use edlab::obstruct::{ObstructionVerdict, Verdict};
use edlab::report::{Check, Status};
use edlab::suites::{ClosedCoefficient, ConstantsRow, Suite, SuiteConfig};
use serde::Serialize;
use std::fmt::Write;

pub const TOOL: &str = "edlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Effective configuration of a `verify` run. The worker count is omitted:
/// results do not depend on it.
#[derive(Debug, Serialize)]
pub struct RunEcho {
    pub command: &'static str,
    pub suite: Suite,
    pub n: usize,
    pub seed: u64,
    /// `null` when every check uses its default tolerance.
    pub tol: Option<f64>,
    pub mc_samples_integrals: usize,
    pub mc_samples_obstruction: usize,
    pub mc_samples_classify: usize,
    pub grid: usize,
    pub fixtures: Vec<&'static str>,
    pub matrices: usize,
    pub rigidity_trials: usize,
    pub pairs: usize,
}

impl RunEcho {
    pub fn verify(suite: Suite, cfg: &SuiteConfig) -> Self {
        RunEcho {
            command: "verify",
            suite,
            n: cfg.n,
            seed: cfg.seed,
            tol: cfg.tol,
            mc_samples_integrals: cfg.integrals_samples(),
            mc_samples_obstruction: cfg.obstruction_samples(),
            mc_samples_classify: cfg.classify_samples(),
            grid: cfg.grid,
            fixtures: cfg.fixtures.iter().map(|f| f.name()).collect(),
            matrices: cfg.matrices,
            rigidity_trials: cfg.rigidity_trials,
            pairs: cfg.pairs,
        }
    }
}

#[derive(Debug, Default, Serialize, PartialEq, Eq)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunEcho,
    pub summary: Summary,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(config: RunEcho, checks: Vec<Check>) -> Self {
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Inconclusive => summary.inconclusive += 1,
            }
        }
        Report { tool: TOOL, version: VERSION, config, summary, checks }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0 && self.summary.inconclusive == 0
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Inconclusive => "inconclusive",
    }
}

pub fn report_table(r: &Report) -> String {
    let width = r.checks.iter().map(|c| c.check_name.chars().count()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(s, "{TOOL} {VERSION}  verify --suite {} --n {} --seed {}", r.config.suite.name(), r.config.n, r.config.seed);
    let _ = writeln!(s, "{:<12} {:<width$} {:>12} {:>10} {:>9} {:>9}", "status", "check", "value", "tolerance", "samples", "time[s]");
    for c in &r.checks {
        let samples = c.samples.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<12} {:<width$} {:>12.3e} {:>10.1e} {:>9} {:>9.3}",
            status_word(c.status),
            c.check_name,
            c.residual_or_zscore,
            c.tolerance,
            samples,
            c.wall_time
        );
    }
    let _ = writeln!(s, "{} passed, {} failed, {} inconclusive", r.summary.pass, r.summary.fail, r.summary.inconclusive);
    s
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::IntegrableToSecondOrder => "integrable_to_second_order",
        Verdict::Obstructed => "obstructed",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn verdict_table(matrix_file: &str, v: &ObstructionVerdict) -> String {
    let max_z = v.zscores.iter().copied().fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "{:<22} {}", "matrix", matrix_file);
    let _ = writeln!(s, "{:<22} {}", "n", v.n);
    let _ = writeln!(s, "{:<22} {}", "verdict", verdict_word(v.verdict));
    let _ = writeln!(s, "{:<22} {}", "in_hyperquadric", v.in_hyperquadric);
    let _ = writeln!(s, "{:<22} {:.3e}", "hyperquadric_residual", v.hyperquadric_residual);
    let _ = writeln!(s, "{:<22} {:.6e} ± {:.1e}", "P_direct", v.p_direct.mean, v.p_direct.stderr);
    let _ = writeln!(s, "{:<22} {:.6e} ± {:.1e}", "P_closed", v.p_closed.value.mean, v.p_closed.value.stderr);
    let _ = writeln!(s, "{:<22} {:.2}", "max pairing z", max_z);
    for d in &v.diagnostics {
        let _ = writeln!(s, "{:<22} {}", "note", d);
    }
    s
}

pub fn constants_table(rows: &[ConstantsRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>3} {:>3} {:>12} {:>10} {:>10} {:>10} {:>12} {:>12} {:>14}",
        "n", "m", "E", "Λ_Q/E", "Λ_𝔼/E", "c1", "c2", "c3/E⁴", "P coeff/E⁴"
    );
    for r in rows {
        let c3 = r.c3_over_e4.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        let coeff = match &r.closed_coefficient_over_e4 {
            ClosedCoefficient::OverE4(v) => format!("{v:.6}"),
            ClosedCoefficient::Marker(m) => m.to_string(),
        };
        let _ = writeln!(
            s,
            "{:>3} {:>3} {:>12.6} {:>10.6} {:>10.6} {:>10.4} {:>12.6} {:>12} {:>14}",
            r.n, r.m, r.e, r.lambda_q_over_e, r.lambda_e_over_e, r.c1, r.c2, c3, coeff
        );
    }
    s
}
