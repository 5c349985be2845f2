//! Acceptance run: one line per criterion, nonzero exit if any fails.

use edlab::chart_calc::checks::basis;
use edlab::chart_calc::{
    gauge_check, koiso_check, variation_first, variation_second, weitzenboeck_check, ChartMetric, FieldKind, FieldSpec,
    Fixture, GridQuadrature,
};
use edlab::grassmann_model::check_model;
use edlab::lie_core::{hyperquadric_residual, hyperquadric_sample, vanc_odd_check};
use edlab::report::CheckReport;
use edlab::suites::{run_suite, Suite, SuiteConfig};
use edlab::tensor_alg::checks::check_kraines;
use edlab::tensor_alg::HermitianModel;
use edlab::{GrassmannModel, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn from_report(rep: &CheckReport) -> Self {
        let failures = rep.failures();
        let worst = rep
            .checks
            .iter()
            .max_by(|a, b| a.residual_or_zscore.total_cmp(&b.residual_or_zscore))
            .map(|c| format!("largest {} = {:.2e} (tol {:.0e})", c.check_name, c.residual_or_zscore, c.tolerance))
            .unwrap_or_default();
        let detail = match failures.first() {
            Some(f) => format!("{} checks, {} failing, first {} = {:.3e} (tol {:.1e})", rep.checks.len(), failures.len(), f.check_name, f.residual_or_zscore, f.tolerance),
            None => format!("{} checks, {worst}", rep.checks.len()),
        };
        Outcome { pass: failures.is_empty() && !rep.checks.is_empty(), detail }
    }
}

fn sym(metric: &ChartMetric, rng: &mut ChaCha8Rng) -> FieldSpec {
    FieldSpec::random(FieldKind::Symmetric, metric.dim, basis(metric), 1.0, rng)
}

fn one_form(metric: &ChartMetric, rng: &mut ChaCha8Rng) -> FieldSpec {
    FieldSpec::random(FieldKind::OneForm, metric.dim, basis(metric), 1.0, rng)
}

fn algebraic_constants() -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    for n in [2, 3] {
        let q = HermitianModel::<f64>::quaternionic_standard(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + n as u64);
        rep.extend(check_kraines(&q, &mut rng, 1e-10)?.prefixed(&format!("n{n}")));
        rep.extend(check_model(&GrassmannModel::build(n)?, 1e-10).prefixed(&format!("n{n}")));
    }
    Ok(rep)
}

fn weitzenboeck() -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    for fx in [Fixture::Torus3, Fixture::Sphere3] {
        let metric = ChartMetric::new(fx)?;
        let pts = metric.random_points(20, SEED);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (h, alpha) = (sym(&metric, &mut rng), one_form(&metric, &mut rng));
        rep.extend(weitzenboeck_check(&metric, &h, &alpha, &pts, 1e-7)?.prefixed(fx.name()));
    }
    Ok(rep)
}

fn first_variation() -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    for fx in [Fixture::Torus3, Fixture::Sphere3] {
        let metric = ChartMetric::new(fx)?;
        let pts = metric.random_points(20, SEED + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
        rep.extend(variation_first(&metric, &sym(&metric, &mut rng), &pts, 1e-8)?.prefixed(fx.name()));
        rep.extend(gauge_check(&metric, &one_form(&metric, &mut rng), &pts, 1e-8)?.prefixed(fx.name()));
    }
    Ok(rep)
}

fn second_variation() -> Result<CheckReport> {
    let metric = ChartMetric::new(Fixture::Torus3)?;
    let grid = GridQuadrature::new(9, 3)?;
    let pts = metric.random_points(5, SEED + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut rep = CheckReport::new();
    for _ in 0..5 {
        let (a, b, c) = (sym(&metric, &mut rng), sym(&metric, &mut rng), sym(&metric, &mut rng));
        rep.extend(variation_second(&metric, &a, &b, &c, &grid, &pts, 1e-6)?.report);
    }
    Ok(rep)
}

fn koiso() -> Result<CheckReport> {
    let metric = ChartMetric::new(Fixture::Torus3)?;
    let grid = GridQuadrature::new(9, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut rep = CheckReport::new();
    for _ in 0..5 {
        let h = FieldSpec::divergence_free_torus(3, 1, 1.0, &mut rng);
        rep.extend(koiso_check(&metric, &h, &grid, 1e-6)?.report);
    }
    Ok(rep)
}

fn suite(s: Suite, ns: &[usize]) -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    for &n in ns {
        rep.extend(run_suite(s, &SuiteConfig { n, seed: SEED, ..SuiteConfig::default() })?);
    }
    Ok(rep)
}

fn hyperquadric_algebra() -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    for n in [2, 4] {
        let worst = (0..10).map(|k| hyperquadric_sample(n, SEED + k).map(|a| hyperquadric_residual(&a))).try_fold(0.0f64, |w, r| r.map(|r| w.max(r)))?;
        rep.residual(&format!("n{n}/member_residual"), "constructed members of 𝒞(n)", worst, 1e-12);
    }
    for n in [3, 5] {
        let odd = vanc_odd_check(n, 1000, SEED)?;
        rep.flag(&format!("n{n}/odd_rigidity"), "𝒞(n) = {0} for odd n", odd.passed);
    }
    Ok(rep)
}

fn main() -> ExitCode {
    type Runner = fn() -> Result<CheckReport>;
    let criteria: [(u32, &str, f64, Runner); 9] = [
        (1, "algebraic constants, n = 2, 3", 10.0, algebraic_constants),
        (2, "Weitzenböck formulas on torus3 and sphere3", 30.0, weitzenboeck),
        (3, "first variation of Ricci and gauge invariance", 30.0, first_variation),
        (4, "second variation, weak form on torus3", 120.0, second_variation),
        (5, "Koiso identity for divergence-free h", 60.0, koiso),
        (6, "Grassmannian pointwise suite, n = 2, 3", 120.0, || suite(Suite::Grassmann, &[2, 3])),
        (7, "Monte Carlo integral identities, n = 3 and n = 2", 600.0, || suite(Suite::Integrals, &[3, 2])),
        (8, "obstruction pipelines and odd-n rigidity", 900.0, || suite(Suite::Obstruction, &[2, 3])),
        (9, "hyperquadric algebra and odd-n emptiness", 10.0, hyperquadric_algebra),
    ];
    let mut all = true;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = match run() {
            Ok(rep) => Outcome::from_report(&rep),
            Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
        };
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= limit;
        let pass = outcome.pass && in_time;
        all &= pass;
        let timing = if in_time { format!("{secs:.1}s") } else { format!("{secs:.1}s exceeds {limit:.0}s") };
        println!("criterion {id}: {} {name} [{timing}] {}", if pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
