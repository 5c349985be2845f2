//! End-to-end runs of the library suites and the classification pipeline.

use edlab::chart_calc::Fixture;
use edlab::integrate::HaarSampler;
use edlab::lie_core::{hyperquadric_sample, random_su, MatrixJson, SuMatrix};
use edlab::obstruct::{classify, Verdict};
use edlab::report::{Check, CheckReport};
use edlab::suites::{run_suite, Suite, SuiteConfig, OBSTRUCTION_TOL};
use edlab::GrassmannModel;

fn without_timing(rep: &CheckReport) -> Vec<Check> {
    rep.checks.iter().cloned().map(|c| Check { wall_time: 0.0, ..c }).collect()
}

#[test]
fn matrix_json_roundtrip() {
    for n in [2, 3, 4] {
        let a = random_su(n, 11).unwrap();
        let text = MatrixJson::from_su(&a).to_string_pretty();
        let b = MatrixJson::parse(&text).unwrap();
        assert!(a.sub(&b).max_abs() == 0.0, "n = {n}");
    }
}

#[test]
fn malformed_matrices_are_rejected() {
    assert!(MatrixJson::parse("{").is_err());
    assert!(MatrixJson::parse(r#"{"n": 2, "re": [[0]], "im": [[0]]}"#).is_err());
    // Hermitian rather than anti-Hermitian.
    let mut j = MatrixJson::from_su(&SuMatrix::zero(2));
    j.re[0][1] = 1.0;
    j.re[1][0] = 1.0;
    assert!(j.to_su().is_err());
    // Trace i.
    let mut j = MatrixJson::from_su(&SuMatrix::zero(2));
    j.im[0][0] = 1.0;
    assert!(j.to_su().is_err());
}

fn verdict(a: &SuMatrix, seed: u64) -> Verdict {
    let model = GrassmannModel::build(a.n()).unwrap();
    let sampler = HaarSampler::for_model(&model, seed);
    classify(&model, a, &sampler, 10_000, OBSTRUCTION_TOL).unwrap().verdict
}

#[test]
fn classification_verdicts() {
    assert_eq!(verdict(&SuMatrix::zero(2), 1), Verdict::IntegrableToSecondOrder);
    assert_eq!(verdict(&hyperquadric_sample(2, 3).unwrap(), 1), Verdict::IntegrableToSecondOrder);
    assert_eq!(verdict(&random_su(2, 5).unwrap(), 1), Verdict::Obstructed);
    assert_eq!(verdict(&random_su(3, 5).unwrap(), 1), Verdict::Obstructed);
}

#[test]
fn classification_checks_dimensions() {
    let model = GrassmannModel::build(2).unwrap();
    let sampler = HaarSampler::for_model(&model, 1);
    assert!(classify(&model, &random_su(3, 1).unwrap(), &sampler, 100, OBSTRUCTION_TOL).is_err());
}

#[test]
fn chart_suite_passes_on_every_fixture() {
    let cfg = SuiteConfig { seed: 3, ..SuiteConfig::default() };
    let rep = run_suite(Suite::Chart, &cfg).unwrap();
    assert!(rep.all_pass(), "{:?}", rep.failures());
    for fx in Fixture::ALL {
        assert!(rep.checks.iter().any(|c| c.check_name.starts_with(&format!("chart/{}/", fx.name()))));
    }
}

#[test]
fn suites_are_reproducible() {
    let cfg = SuiteConfig { n: 3, seed: 9, pairs: 3, ..SuiteConfig::default() };
    for s in [Suite::Algebra, Suite::Grassmann] {
        let a = run_suite(s, &cfg).unwrap();
        let b = run_suite(s, &cfg).unwrap();
        assert_eq!(without_timing(&a), without_timing(&b), "{}", s.name());
        assert!(a.all_pass(), "{:?}", a.failures());
    }
}

#[test]
fn tolerance_override_applies_to_chart_checks() {
    let cfg = SuiteConfig { tol: Some(1e-30), fixtures: vec![Fixture::Sphere3], ..SuiteConfig::default() };
    let rep = run_suite(Suite::Chart, &cfg).unwrap();
    assert!(rep.checks.iter().all(|c| c.tolerance == 1e-30));
    assert!(!rep.all_pass(), "roundoff exceeds a 1e-30 tolerance");
}
