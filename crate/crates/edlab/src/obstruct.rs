//! Second-order obstruction on `Gr₂(ℂ^{n+2})`: the obstruction polynomial
//! `P(X) = 3⟨ω_J∧dε, ε∧dε⟩ - 4E⟨ε∧ε, ε∧ω_J⟩` with `ε = ε(X)` and
//! `dε = -(E/m)X⌟Ω̃`, its closed forms through `μ₃` and `ν`, its proportionality
//! to `P₀`, and the resulting verdict on a deformation.

use crate::error::{Error, Result};
use crate::grassmann_model::{GrassmannAlgebraModel, KillingJet};
use crate::integrate::{mc_integrals, record, HaarSampler, MCEstimate, Z_ACCEPT};
use crate::lie_core::{cubic_p0, haar_su, hyperquadric_member, hyperquadric_residual, su_basis, CMat, SuMatrix};
use crate::report::{rel_residual, CheckReport};
use crate::tensor_alg::KForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// z-score above which a nonzero pairing is taken as established.
pub const Z_REJECT: f64 = 5.0;
/// Points at which the Killing potential `𝐩_X` is evaluated by [`classify`].
pub const POINTWISE_POINTS: usize = 20;

/// `c₁` with `-3c₁ = (m-1)²(m+3) - 15m + 9`.
pub fn c1(m: f64) -> f64 {
    -((m - 1.0).powi(2) * (m + 3.0) - 15.0 * m + 9.0) / 3.0
}

/// `c₂` with `9c₂ = 4(m-1)(m-4)(m+4)`.
pub fn c2(m: f64) -> f64 {
    4.0 * (m - 1.0) * (m - 4.0) * (m + 4.0) / 9.0
}

/// `c₃/E⁴ = -8(m²-4)(2c₁+c₂)/(m³(m-4))`; undefined at `m = 4`.
pub fn c3_over_e4(m: f64) -> Option<f64> {
    (m != 4.0).then(|| -8.0 * (m * m - 4.0) * (2.0 * c1(m) + c2(m)) / (m.powi(3) * (m - 4.0)))
}

/// `P/(E⁴μ₃) = 16(m²-4)²(m-1)/(3m³(m-4))`; undefined at `m = 4`, where `P = 6E²ν`.
pub fn closed_coefficient_over_e4(m: f64) -> Option<f64> {
    (m != 4.0).then(|| 16.0 * (m * m - 4.0).powi(2) * (m - 1.0) / (3.0 * m.powi(3) * (m - 4.0)))
}

/// Pointwise pieces of the obstruction integrand at one point.
#[derive(Debug, Clone, Copy)]
pub struct ObstructionTerms {
    /// `g(ω_J∧dε, ε∧dε)`.
    pub first: f64,
    /// `g(ε∧ε, ε∧ω_J)`.
    pub second: f64,
    pub p: f64,
}

fn d_epsilon(model: &GrassmannAlgebraModel, jet: &KillingJet) -> KForm<f64> {
    let omega_t = model.hermitian().kraines_tilde().expect("quaternionic model");
    omega_t.interior(&jet.x).scale(-model.einstein() / model.m() as f64)
}

/// Obstruction integrand from a Killing jet.
pub fn obstruction_terms(model: &GrassmannAlgebraModel, jet: &KillingJet) -> ObstructionTerms {
    let w = model.hermitian().omega_j();
    let eps = jet.epsilon(model);
    let de = d_epsilon(model, jet);
    let first = w.wedge(&de).inner(&eps.wedge(&de));
    let ee = eps.wedge(&eps);
    let second = ee.inner(&eps.wedge(w));
    ObstructionTerms { first, second, p: 3.0 * first - 4.0 * model.einstein() * second }
}

fn local_jet(model: &GrassmannAlgebraModel, a: &SuMatrix, g: &CMat) -> KillingJet {
    model.jet_local(a.conj_inv(g).entries(), 0.0)
}

fn same_n(model: &GrassmannAlgebraModel, a: &SuMatrix) -> Result<()> {
    if a.n() != model.n() {
        return Err(Error::usage(format!("matrix has n = {}, model has n = {}", a.n(), model.n())));
    }
    Ok(())
}

/// Haar average of the obstruction integrand.
pub fn obstruction_direct(model: &GrassmannAlgebraModel, a: &SuMatrix, sampler: &HaarSampler, n_samples: usize) -> Result<MCEstimate> {
    same_n(model, a)?;
    let f = |g: &CMat| vec![obstruction_terms(model, &local_jet(model, a, g)).p];
    Ok(mc_integrals(f, 1, sampler, n_samples)?[0])
}

/// Which invariant the closed form multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedKind {
    /// `m ≠ 4`: `P = coefficient·μ₃`.
    Mu3,
    /// `m = 4`: `P = 6E²ν`.
    Nu,
}

/// Closed-form value of `P` as `coefficient × invariant`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedForm {
    pub kind: ClosedKind,
    pub coefficient: f64,
    pub invariant: MCEstimate,
    pub value: MCEstimate,
}

/// Result of [`obstruction_closed_form`].
#[derive(Debug, Clone)]
pub struct ClosedFormResult {
    pub closed: ClosedForm,
    pub direct: MCEstimate,
    pub report: CheckReport,
}

/// Closed-form coefficient and invariant kind for `model`.
pub fn closed_coefficient(model: &GrassmannAlgebraModel) -> (ClosedKind, f64) {
    let e = model.einstein();
    match closed_coefficient_over_e4(model.m() as f64) {
        Some(c) => (ClosedKind::Mu3, c * e.powi(4)),
        None => (ClosedKind::Nu, 6.0 * e * e),
    }
}

/// Pushes `lhs - rhs` and the magnitude that sets its rounding floor.
fn push_pair(out: &mut Vec<f64>, lhs: f64, rhs: f64, magnitude: f64) {
    out.push(lhs - rhs);
    out.push(lhs.abs() + rhs.abs() + magnitude);
}

/// `P` via `μ₃` or `ν`, both summand identities, the pointwise lemmas behind
/// them, and agreement with the direct integral on common samples.
pub fn obstruction_closed_form(
    model: &GrassmannAlgebraModel,
    a: &SuMatrix,
    sampler: &HaarSampler,
    n_samples: usize,
    tol: f64,
) -> Result<ClosedFormResult> {
    same_n(model, a)?;
    let h = model.hermitian();
    let (m, e) = (model.m() as f64, model.einstein());
    let (kind, coefficient) = closed_coefficient(model);
    let generic = kind == ClosedKind::Mu3;
    let first_coef = match c3_over_e4(m) {
        Some(c) => c * e.powi(4),
        None => 2.0 * e * e,
    };
    let second_coef = if generic { 8.0 * (m * m - 4.0) * e.powi(3) / (m * m) } else { 0.0 };

    let point = |g: &CMat| {
        let jet = local_jet(model, a, g);
        let t = obstruction_terms(model, &jet);
        let eps = jet.epsilon(model);
        let xjx = h.v_wedge_jv(&jet.x);
        let w = h.omega_j();
        let z3 = jet.z.powi(3);
        let nu = jet.z * jet.dx_q.norm2();
        let inv = if generic { z3 } else { nu };
        let mut out = Vec::with_capacity(16);
        let eps_norm = eps.norm2().sqrt();
        let cubic = eps_norm.powi(3) * e;
        push_pair(&mut out, t.p, coefficient * inv, cubic);
        push_pair(&mut out, t.first, first_coef * inv, cubic);
        push_pair(&mut out, t.second, second_coef * z3, cubic);
        let d00 = jet.dx0.wedge(&jet.dx0).inner(&eps.wedge(w));
        push_pair(&mut out, d00, -2.0 * (m - 4.0) * e / m * eps.inner(&xjx), jet.dx0.norm2() * eps_norm);
        out.push(t.p);
        out.push(inv);
        out
    };
    let est = mc_integrals(point, 10, sampler, n_samples)?;
    let seed = sampler.seed();
    let mut rep = CheckReport::new();
    let ids = [
        ("obstruction/direct_vs_closed", if generic {
            "P = 16E⁴(m²-4)²(m-1)/(3m³(m-4)) μ₃"
        } else {
            "P = 6E²ν"
        }),
        ("obstruction/first_summand", if generic {
            "⟨ω_J∧dε, ε∧dε⟩ = c₃μ₃"
        } else {
            "⟨ω_J∧dε, ε∧dε⟩ = 2E²ν"
        }),
        ("obstruction/second_summand", if generic {
            "⟨ε∧ε, ε∧ω_J⟩ = (8(m²-4)E³/m²)μ₃"
        } else {
            "⟨ε∧ε, ε∧ω_J⟩ = 0"
        }),
        ("obstruction/primitive_square_pairing", "⟨(dX^♭)_0∧(dX^♭)_0, ε∧ω_J⟩ = -(2(m-4)E/m)⟨ε, X^♭∧(JX)^♭⟩"),
    ];
    for (k, (name, reference)) in ids.iter().enumerate() {
        let (d, s) = (&est[2 * k], &est[2 * k + 1]);
        record(&mut rep, name, reference, d, d.zscore(s.mean), Z_ACCEPT, seed);
    }
    let pointwise = pointwise_lemmas(model, a, sampler, tol)?;
    rep.extend(pointwise);
    let direct = est[8];
    let invariant = est[9];
    Ok(ClosedFormResult {
        closed: ClosedForm { kind, coefficient, invariant, value: invariant.scaled(coefficient) },
        direct,
        report: rep,
    })
}

/// Pointwise identities behind the closed form, at the first few sample points.
fn pointwise_lemmas(model: &GrassmannAlgebraModel, a: &SuMatrix, sampler: &HaarSampler, tol: f64) -> Result<CheckReport> {
    let h = model.hermitian();
    let (m, e) = (model.m() as f64, model.einstein());
    let (c1m, c2m) = (c1(m), c2(m));
    let w = h.omega_j();
    let (mut alg, mut last, mut sq) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..POINTWISE_POINTS as u64 {
        let jet = local_jet(model, a, &sampler.point(i));
        let eps = jet.epsilon(model);
        let de = d_epsilon(model, &jet);
        let xjx = h.v_wedge_jv(&jet.x);
        let eps_q = h.proj_q(&eps)?;
        let lhs = w.wedge(&de).inner(&eps.wedge(&de));
        let rhs = 4.0 * e * e / (m * m) * (c1m * eps.inner(&xjx) + c2m * eps_q.inner(&xjx));
        alg = alg.max(rel_residual(&[lhs], &[rhs]));
        let l = jet.dx0.wedge(&jet.dx_q).inner(&eps.wedge(w));
        let scale = (jet.dx0.norm2() * jet.dx_q.norm2() * eps.norm2()).sqrt();
        last = last.max(l.abs() / scale.max(1.0));
        let s = h.lstar(w, &jet.dx_q.wedge(&jet.dx_q));
        sq = sq.max(rel_residual(s.coeffs(), w.scale(-2.0 / m * jet.dx_q.norm2()).coeffs()));
    }
    let mut rep = CheckReport::new();
    rep.residual(
        "obstruction/kraines_tilde_pairing",
        "g(ω_J∧(X⌟Ω̃), ε∧(X⌟Ω̃)) = 4c₁g(ε, X∧JX) + 4c₂g(ε_Q, X∧JX)",
        alg,
        tol,
    );
    rep.residual("obstruction/primitive_q_orthogonality", "g((dX^♭)_0∧(dX^♭)_Q, ε∧ω_J) = 0", last, tol);
    rep.residual("obstruction/q_square_contraction", "L*_{ω_J}((dX^♭)_Q∧(dX^♭)_Q) = -(2/m)|(dX^♭)_Q|²ω_J", sq, tol);
    Ok(rep)
}

/// Least-squares fit `P(X_A) ≈ c·P₀(A,A,A)` over random matrices.
#[derive(Debug, Clone, Serialize)]
pub struct ProportionalityFit {
    pub c: f64,
    pub c_stderr: f64,
    /// Largest `|P - cP₀|/stderr(P)` over the fitted matrices.
    pub max_zscore: f64,
    pub degenerate: bool,
    pub p_values: Vec<MCEstimate>,
    pub p0_values: Vec<f64>,
    pub report: CheckReport,
}

/// Fits `P = cP₀` on `matrices`, every `P` estimated on the same sample points.
pub fn proportionality_fit(
    model: &GrassmannAlgebraModel,
    matrices: &[SuMatrix],
    sampler: &HaarSampler,
    n_samples: usize,
) -> Result<ProportionalityFit> {
    for a in matrices {
        same_n(model, a)?;
    }
    if matrices.is_empty() {
        return Err(Error::usage("proportionality fit needs at least one matrix"));
    }
    let f = |g: &CMat| matrices.iter().map(|a| obstruction_terms(model, &local_jet(model, a, g)).p).collect();
    let p = mc_integrals(f, matrices.len(), sampler, n_samples)?;
    let p0: Vec<f64> = matrices.iter().map(|a| cubic_p0(a, a, a)).collect::<Result<_>>()?;
    // Weighted by 1/stderr², floored so exactly-zero estimates do not dominate.
    let scale = p.iter().map(|e| e.stderr).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let w: Vec<f64> = p.iter().map(|e| 1.0 / e.stderr.max(1e-6 * scale).powi(2)).collect();
    let sxx: f64 = p0.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = p0.iter().zip(&p).zip(&w).map(|((x, y), w)| w * x * y.mean).sum();
    let p0_scale = p0.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let norms = matrices.iter().map(|a| a.norm().powi(3)).fold(0.0, f64::max);
    let degenerate = p0_scale <= 1e-9 * norms.max(f64::MIN_POSITIVE);
    let c = if degenerate { 0.0 } else { sxy / sxx };
    let c_stderr = if degenerate { f64::INFINITY } else { 1.0 / sxx.sqrt() };
    let max_zscore = p
        .iter()
        .zip(&p0)
        .map(|(y, x)| {
            let dev = (y.mean - c * x).abs();
            dev / y.stderr.max(1e-11 * y.mean.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let mut rep = CheckReport::new();
    if degenerate {
        let chk = rep.zscore("obstruction/proportionality_fit", "P(X_A) = cP₀(A,A,A)", f64::NAN, Z_REJECT, n_samples);
        chk.status = crate::report::Status::Inconclusive;
    } else {
        let chk = rep.zscore("obstruction/proportionality_fit", "P(X_A) = cP₀(A,A,A)", max_zscore, Z_REJECT, n_samples);
        chk.estimate = Some(c);
        chk.stderr = Some(c_stderr);
        chk.seed = Some(sampler.seed());
    }
    Ok(ProportionalityFit { c, c_stderr, max_zscore, degenerate, p_values: p, p0_values: p0, report: rep })
}

/// [`proportionality_fit`] on `sample_count` random matrices drawn from `rng`.
pub fn proportionality_c(
    model: &GrassmannAlgebraModel,
    sample_count: usize,
    rng: &mut impl Rng,
    sampler: &HaarSampler,
    n_samples: usize,
) -> Result<ProportionalityFit> {
    let mats: Vec<SuMatrix> = (0..sample_count).map(|_| crate::lie_core::random_su_with(model.n(), rng)).collect();
    proportionality_fit(model, &mats, sampler, n_samples)
}

/// Outcome of the second-order test on one deformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    IntegrableToSecondOrder,
    Obstructed,
    Inconclusive,
}

/// Verdict with the evidence behind it.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionVerdict {
    #[serde(skip)]
    pub a: SuMatrix,
    pub n: usize,
    pub verdict: Verdict,
    #[serde(rename = "P_direct")]
    pub p_direct: MCEstimate,
    #[serde(rename = "P_closed")]
    pub p_closed: ClosedForm,
    pub in_hyperquadric: bool,
    pub hyperquadric_residual: f64,
    /// z-scores of `𝐏(X, X, B_i) = ∫𝐩_X z_{B_i}` over a basis `B_i`.
    pub zscores: Vec<f64>,
    /// `max |𝐩_X| / (|X|² + (E/m)z² + 𝐪 + 𝐞)` over the sampled points.
    pub pointwise_p: f64,
    pub pointwise_p_vanishes: bool,
    pub diagnostics: Vec<String>,
}

/// Second-order verdict for the deformation `ε(X_A)J`.
///
/// Integrable iff `A` lies on the hyperquadric and every pairing has z-score
/// below 3; obstructed iff it does not and some pairing exceeds 5. The
/// pointwise `𝐩_X ≡ 0` test must agree with the hyperquadric test, otherwise
/// the verdict is inconclusive.
pub fn classify(model: &GrassmannAlgebraModel, a: &SuMatrix, sampler: &HaarSampler, n_samples: usize, tol: f64) -> Result<ObstructionVerdict> {
    same_n(model, a)?;
    let basis = su_basis(model.n());
    let mu2 = model.mu2_pointwise(a)?;
    let (kind, coefficient) = closed_coefficient(model);
    let k = basis.len();
    let f = |g: &CMat| {
        let local = a.conj_inv(g);
        let jet = model.jet_local(local.entries(), mu2);
        let t = obstruction_terms(model, &jet);
        let p_scale = jet.e + jet.q + model.kpot_coefficient().abs() * (jet.z * jet.z + model.mu2_weight() * mu2);
        let mut out = Vec::with_capacity(2 * k + 3);
        for b in &basis {
            let zb = model.z_local(b.conj_inv(g).entries());
            out.push(jet.p * zb);
            out.push(p_scale * zb.abs());
        }
        out.push(t.p);
        out.push(if kind == ClosedKind::Mu3 { jet.z.powi(3) } else { jet.z * jet.dx_q.norm2() });
        out
    };
    let est = mc_integrals(f, 2 * k + 2, sampler, n_samples)?;
    let zscores: Vec<f64> = (0..k).map(|i| est[2 * i].zscore(est[2 * i + 1].mean)).collect();
    let p_direct = est[2 * k];
    let invariant = est[2 * k + 1];

    // A stream disjoint from the integration samples.
    let mut rng_pts = ChaCha8Rng::seed_from_u64(sampler.seed());
    rng_pts.set_stream(u64::MAX);
    let mut pointwise_p = 0.0f64;
    for _ in 0..POINTWISE_POINTS {
        let g = haar_su(model.size(), &mut rng_pts);
        let jet = model.jet_local(a.conj_inv(&g).entries(), mu2);
        let scale = jet.moment_constant(model);
        if scale > 0.0 {
            pointwise_p = pointwise_p.max(jet.p.abs() / scale);
        }
    }
    let hq_res = hyperquadric_residual(a);
    let in_hq = hyperquadric_member(a, crate::lie_core::HYPERQUADRIC_TOL);
    let p_zero = pointwise_p < tol;
    let max_z = zscores.iter().copied().fold(0.0, f64::max);
    let mut diagnostics = Vec::new();
    let mut verdict = if in_hq && max_z < Z_ACCEPT {
        Verdict::IntegrableToSecondOrder
    } else if !in_hq && max_z > Z_REJECT {
        Verdict::Obstructed
    } else {
        diagnostics.push(format!("hyperquadric membership {in_hq} with largest pairing z-score {max_z:.3}"));
        Verdict::Inconclusive
    };
    if p_zero != in_hq {
        diagnostics.push(format!(
            "pointwise Killing potential test ({}) disagrees with hyperquadric membership ({in_hq})",
            if p_zero { "vanishes" } else { "nonzero" }
        ));
        verdict = Verdict::Inconclusive;
    }
    Ok(ObstructionVerdict {
        a: a.clone(),
        n: model.n(),
        verdict,
        p_direct,
        p_closed: ClosedForm { kind, coefficient, invariant, value: invariant.scaled(coefficient) },
        in_hyperquadric: in_hq,
        hyperquadric_residual: hq_res,
        zscores,
        pointwise_p,
        pointwise_p_vanishes: p_zero,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{hyperquadric_sample, random_su_with};

    fn model(n: usize) -> GrassmannAlgebraModel {
        GrassmannAlgebraModel::build(n).unwrap()
    }

    #[test]
    fn constants_match_instantiated_formulas() {
        assert_eq!(c1(6.0), -48.0);
        assert!((c2(6.0) - 400.0 / 9.0).abs() < 1e-12);
        assert_eq!(c1(4.0), -4.0);
        assert_eq!(c2(4.0), 0.0);
        assert!((closed_coefficient_over_e4(6.0).unwrap() - 5120.0 / 81.0).abs() < 1e-12);
        assert!(closed_coefficient_over_e4(4.0).is_none());
        // The two summands recombine into the closed coefficient.
        for m in [6.0, 8.0, 10.0] {
            let combined = 3.0 * c3_over_e4(m).unwrap() - 4.0 * 8.0 * (m * m - 4.0) / (m * m);
            assert!((combined - closed_coefficient_over_e4(m).unwrap()).abs() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn zero_matrix() {
        let g = model(2);
        let s = HaarSampler::for_model(&g, 1);
        let a = SuMatrix::zero(2);
        let p = obstruction_direct(&g, &a, &s, 50).unwrap();
        assert_eq!((p.mean, p.stderr), (0.0, 0.0));
        let v = classify(&g, &a, &s, 50, 1e-9).unwrap();
        assert_eq!(v.verdict, Verdict::IntegrableToSecondOrder);
    }

    #[test]
    fn closed_form_agrees_n2_n3() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 3] {
            let g = model(n);
            let a = random_su_with(n, &mut rng);
            let s = HaarSampler::for_model(&g, 2);
            let r = obstruction_closed_form(&g, &a, &s, 4000, 1e-9).unwrap();
            assert!(r.report.all_pass(), "n = {n}: {:?}", r.report.failures());
        }
    }

    #[test]
    fn classify_hyperquadric_and_rigid() {
        let g2 = model(2);
        let a = hyperquadric_sample(2, 3).unwrap();
        let s = HaarSampler::for_model(&g2, 4);
        let v = classify(&g2, &a, &s, 4000, 1e-9).unwrap();
        assert_eq!(v.verdict, Verdict::IntegrableToSecondOrder, "{v:?}");
        let g3 = model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_su_with(3, &mut rng);
        let s = HaarSampler::for_model(&g3, 6);
        let v = classify(&g3, &a, &s, 4000, 1e-9).unwrap();
        assert_eq!(v.verdict, Verdict::Obstructed, "{v:?}");
    }

    #[test]
    fn cubic_homogeneity_with_common_samples() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_su_with(2, &mut rng);
        let s = HaarSampler::for_model(&g, 8);
        let p1 = obstruction_direct(&g, &a, &s, 500).unwrap();
        let p2 = obstruction_direct(&g, &a.scale(2.0), &s, 500).unwrap();
        assert!((p2.mean - 8.0 * p1.mean).abs() < 1e-10 * p2.mean.abs().max(1.0));
    }

    #[test]
    fn proportionality_to_p0() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = HaarSampler::for_model(&g, 10);
        let fit = proportionality_c(&g, 6, &mut rng, &s, 4000).unwrap();
        assert!(!fit.degenerate);
        assert!(fit.report.all_pass(), "{:?}", fit.report);
    }
}
