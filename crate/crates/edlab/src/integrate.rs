//! Haar Monte Carlo over `SU(n+2)` and the invariant forms `μ₂`, `μ₃`, `ν`, `𝐏`.
//!
//! Integrals over the Grassmannian are Haar-probability averages, so the volume
//! is one. Sample `i` is drawn from its own ChaCha stream, values are collected
//! in index order and summed pairwise, which makes every estimate independent of
//! the number of worker threads.

use crate::error::{Error, Result};
use crate::grassmann_model::{GrassmannAlgebraModel, KillingJet};
use crate::lie_core::{haar_su, CMat, SuMatrix};
use crate::report::{Check, CheckReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default acceptance threshold for statistical checks, in standard errors.
pub const Z_ACCEPT: f64 = 3.0;
/// Relative floor on the standard error, so that exact identities with
/// rounding-level scatter do not produce spurious z-scores.
pub const STDERR_FLOOR: f64 = 1e-11;

/// Counter-based source of Haar-random elements of `SU(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarSampler {
    size: usize,
    seed: u64,
}

impl HaarSampler {
    pub fn new(size: usize, seed: u64) -> Result<Self> {
        if size < 2 {
            return Err(Error::usage(format!("Haar sampler needs N >= 2, got {size}")));
        }
        Ok(Self { size, seed })
    }

    /// Sampler for the isometry group of `model`.
    pub fn for_model(model: &GrassmannAlgebraModel, seed: u64) -> Self {
        Self { size: model.size(), seed }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sample `i`; a pure function of `(seed, i)`.
    pub fn point(&self, i: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i);
        haar_su(self.size, &mut rng)
    }
}

/// Monte Carlo estimate with its standard error `sd/√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl MCEstimate {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self { mean, stderr: (var / n as f64).sqrt(), n_samples: n }
    }

    /// Constant-times-estimate.
    pub fn scaled(&self, c: f64) -> Self {
        Self { mean: c * self.mean, stderr: c.abs() * self.stderr, n_samples: self.n_samples }
    }

    /// `|mean| / max(stderr, STDERR_FLOOR·scale)`.
    pub fn zscore(&self, scale: f64) -> f64 {
        let floor = STDERR_FLOOR * scale.abs().max(f64::MIN_POSITIVE);
        self.mean.abs() / self.stderr.max(floor)
    }

    /// z-score of the difference of two independent estimates.
    pub fn zscore_against(&self, other: &Self) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        let scale = self.mean.abs().max(other.mean.abs()).max(se);
        (self.mean - other.mean).abs() / se.max(STDERR_FLOOR * scale).max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn check_count(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        Err(Error::usage(format!("Monte Carlo needs at least 2 samples, got {n_samples}")))
    } else {
        Ok(())
    }
}

/// Haar average of `f`.
pub fn mc_integral<F>(f: F, sampler: &HaarSampler, n_samples: usize) -> Result<MCEstimate>
where
    F: Fn(&CMat) -> f64 + Sync,
{
    Ok(mc_integrals(|g| vec![f(g)], 1, sampler, n_samples)?[0])
}

/// Haar averages of the `k` components of `f`, evaluated on common sample points.
pub fn mc_integrals<F>(f: F, k: usize, sampler: &HaarSampler, n_samples: usize) -> Result<Vec<MCEstimate>>
where
    F: Fn(&CMat) -> Vec<f64> + Sync,
{
    check_count(n_samples)?;
    let rows: Vec<Vec<f64>> = (0..n_samples as u64).into_par_iter().map(|i| f(&sampler.point(i))).collect();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(Error::Numerical(format!("integrand returned {} values, expected {k}", r.len())));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok((0..k)
        .map(|c| {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            MCEstimate::from_values(&col)
        })
        .collect())
}

/// Adds a z-score check carrying its estimate, stderr and seed.
pub fn record(rep: &mut CheckReport, name: &str, reference: &str, est: &MCEstimate, z: f64, threshold: f64, seed: u64) {
    let c: &mut Check = rep.zscore(name, reference, z, threshold, est.n_samples);
    c.estimate = Some(est.mean);
    c.stderr = Some(est.stderr);
    c.seed = Some(seed);
}

/// An invariant form of Killing fields, evaluated as a Haar average.
#[derive(Debug, Clone)]
pub enum InvariantForm {
    /// `μ₂(X, Y) = ∫ z_X z_Y`.
    Mu2(SuMatrix, SuMatrix),
    /// `μ₃(X, Y, W) = ∫ z_X z_Y z_W`.
    Mu3(SuMatrix, SuMatrix, SuMatrix),
    /// `ν(X₁, X₂, X₃) = ∫ z_{X₃} g((dX₁^♭)_Q, (dX₂^♭)_Q)`.
    Nu(SuMatrix, SuMatrix, SuMatrix),
    /// `𝐏(X, X, Y) = ∫ 𝐩_X z_Y`.
    BigP(SuMatrix, SuMatrix),
}

impl InvariantForm {
    fn matrices(&self) -> Vec<&SuMatrix> {
        match self {
            Self::Mu2(a, b) | Self::BigP(a, b) => vec![a, b],
            Self::Mu3(a, b, c) | Self::Nu(a, b, c) => vec![a, b, c],
        }
    }
}

fn jet_at(model: &GrassmannAlgebraModel, a: &SuMatrix, g: &CMat, mu2: f64) -> KillingJet {
    model.jet_local(a.conj_inv(g).entries(), mu2)
}

fn z_at(model: &GrassmannAlgebraModel, a: &SuMatrix, g: &CMat) -> f64 {
    model.z_local(a.conj_inv(g).entries())
}

fn check_model_n(model: &GrassmannAlgebraModel, mats: &[&SuMatrix]) -> Result<()> {
    for a in mats {
        if a.n() != model.n() {
            return Err(Error::usage(format!("matrix has n = {}, model has n = {}", a.n(), model.n())));
        }
    }
    Ok(())
}

/// Haar estimate of an invariant form.
pub fn invariant_forms(model: &GrassmannAlgebraModel, form: &InvariantForm, sampler: &HaarSampler, n_samples: usize) -> Result<MCEstimate> {
    check_model_n(model, &form.matrices())?;
    match form {
        InvariantForm::Mu2(a, b) => mc_integral(|g| z_at(model, a, g) * z_at(model, b, g), sampler, n_samples),
        InvariantForm::Mu3(a, b, c) => {
            mc_integral(|g| z_at(model, a, g) * z_at(model, b, g) * z_at(model, c, g), sampler, n_samples)
        }
        InvariantForm::Nu(a, b, c) => mc_integral(
            |g| {
                let (ja, jb) = (jet_at(model, a, g, 0.0), jet_at(model, b, g, 0.0));
                z_at(model, c, g) * ja.dx_q.inner(&jb.dx_q)
            },
            sampler,
            n_samples,
        ),
        InvariantForm::BigP(a, b) => {
            let mu2 = model.mu2_pointwise(a)?;
            mc_integral(|g| jet_at(model, a, g, mu2).p * z_at(model, b, g), sampler, n_samples)
        }
    }
}

/// An identity `∫ lhs = ∫ rhs` checked through the common-sample difference.
struct Identity {
    name: &'static str,
    reference: &'static str,
}

fn record_identities(
    rep: &mut CheckReport,
    ids: &[Identity],
    est: &[MCEstimate],
    threshold: f64,
    seed: u64,
) {
    // Estimates come in pairs (lhs - rhs, |lhs| + |rhs|).
    for (id, pair) in ids.iter().zip(est.chunks(2)) {
        let z = pair[0].zscore(pair[1].mean);
        record(rep, id.name, id.reference, &pair[0], z, threshold, seed);
    }
}

fn push_pair(out: &mut Vec<f64>, lhs: f64, rhs: f64) {
    out.push(lhs - rhs);
    out.push(lhs.abs() + rhs.abs());
}

/// Integral identities between `z`, `𝐪`, `𝐞`, `𝐩`, `|X|²`, `μ₂`, `μ₃` and `ν` for `X = X_A`, `Y = X_B`.
pub fn check_integral_identities(
    model: &GrassmannAlgebraModel,
    a: &SuMatrix,
    b: &SuMatrix,
    sampler: &HaarSampler,
    n_samples: usize,
) -> Result<CheckReport> {
    check_model_n(model, &[a, b])?;
    let (m, e) = (model.m() as f64, model.einstein());
    let lq = model.lambda_q();
    let mu2 = model.mu2_pointwise(a)?;
    let generic = model.m() != 4;
    let mut ids = vec![
        Identity { name: "integrals/norm_x_against_z", reference: "∫g(X,X)z_Y = E∫z_X²z_Y" },
        Identity { name: "integrals/e_against_z", reference: "(m-4)∫𝐞_X z_Y = -((m²-4)E/m)∫z_X²z_Y" },
        Identity { name: "integrals/q_against_z", reference: "(m-4)∫𝐪_X z_Y = 3E∫z_X²z_Y" },
        Identity { name: "integrals/p_against_z", reference: "(m-4)∫𝐩_X z_Y = -(Em(m+8)/(m+4))∫z_X²z_Y" },
        Identity { name: "integrals/q_mean", reference: "∫𝐪_X = (3E/m)μ₂(X,X)" },
        Identity { name: "integrals/e_mean", reference: "∫𝐞_X = ((m²-4)E/(4m))μ₂(X,X)" },
        Identity {
            name: "integrals/moment_constant",
            reference: "g(X,X) + (E/m)z² + 𝐪 + 𝐞 = ((m²+8m+12)E/(4m))μ₂(X,X)",
        },
    ];
    if generic {
        ids.push(Identity { name: "integrals/nu_mu3_ratio", reference: "ν = (12Λ_Q E/(m-4))μ₃" });
    } else {
        ids.push(Identity { name: "integrals/mu3_vanishes", reference: "μ₃ = 0 for m = 4" });
    }
    let weight = model.mu2_weight() * e / m;
    let f = |g: &CMat| {
        let jx = jet_at(model, a, g, mu2);
        let zy = z_at(model, b, g);
        let (zx, xx) = (jx.z, jx.x.iter().map(|v| v * v).sum::<f64>());
        let zzz = zx * zx * zy;
        let mut out = Vec::with_capacity(16);
        push_pair(&mut out, xx * zy, e * zzz);
        push_pair(&mut out, (m - 4.0) * jx.e * zy, -(m * m - 4.0) * e / m * zzz);
        push_pair(&mut out, (m - 4.0) * jx.q * zy, 3.0 * e * zzz);
        push_pair(&mut out, (m - 4.0) * jx.p * zy, -e * m * (m + 8.0) / (m + 4.0) * zzz);
        push_pair(&mut out, jx.q, 3.0 * e / m * zx * zx);
        push_pair(&mut out, jx.e, (m * m - 4.0) * e / (4.0 * m) * zx * zx);
        push_pair(&mut out, jx.moment_constant(model), weight * zx * zx);
        let zxxx = zx * zx * zx;
        if generic {
            push_pair(&mut out, zx * jx.dx_q.norm2(), 12.0 * lq * e / (m - 4.0) * zxxx);
        } else {
            push_pair(&mut out, zxxx, 0.0);
        }
        out
    };
    let est = mc_integrals(f, 2 * ids.len(), sampler, n_samples)?;
    let mut rep = CheckReport::new();
    record_identities(&mut rep, &ids, &est, Z_ACCEPT, sampler.seed());
    Ok(rep)
}

/// `ad`-invariance of `μ₃` and `ν` and the slot symmetry of `ν` on the triple `(A, B, C)` with `W` acting.
pub fn check_invariance(
    model: &GrassmannAlgebraModel,
    abc: [&SuMatrix; 3],
    w: &SuMatrix,
    sampler: &HaarSampler,
    n_samples: usize,
) -> Result<CheckReport> {
    let [a, b, c] = abc;
    check_model_n(model, &[a, b, c, w])?;
    let (wa, wb, wc) = (w.bracket(a), w.bracket(b), w.bracket(c));
    let ids = [
        Identity { name: "integrals/mu3_ad_invariant", reference: "μ₃([W,X],Y,Z) + μ₃(X,[W,Y],Z) + μ₃(X,Y,[W,Z]) = 0" },
        Identity { name: "integrals/nu_ad_invariant", reference: "ν([W,X],Y,Z) + ν(X,[W,Y],Z) + ν(X,Y,[W,Z]) = 0" },
        Identity { name: "integrals/nu_symmetric_first_last", reference: "ν(X,Y,Z) = ν(Z,Y,X)" },
        Identity { name: "integrals/nu_symmetric_last_pair", reference: "ν(X,Y,Z) = ν(X,Z,Y)" },
    ];
    let f = |g: &CMat| {
        let z = |s: &SuMatrix| z_at(model, s, g);
        let q = |s: &SuMatrix| jet_at(model, s, g, 0.0).dx_q;
        let (qa, qb, qc) = (q(a), q(b), q(c));
        let (qwa, qwb) = (q(&wa), q(&wb));
        let (za, zb, zc) = (z(a), z(b), z(c));
        let mu_terms = [z(&wa) * zb * zc, za * z(&wb) * zc, za * zb * z(&wc)];
        let nu_terms = [zc * qwa.inner(&qb), zc * qa.inner(&qwb), z(&wc) * qa.inner(&qb)];
        let nu = zc * qa.inner(&qb);
        let mut out = Vec::with_capacity(8);
        push_pair(&mut out, mu_terms.iter().sum(), 0.0);
        out[1] = mu_terms.iter().map(|t| t.abs()).sum();
        push_pair(&mut out, nu_terms.iter().sum(), 0.0);
        out[3] = nu_terms.iter().map(|t| t.abs()).sum();
        push_pair(&mut out, nu, za * qc.inner(&qb));
        push_pair(&mut out, nu, zb * qa.inner(&qc));
        out
    };
    let est = mc_integrals(f, 2 * ids.len(), sampler, n_samples)?;
    let mut rep = CheckReport::new();
    record_identities(&mut rep, &ids, &est, Z_ACCEPT, sampler.seed());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{form_raw, random_su_with};

    fn model(n: usize) -> GrassmannAlgebraModel {
        GrassmannAlgebraModel::build(n).unwrap()
    }

    #[test]
    fn constant_integrand() {
        let s = HaarSampler::new(4, 1).unwrap();
        let est = mc_integral(|_| 1.0, &s, 100).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.n_samples, 100);
    }

    #[test]
    fn rejects_single_sample_and_non_finite() {
        let s = HaarSampler::new(4, 1).unwrap();
        assert!(mc_integral(|_| 1.0, &s, 1).unwrap_err().is_usage());
        let err = mc_integrals(|g| vec![if g[(0, 0)].re > 0.0 { f64::NAN } else { 0.0 }], 1, &s, 50).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn samples_are_special_unitary_and_reproducible() {
        let s = HaarSampler::new(5, 9).unwrap();
        let g = s.point(17);
        let r = (g.adjoint() * &g - CMat::identity(5, 5)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(r < 1e-12);
        assert!((g.determinant() - crate::lie_core::C64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(g, s.point(17));
        assert_ne!(g, s.point(18));
    }

    #[test]
    fn worker_count_does_not_change_estimates() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_su_with(2, &mut rng);
        let s = HaarSampler::for_model(&g, 11);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| invariant_forms(&g, &InvariantForm::Mu3(a.clone(), a.clone(), a.clone()), &s, 3000).unwrap())
        };
        let (one, eight) = (run(1), run(8));
        assert_eq!(one.mean.to_bits(), eight.mean.to_bits());
        assert_eq!(one.stderr.to_bits(), eight.stderr.to_bits());
    }

    #[test]
    fn z_has_mean_zero_and_mu2_matches_schur() {
        let g = model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_su_with(3, &mut rng);
        let s = HaarSampler::for_model(&g, 5);
        let z = mc_integral(|p| z_at(&g, &a, p), &s, 20_000).unwrap();
        assert!(z.mean.abs() < 3.5 * z.stderr, "{z:?}");
        let mu2 = invariant_forms(&g, &InvariantForm::Mu2(a.clone(), a.clone()), &s, 20_000).unwrap();
        // Independent oracle: Schur's lemma on the adjoint representation.
        let zz = form_raw(g.z_generator().entries(), g.z_generator().entries());
        let exact = a.norm().powi(2) * zz / 24.0;
        assert!((mu2.mean - exact).abs() < 4.0 * mu2.stderr, "{} vs {exact}", mu2.mean);
        assert!(mu2.mean > 0.0);
    }

    #[test]
    fn stderr_scales_as_inverse_root_n() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_su_with(2, &mut rng);
        let s = HaarSampler::for_model(&g, 6);
        let f = |p: &CMat| z_at(&g, &a, p).powi(2);
        let small = mc_integral(f, &s, 4000).unwrap();
        let large = mc_integral(f, &s, 16000).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn mu3_vanishes_for_n2() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_su_with(2, &mut rng);
        let s = HaarSampler::for_model(&g, 7);
        let mu3 = invariant_forms(&g, &InvariantForm::Mu3(a.clone(), a.clone(), a.clone()), &s, 20_000).unwrap();
        assert!(mu3.mean.abs() < 3.5 * mu3.stderr, "{mu3:?}");
    }

    #[test]
    fn identities_n3() {
        let g = model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_su_with(3, &mut rng);
        let b = random_su_with(3, &mut rng);
        let s = HaarSampler::for_model(&g, 8);
        let rep = check_integral_identities(&g, &a, &b, &s, 20_000).unwrap();
        for c in &rep.checks {
            assert!(c.passed(), "{} z = {}", c.check_name, c.residual_or_zscore);
        }
        let rep = check_integral_identities(&g, &a, &a, &s, 20_000).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn identities_n2() {
        let g = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_su_with(2, &mut rng);
        let s = HaarSampler::for_model(&g, 9);
        let rep = check_integral_identities(&g, &a, &a, &s, 10_000).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn invariance_and_symmetry() {
        let g = model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let [a, b, c, w] = [0; 4].map(|_| random_su_with(3, &mut rng));
        let s = HaarSampler::for_model(&g, 10);
        let rep = check_invariance(&g, [&a, &b, &c], &w, &s, 10_000).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn mismatched_n_is_usage_error() {
        let g = model(2);
        let s = HaarSampler::for_model(&g, 1);
        let a = SuMatrix::zero(3);
        let err = invariant_forms(&g, &InvariantForm::Mu2(a.clone(), a), &s, 10).unwrap_err();
        assert!(err.is_usage());
    }
}
