//! Arithmetic in `su(N)`, `N = n + 2`: the trace form, the invariant cubic `P₀`
//! and the hyperquadric of matrices with scalar square.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);

/// Validation tolerance for the anti-Hermitian and trace-free conditions.
pub const SU_TOL: f64 = 1e-12;
/// Default membership tolerance for the hyperquadric, applied to `A/‖A‖`.
pub const HYPERQUADRIC_TOL: f64 = 1e-9;

/// Element of `su(n+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuMatrix {
    n: usize,
    entries: CMat,
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

impl SuMatrix {
    /// Validates `A* = -A` and `tr A = 0` within `tol`.
    pub fn with_tolerance(n: usize, entries: CMat, tol: f64) -> Result<Self> {
        let size = n + 2;
        if entries.nrows() != size || entries.ncols() != size {
            return Err(Error::Invalid(format!(
                "expected a {size}x{size} matrix for n = {n}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let herm = max_abs(&(&entries + entries.adjoint()));
        if !(herm <= tol) {
            return Err(Error::Invalid(format!("matrix is not anti-Hermitian (residual {herm:e})")));
        }
        let tr = entries.trace().norm();
        if !(tr <= tol) {
            return Err(Error::Invalid(format!("matrix is not trace-free (|tr| = {tr:e})")));
        }
        Ok(Self { n, entries })
    }

    pub fn new(n: usize, entries: CMat) -> Result<Self> {
        Self::with_tolerance(n, entries, SU_TOL)
    }

    /// Orthogonal projection of an arbitrary square matrix onto `su(N)`.
    pub fn project(n: usize, m: &CMat) -> Self {
        let size = n + 2;
        let mut a = (m - m.adjoint()) * C64::new(0.5, 0.0);
        let t = a.trace() / C64::new(size as f64, 0.0);
        for i in 0..size {
            a[(i, i)] -= t;
        }
        Self { n, entries: a }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, entries: CMat::zeros(n + 2, n + 2) }
    }

    /// `i·diag(a)` for real `a` with zero sum.
    pub fn diag(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n + 2 {
            return Err(Error::usage(format!("diagonal needs {} entries", n + 2)));
        }
        Self::new(n, CMat::from_fn(n + 2, n + 2, |r, c| if r == c { I * a[r] } else { C64::new(0.0, 0.0) }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix size `N = n + 2`.
    pub fn size(&self) -> usize {
        self.n + 2
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    /// `‖A‖ = √⟨A, A⟩`.
    pub fn norm(&self) -> f64 {
        form_raw(&self.entries, &self.entries).max(0.0).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, entries: &self.entries * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, entries: &self.entries + &other.entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, entries: &self.entries - &other.entries }
    }

    /// `[A, B]`.
    pub fn bracket(&self, other: &Self) -> Self {
        Self { n: self.n, entries: &self.entries * &other.entries - &other.entries * &self.entries }
    }

    /// `Ad(g⁻¹)A = g⁻¹ A g` for unitary `g`.
    pub fn conj_inv(&self, g: &CMat) -> Self {
        Self { n: self.n, entries: g.adjoint() * &self.entries * g }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }
}

pub(crate) fn form_raw(a: &CMat, b: &CMat) -> f64 {
    // -Re tr(AB) without forming the product.
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    -s
}

fn same_n(a: &SuMatrix, b: &SuMatrix) -> Result<()> {
    if a.n != b.n {
        Err(Error::usage(format!("dimension mismatch: n = {} vs n = {}", a.n, b.n)))
    } else {
        Ok(())
    }
}

/// `⟨A, B⟩ = -Re tr(AB)`.
pub fn trace_form(a: &SuMatrix, b: &SuMatrix) -> Result<f64> {
    same_n(a, b)?;
    Ok(form_raw(&a.entries, &b.entries))
}

/// `P₀(A,B,C) = Re tr(i(ACB + CAB))`, fully symmetric and ad-invariant.
pub fn cubic_p0(a: &SuMatrix, b: &SuMatrix, c: &SuMatrix) -> Result<f64> {
    same_n(a, b)?;
    same_n(a, c)?;
    let acb = (&a.entries * &c.entries * &b.entries).trace();
    let cab = (&c.entries * &a.entries * &b.entries).trace();
    Ok((I * (acb + cab)).re)
}

/// Gaussian anti-Hermitian trace-free matrix, deterministic in `(n, seed)`.
pub fn random_su(n: usize, seed: u64) -> Result<SuMatrix> {
    if n < 2 {
        return Err(Error::usage(format!("n must be at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_su_with(n, &mut rng))
}

/// Gaussian element of `su(n+2)` drawn from `rng`.
pub fn random_su_with(n: usize, rng: &mut impl Rng) -> SuMatrix {
    let m = gaussian_complex(n + 2, rng);
    SuMatrix::project(n, &m)
}

fn gaussian_complex(size: usize, rng: &mut impl Rng) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(size, size, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed element of `SU(size)`.
///
/// QR of a complex Gaussian matrix, with the phases of `R`'s diagonal moved into
/// `Q`, then a scalar phase correction of the determinant.
pub fn haar_su(size: usize, rng: &mut impl Rng) -> CMat {
    let z = gaussian_complex(size, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..size {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..size {
            q[(i, j)] *= ph;
        }
    }
    let det = q.determinant();
    let corr = C64::from_polar(1.0, -det.arg() / size as f64);
    q * corr
}

/// `‖Â² - (tr Â²/N)·id‖_max` for `Â = A/‖A‖`; zero for `A = 0`.
pub fn hyperquadric_residual(a: &SuMatrix) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let an = &a.entries * C64::new(1.0 / norm, 0.0);
    let mut sq = &an * &an;
    let t = sq.trace() / C64::new(a.size() as f64, 0.0);
    for i in 0..a.size() {
        sq[(i, i)] -= t;
    }
    max_abs(&sq)
}

/// Membership in the hyperquadric `A² ∈ ℝ·id`.
pub fn hyperquadric_member(a: &SuMatrix, tol: f64) -> bool {
    hyperquadric_residual(a) < tol
}

/// `i·U·diag(1_p, -1_p)·U†` with Haar `U`, `p = (n+2)/2`.
pub fn hyperquadric_sample(n: usize, seed: u64) -> Result<SuMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hyperquadric_sample_with(n, &mut rng)
}

pub fn hyperquadric_sample_with(n: usize, rng: &mut impl Rng) -> Result<SuMatrix> {
    if n < 2 {
        return Err(Error::usage(format!("n must be at least 2, got {n}")));
    }
    if n % 2 == 1 {
        return Err(Error::usage(format!(
            "the hyperquadric is {{0}} for odd n = {n}: a nonzero member needs equal eigenvalue multiplicities summing to n+2"
        )));
    }
    let size = n + 2;
    let p = size / 2;
    let u = haar_su(size, rng);
    let d = CMat::from_fn(size, size, |r, c| if r != c { C64::new(0.0, 0.0) } else if r < p { I } else { -I });
    let a = &u * d * u.adjoint();
    Ok(SuMatrix::project(n, &a))
}

/// Trace-form orthonormal basis of `su(n+2)`: off-diagonal real and imaginary
/// generators followed by the normalized diagonal ones.
pub fn su_basis(n: usize) -> Vec<SuMatrix> {
    let size = n + 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(size * size - 1);
    for j in 0..size {
        for k in j + 1..size {
            let mut a = CMat::zeros(size, size);
            a[(j, k)] = C64::new(s, 0.0);
            a[(k, j)] = C64::new(-s, 0.0);
            out.push(SuMatrix { n, entries: a });
            let mut b = CMat::zeros(size, size);
            b[(j, k)] = C64::new(0.0, s);
            b[(k, j)] = C64::new(0.0, s);
            out.push(SuMatrix { n, entries: b });
        }
    }
    for l in 1..size {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut a = CMat::zeros(size, size);
        for i in 0..l {
            a[(i, i)] = I * norm;
        }
        a[(l, l)] = I * (-(l as f64) * norm);
        out.push(SuMatrix { n, entries: a });
    }
    out
}

/// Coordinates of `A` in [`su_basis`].
pub fn su_coords(a: &SuMatrix, basis: &[SuMatrix]) -> Vec<f64> {
    basis.iter().map(|b| form_raw(&a.entries, &b.entries)).collect()
}

/// Outcome of the odd-`n` rigidity check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OddRigidityReport {
    pub n: usize,
    /// Eigenvalue multiplicity splits `(p, q)` with `p + q = n + 2` and `p - q = 0`.
    pub admissible_splits: Vec<(usize, usize)>,
    pub algebraic_argument: String,
    pub trials: usize,
    pub members_found: usize,
    pub min_residual: f64,
    pub passed: bool,
}

/// For odd `n` a nonzero `A` with `A² = -c·id` has eigenvalues `±i√c`; tracelessness
/// forces equal multiplicities `p = q`, impossible when `p + q = n + 2` is odd.
pub fn vanc_odd_check(n: usize, trials: usize, seed: u64) -> Result<OddRigidityReport> {
    if n % 2 == 0 || n < 2 {
        return Err(Error::usage(format!("odd-n rigidity check needs odd n ≥ 3, got {n}")));
    }
    let size = n + 2;
    let admissible_splits: Vec<(usize, usize)> = (0..=size).map(|p| (p, size - p)).filter(|&(p, q)| p == q).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members_found = 0;
    let mut min_residual = f64::INFINITY;
    for _ in 0..trials {
        let a = random_su_with(n, &mut rng);
        let r = hyperquadric_residual(&a);
        min_residual = min_residual.min(r);
        if r < 1e-6 {
            members_found += 1;
        }
    }
    let algebraic_argument = format!(
        "A^2 = -c id with c > 0 gives eigenvalues +-i sqrt(c) with multiplicities p + q = {size}; tr A = 0 forces p = q; {} admissible splits",
        admissible_splits.len()
    );
    Ok(OddRigidityReport {
        n,
        passed: admissible_splits.is_empty() && members_found == 0,
        admissible_splits,
        algebraic_argument,
        trials,
        members_found,
        min_residual,
    })
}

/// On-disk matrix format, row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Reader tolerance for the JSON matrix format.
pub const JSON_TOL: f64 = 1e-9;

impl MatrixJson {
    pub fn from_su(a: &SuMatrix) -> Self {
        let s = a.size();
        Self {
            n: a.n,
            re: (0..s).map(|r| (0..s).map(|c| a.entries[(r, c)].re).collect()).collect(),
            im: (0..s).map(|r| (0..s).map(|c| a.entries[(r, c)].im).collect()).collect(),
        }
    }

    pub fn to_su(&self) -> Result<SuMatrix> {
        if self.n < 2 {
            return Err(Error::Invalid(format!("n must be at least 2, got {}", self.n)));
        }
        let s = self.n + 2;
        let ok = |m: &Vec<Vec<f64>>| m.len() == s && m.iter().all(|r| r.len() == s);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::Invalid(format!("re and im must be {s}x{s} for n = {}", self.n)));
        }
        let m = CMat::from_fn(s, s, |r, c| C64::new(self.re[r][c], self.im[r][c]));
        SuMatrix::with_tolerance(self.n, m, JSON_TOL)
    }

    pub fn parse(text: &str) -> Result<SuMatrix> {
        let j: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("malformed matrix JSON: {e}")))?;
        j.to_su()
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag_p0_oracle(a: &[f64]) -> f64 {
        // A = i diag(a): A³ = -i diag(a³), so Re tr(2iA³) = 2Σa³.
        2.0 * a.iter().map(|x| x * x * x).sum::<f64>()
    }

    #[test]
    fn trace_form_example() {
        let a = SuMatrix::diag(2, &[1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!((trace_form(&a, &a).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_su_is_valid_and_deterministic() {
        let a = random_su(2, 7).unwrap();
        let b = random_su(2, 7).unwrap();
        assert_eq!(a, b);
        SuMatrix::new(2, a.entries().clone()).unwrap();
        assert_eq!(random_su(3, 1).unwrap().size(), 5);
        assert!(random_su(1, 0).unwrap_err().is_usage());
    }

    #[test]
    fn p0_diagonal_cases() {
        let s = 0.3;
        let a = SuMatrix::diag(2, &[3.0 * s, -s, -s, -s]).unwrap();
        let v = cubic_p0(&a, &a, &a).unwrap();
        assert!((v - diag_p0_oracle(&[3.0 * s, -s, -s, -s])).abs() < 1e-13);
        assert!((v - 48.0 * s * s * s).abs() < 1e-13);
        let b = SuMatrix::diag(2, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(cubic_p0(&b, &b, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let a = SuMatrix::diag(2, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(hyperquadric_member(&a, HYPERQUADRIC_TOL));
        assert!(hyperquadric_member(&SuMatrix::zero(2), HYPERQUADRIC_TOL));
        let b = SuMatrix::diag(2, &[2.0, -1.0, -1.0, 0.0]).unwrap();
        assert!(!hyperquadric_member(&b, HYPERQUADRIC_TOL));
    }

    #[test]
    fn samples_are_members() {
        for seed in 0..20 {
            let a = hyperquadric_sample(2, seed).unwrap();
            assert!(hyperquadric_residual(&a) < 1e-12);
            let b = hyperquadric_sample(4, seed).unwrap();
            assert!(hyperquadric_residual(&b) < 1e-12);
            assert!(b.entries().trace().norm() < 1e-12);
        }
        assert!(hyperquadric_sample(3, 0).unwrap_err().is_usage());
    }

    #[test]
    fn haar_is_special_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for size in [2, 4, 5] {
            let u = haar_su(size, &mut rng);
            let id = CMat::identity(size, size);
            assert!(max_abs(&(u.adjoint() * &u - id)) < 1e-12);
            assert!((u.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        for n in 2..=4 {
            let b = su_basis(n);
            assert_eq!(b.len(), (n + 2) * (n + 2) - 1);
            for (i, x) in b.iter().enumerate() {
                SuMatrix::new(n, x.entries().clone()).unwrap();
                for (j, y) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((trace_form(x, y).unwrap() - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn odd_rigidity() {
        for n in [3, 5] {
            let r = vanc_odd_check(n, 1000, 0).unwrap();
            assert!(r.passed);
            assert_eq!(r.members_found, 0);
            assert!(r.admissible_splits.is_empty());
        }
        let r = vanc_odd_check(3, 0, 0).unwrap();
        assert!(r.passed && r.trials == 0);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let a = random_su(3, 2).unwrap();
        let text = MatrixJson::from_su(&a).to_string_pretty();
        assert_eq!(MatrixJson::parse(&text).unwrap(), a);
        let bad = r#"{"n":2,"re":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#;
        assert!(MatrixJson::parse(bad).is_err());
        assert!(MatrixJson::parse("{").is_err());
    }

    #[test]
    fn zero_locus_of_p0_is_hyperquadric() {
        let basis = su_basis(2);
        for seed in 0..10 {
            let a = hyperquadric_sample(2, seed).unwrap().scale(0.7);
            let n3 = a.norm().powi(3);
            let worst = basis.iter().map(|b| cubic_p0(&a, &a, b).unwrap().abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10 * n3);
        }
        for n in [2, 3] {
            let basis = su_basis(n);
            for seed in 0..100 {
                let a = random_su(n, 1000 + seed).unwrap();
                assert!(!hyperquadric_member(&a, HYPERQUADRIC_TOL));
                let worst = basis.iter().map(|b| cubic_p0(&a, &a, b).unwrap().abs()).fold(0.0, f64::max);
                assert!(worst > 1e-3 * a.norm().powi(3));
            }
        }
    }

    proptest! {
        #[test]
        fn p0_is_symmetric_and_invariant(s in 0u64..10_000) {
            let a = random_su(3, s).unwrap();
            let b = random_su(3, s + 1).unwrap();
            let c = random_su(3, s + 2).unwrap();
            let x = random_su(3, s + 3).unwrap();
            let v = cubic_p0(&a, &b, &c).unwrap();
            for (p, q, r) in [(&a, &c, &b), (&b, &a, &c), (&b, &c, &a), (&c, &a, &b), (&c, &b, &a)] {
                prop_assert!((cubic_p0(p, q, r).unwrap() - v).abs() < 1e-12);
            }
            let inv = cubic_p0(&x.bracket(&a), &b, &c).unwrap()
                + cubic_p0(&a, &x.bracket(&b), &c).unwrap()
                + cubic_p0(&a, &b, &x.bracket(&c)).unwrap();
            prop_assert!(inv.abs() < 1e-10);
            let ad = trace_form(&c.bracket(&a), &b).unwrap() + trace_form(&a, &c.bracket(&b)).unwrap();
            prop_assert!(ad.abs() < 1e-12);
            prop_assert!((trace_form(&a, &b).unwrap() - trace_form(&b, &a).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn membership_is_scale_invariant(s in 0u64..1000, lam in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
            let a = hyperquadric_sample(2, s).unwrap();
            prop_assert!(hyperquadric_member(&a.scale(lam), HYPERQUADRIC_TOL));
            let b = random_su(2, s).unwrap();
            prop_assert!(!hyperquadric_member(&b.scale(lam), HYPERQUADRIC_TOL));
        }
    }
}
