//! Serializable tensor field specifications.
//!
//! Torus fields are trigonometric polynomials with an explicit band limit;
//! ball fields are polynomials. Symmetric 2-tensors are stored as the
//! bilinear form `g(h·,·)` (upper triangle) plus a multiple of the metric, so
//! the endomorphism `h` is `g`-symmetric by construction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::PointGeometry;
use super::jet::{Jet, JetSpace};
use super::tensor::{Slot, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One Fourier mode `cos·cos(k·x) + sin·sin(k·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: Vec<i32>,
    pub cos: f64,
    pub sin: f64,
}

/// One monomial `coeff · x^exponents`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exponents: Vec<u8>,
    pub coeff: f64,
}

/// Scalar component function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum ScalarSpec {
    Fourier { band: u32, terms: Vec<FourierTerm> },
    Polynomial { degree: u32, terms: Vec<PolyTerm> },
}

/// Integer wave vectors in `[-band, band]^dim` up to sign, zero first.
pub fn half_lattice(dim: usize, band: u32) -> Vec<Vec<i32>> {
    let b = band as i32;
    let width = (2 * b + 1) as usize;
    let mut out = Vec::new();
    for code in 0..width.pow(dim as u32) {
        let mut c = code;
        let k: Vec<i32> = (0..dim)
            .map(|_| {
                let v = (c % width) as i32 - b;
                c /= width;
                v
            })
            .collect();
        // Keep k with first nonzero entry positive, and k = 0.
        match k.iter().find(|&&v| v != 0) {
            None => out.insert(0, k),
            Some(&v) if v > 0 => out.push(k),
            _ => {}
        }
    }
    out
}

fn monomials(dim: usize, degree: u32) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; dim];
    fn rec(dim: usize, var: usize, budget: u32, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if var == dim {
            out.push(cur.clone());
            return;
        }
        for e in 0..=budget {
            cur[var] = e as u8;
            rec(dim, var + 1, budget - e, cur, out);
        }
        cur[var] = 0;
    }
    rec(dim, 0, degree, &mut cur, &mut out);
    out
}

impl ScalarSpec {
    /// Constant function, stored as the zero mode so it counts as band 0.
    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarSpec::Fourier { band: 0, terms: vec![FourierTerm { k: vec![0; dim], cos: c, sin: 0.0 }] }
    }

    /// Random trigonometric polynomial with every mode up to `band`.
    pub fn random_fourier(dim: usize, band: u32, amplitude: f64, rng: &mut ChaCha8Rng) -> Self {
        let ks = half_lattice(dim, band);
        let a = amplitude / (ks.len() as f64).sqrt();
        let terms = ks
            .into_iter()
            .map(|k| {
                let zero = k.iter().all(|&v| v == 0);
                FourierTerm {
                    k,
                    cos: a * rng.gen_range(-1.0..1.0),
                    sin: if zero { 0.0 } else { a * rng.gen_range(-1.0..1.0) },
                }
            })
            .collect();
        ScalarSpec::Fourier { band, terms }
    }

    /// Random polynomial with every monomial up to `degree`.
    pub fn random_polynomial(dim: usize, degree: u32, amplitude: f64, rng: &mut ChaCha8Rng) -> Self {
        let terms = monomials(dim, degree)
            .into_iter()
            .map(|exponents| PolyTerm { exponents, coeff: amplitude * rng.gen_range(-1.0..1.0) })
            .collect();
        ScalarSpec::Polynomial { degree, terms }
    }

    /// Band limit of a trigonometric polynomial (`None` for polynomials).
    pub fn band(&self) -> Option<u32> {
        match self {
            ScalarSpec::Fourier { band, .. } => Some(*band),
            ScalarSpec::Polynomial { .. } => None,
        }
    }

    /// Checks dimensions and that the recorded band or degree is honest.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ScalarSpec::Fourier { band, terms } => {
                for t in terms {
                    if t.k.len() != dim {
                        return Err(Error::Invalid(format!("wave vector {:?} has wrong length", t.k)));
                    }
                    if t.k.iter().any(|&v| v.unsigned_abs() > *band) && (t.cos != 0.0 || t.sin != 0.0) {
                        return Err(Error::Invalid(format!("mode {:?} exceeds recorded band {band}", t.k)));
                    }
                }
            }
            ScalarSpec::Polynomial { degree, terms } => {
                for t in terms {
                    if t.exponents.len() != dim {
                        return Err(Error::Invalid("monomial exponent vector has wrong length".into()));
                    }
                    let deg: u32 = t.exponents.iter().map(|&e| e as u32).sum();
                    if deg > *degree && t.coeff != 0.0 {
                        return Err(Error::Invalid(format!("monomial of degree {deg} exceeds recorded degree {degree}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Jet of the function at the coordinate jets `x`.
    pub fn eval<T: Real>(&self, x: &[Jet<T>]) -> Jet<T> {
        let sp = x[0].space();
        let mut acc = Jet::zero(sp);
        match self {
            ScalarSpec::Fourier { terms, .. } => {
                for t in terms {
                    let mut phase = Jet::zero(sp);
                    for (xi, &ki) in x.iter().zip(&t.k) {
                        if ki != 0 {
                            phase += &xi.scale(T::c(ki as f64));
                        }
                    }
                    let (s, c) = phase.sin_cos();
                    acc += &c.scale(T::c(t.cos));
                    acc += &s.scale(T::c(t.sin));
                }
            }
            ScalarSpec::Polynomial { terms, .. } => {
                for t in terms {
                    let mut m = Jet::constant(sp, T::c(t.coeff));
                    for (xi, &e) in x.iter().zip(&t.exponents) {
                        if e > 0 {
                            m = m.mul_jet(&xi.powi(e as u32));
                        }
                    }
                    acc += &m;
                }
            }
        }
        acc
    }
}

/// Tensor type of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Vector,
    OneForm,
    Symmetric,
}

/// Jet-evaluable tensor field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub dim: usize,
    /// Scalar: 1 entry; vector and 1-form: `dim`; symmetric: upper triangle
    /// of `g(h·,·)` in row-major order.
    pub components: Vec<ScalarSpec>,
    /// Multiple of the identity added to a symmetric field.
    #[serde(default)]
    pub identity: f64,
}

/// Basis used for random fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Fourier { band: u32 },
    Polynomial { degree: u32 },
}

fn tri(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl FieldSpec {
    fn expected_len(kind: FieldKind, dim: usize) -> usize {
        match kind {
            FieldKind::Scalar => 1,
            FieldKind::Vector | FieldKind::OneForm => dim,
            FieldKind::Symmetric => dim * (dim + 1) / 2,
        }
    }

    /// Random field of the given kind.
    pub fn random(kind: FieldKind, dim: usize, basis: Basis, amplitude: f64, rng: &mut ChaCha8Rng) -> Self {
        let components = (0..Self::expected_len(kind, dim))
            .map(|_| match basis {
                Basis::Fourier { band } => ScalarSpec::random_fourier(dim, band, amplitude, rng),
                Basis::Polynomial { degree } => ScalarSpec::random_polynomial(dim, degree, amplitude, rng),
            })
            .collect();
        FieldSpec { kind, dim, components, identity: 0.0 }
    }

    /// `λ · id`.
    pub fn identity_multiple(dim: usize, lambda: f64) -> Self {
        FieldSpec {
            kind: FieldKind::Symmetric,
            dim,
            components: (0..dim * (dim + 1) / 2).map(|_| ScalarSpec::constant(dim, 0.0)).collect(),
            identity: lambda,
        }
    }

    /// Constant symmetric bilinear form (row-major `dim × dim`, symmetrized).
    pub fn constant_symmetric(dim: usize, m: &[f64]) -> Self {
        let mut components = Vec::new();
        for i in 0..dim {
            for j in i..dim {
                components.push(ScalarSpec::constant(dim, 0.5 * (m[i * dim + j] + m[j * dim + i])));
            }
        }
        FieldSpec { kind: FieldKind::Symmetric, dim, components, identity: 0.0 }
    }

    /// Divergence-free symmetric trigonometric field on the flat torus.
    ///
    /// Each mode's coefficient matrix `A` is replaced by `PAP` with
    /// `P = I − kkᵀ/|k|²`, so `A k = 0` and `∂_i h_ij = 0` exactly.
    pub fn divergence_free_torus(dim: usize, band: u32, amplitude: f64, rng: &mut ChaCha8Rng) -> Self {
        let ks = half_lattice(dim, band);
        let a = amplitude / (ks.len() as f64).sqrt();
        let n = dim * (dim + 1) / 2;
        let mut comps: Vec<Vec<FourierTerm>> = vec![Vec::new(); n];
        for k in &ks {
            let k2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
            let proj = |m: Vec<f64>| -> Vec<f64> {
                if k2 == 0.0 {
                    return m;
                }
                let p: Vec<f64> = (0..dim * dim)
                    .map(|q| {
                        let (i, j) = (q / dim, q % dim);
                        (if i == j { 1.0 } else { 0.0 }) - (k[i] * k[j]) as f64 / k2
                    })
                    .collect();
                let mul = |x: &[f64], y: &[f64]| -> Vec<f64> {
                    (0..dim * dim)
                        .map(|q| (0..dim).map(|l| x[(q / dim) * dim + l] * y[l * dim + q % dim]).sum())
                        .collect()
                };
                mul(&mul(&p, &m), &p)
            };
            let mut sym = || {
                let mut m = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in i..dim {
                        let v = a * rng.gen_range(-1.0..1.0);
                        m[i * dim + j] = v;
                        m[j * dim + i] = v;
                    }
                }
                m
            };
            let ca = proj(sym());
            let zero = k2 == 0.0;
            let sa = if zero { vec![0.0; dim * dim] } else { proj(sym()) };
            for i in 0..dim {
                for j in i..dim {
                    comps[tri(dim, i, j)].push(FourierTerm { k: k.clone(), cos: ca[i * dim + j], sin: sa[i * dim + j] });
                }
            }
        }
        FieldSpec {
            kind: FieldKind::Symmetric,
            dim,
            components: comps.into_iter().map(|terms| ScalarSpec::Fourier { band, terms }).collect(),
            identity: 0.0,
        }
    }

    /// Checks component count and every component.
    pub fn validate(&self) -> Result<()> {
        if self.components.len() != Self::expected_len(self.kind, self.dim) {
            return Err(Error::Invalid(format!(
                "{:?} field in dimension {} needs {} components, got {}",
                self.kind,
                self.dim,
                Self::expected_len(self.kind, self.dim),
                self.components.len()
            )));
        }
        self.components.iter().try_for_each(|c| c.validate(self.dim))
    }

    /// Largest band among components; `None` if any is polynomial.
    pub fn band(&self) -> Option<u32> {
        self.components.iter().try_fold(0, |m, c| c.band().map(|b| m.max(b)))
    }

    fn check_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::usage(format!("expected a {:?} field, got {:?}", kind, self.kind)));
        }
        Ok(())
    }

    /// Scalar field jet.
    pub fn scalar<T: Real>(&self, x: &[Jet<T>]) -> Result<Jet<T>> {
        self.check_kind(FieldKind::Scalar)?;
        Ok(self.components[0].eval(x))
    }

    /// Vector field components `X^i`.
    pub fn vector<T: Real>(&self, x: &[Jet<T>]) -> Result<Tensor<T>> {
        self.check_kind(FieldKind::Vector)?;
        Ok(Tensor::from_fn(self.dim, &[Slot::Up], |i| self.components[i[0]].eval(x)))
    }

    /// 1-form components `α_i`.
    pub fn one_form<T: Real>(&self, x: &[Jet<T>]) -> Result<Tensor<T>> {
        self.check_kind(FieldKind::OneForm)?;
        Ok(Tensor::from_fn(self.dim, &[Slot::Down], |i| self.components[i[0]].eval(x)))
    }

    /// Bilinear form `g(h·,·)` given the metric components at `x`.
    pub fn bilinear<T: Real>(&self, x: &[Jet<T>], metric: &[Jet<T>]) -> Result<Tensor<T>> {
        self.check_kind(FieldKind::Symmetric)?;
        let comps: Vec<Jet<T>> = self.components.iter().map(|c| c.eval(x)).collect();
        let d = self.dim;
        Ok(Tensor::from_fn(d, &[Slot::Down, Slot::Down], |ix| {
            let mut v = comps[tri(d, ix[0], ix[1])].clone();
            if self.identity != 0.0 {
                v += &metric[ix[0] * d + ix[1]].scale(T::c(self.identity));
            }
            v
        }))
    }

    /// Endomorphism `h` at the geometry's point.
    pub fn endo<T: Real>(&self, geo: &PointGeometry<T>, x: &[Jet<T>]) -> Result<Tensor<T>> {
        let g = geo.metric().components().to_vec();
        Ok(geo.endo_from_bilinear(&self.bilinear(x, &g)?))
    }
}

/// Coordinate jets `x_i` about `x0`.
pub fn coordinates<T: Real>(sp: &'static JetSpace, x0: &[f64]) -> Vec<Jet<T>> {
    x0.iter().enumerate().map(|(i, &v)| Jet::var(sp, i, T::c(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn half_lattice_counts() {
        assert_eq!(half_lattice(3, 1).len(), 14);
        assert_eq!(half_lattice(1, 2), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn specs_roundtrip_and_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = FieldSpec::random(FieldKind::Symmetric, 3, Basis::Fourier { band: 1 }, 1.0, &mut rng);
        f.validate().unwrap();
        assert_eq!(f.band(), Some(1));
        let s = serde_json::to_string(&f).unwrap();
        let back: FieldSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let mut bad = f.clone();
        if let ScalarSpec::Fourier { band, .. } = &mut bad.components[0] {
            *band = 0;
        }
        assert!(bad.validate().is_err());
    }
}
