//! Dense exterior forms on an oriented orthonormal model space.
//!
//! A k-form in dimension d is stored by its coefficients on
//! `e^{i1}∧…∧e^{ik}` with `i1 < … < ik`, ordered colexicographically. In this
//! order a subset, read as a bitmask, has rank `Σ_t C(i_t, t+1)`, and the
//! subsets of `{0..d}` form a prefix of those of any larger dimension.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 16;
/// Largest supported degree; degree-5 pairings occur in the obstruction integrand.
pub const MAX_DEGREE: usize = 6;

fn binom_table() -> &'static [[usize; MAX_DIM + 1]; MAX_DIM + 1] {
    static T: OnceLock<[[usize; MAX_DIM + 1]; MAX_DIM + 1]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0usize; MAX_DIM + 1]; MAX_DIM + 1];
        for n in 0..=MAX_DIM {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k <= n - 1 { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

/// Binomial coefficient `C(n, k)` for `n ≤ MAX_DIM`, zero when `k > n`.
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        binom_table()[n][k]
    }
}

fn mask_table() -> &'static Vec<Vec<u32>> {
    static T: OnceLock<Vec<Vec<u32>>> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = vec![Vec::new(); MAX_DIM + 1];
        for mask in 0u32..(1u32 << MAX_DIM) {
            let k = mask.count_ones() as usize;
            if k <= MAX_DEGREE {
                t[k].push(mask);
            }
        }
        t
    })
}

/// Bitmasks of the basis k-forms in dimension `dim`, in storage order.
pub fn basis_masks(dim: usize, k: usize) -> &'static [u32] {
    &mask_table()[k][..binom(dim, k)]
}

/// Storage index of a bitmask.
#[inline]
pub fn rank(mask: u32) -> usize {
    let mut r = 0;
    let mut m = mask;
    let mut t = 0;
    while m != 0 {
        let pos = m.trailing_zeros() as usize;
        t += 1;
        r += binom(pos, t);
        m &= m - 1;
    }
    r
}

/// Sign of `e^A ∧ e^B` relative to `e^{A∪B}` for disjoint masks.
#[inline]
pub fn wedge_sign(a: u32, b: u32) -> i32 {
    let mut inversions = 0u32;
    let mut m = b;
    while m != 0 {
        let j = m.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        m &= m - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A k-form with dense coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct KForm<T> {
    dim: usize,
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Real> KForm<T> {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::usage(format!("form dimension {dim} exceeds {MAX_DIM}")));
        }
        if degree > MAX_DEGREE {
            return Err(Error::usage(format!("form degree {degree} exceeds {MAX_DEGREE}")));
        }
        Ok(Self { dim, degree, coeffs: vec![T::zero(); binom(dim, degree)] })
    }

    fn zeros(dim: usize, degree: usize) -> Self {
        Self::zero(dim, degree).expect("degree checked by caller")
    }

    /// The constant 0-form `c`.
    pub fn scalar(dim: usize, c: T) -> Self {
        let mut f = Self::zeros(dim, 0);
        f.coeffs[0] = c;
        f
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<T>) -> Result<Self> {
        let f = Self::zero(dim, degree)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::usage(format!(
                "expected {} coefficients for a {degree}-form in dimension {dim}, got {}",
                f.coeffs.len(),
                coeffs.len()
            )));
        }
        Ok(Self { dim, degree, coeffs })
    }

    /// The 1-form `Σ v_i e^i`.
    pub fn one_form(v: &[T]) -> Self {
        Self { dim: v.len(), degree: 1, coeffs: v.to_vec() }
    }

    /// The 2-form `Σ_{i<j} a[i][j] e^i∧e^j` read from a row-major square matrix.
    pub fn two_form_from_antisym(dim: usize, a: impl Fn(usize, usize) -> T) -> Self {
        let mut f = Self::zeros(dim, 2);
        for (idx, &mask) in basis_masks(dim, 2).iter().enumerate() {
            let i = mask.trailing_zeros() as usize;
            let j = 31 - mask.leading_zeros() as usize;
            f.coeffs[idx] = a(i, j);
        }
        f
    }

    /// The basis form `e^{i1}∧…∧e^{ik}` for strictly increasing indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut f = Self::zero(dim, indices.len())?;
        let mut mask = 0u32;
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::usage("basis indices must be strictly increasing"));
            }
        }
        for &i in indices {
            if i >= dim {
                return Err(Error::usage(format!("index {i} out of range for dimension {dim}")));
            }
            mask |= 1 << i;
        }
        f.coeffs[rank(mask)] = T::one();
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    /// Evaluation on basis vectors `e_{i1},…,e_{ik}` in any order.
    pub fn component(&self, indices: &[usize]) -> T {
        assert_eq!(indices.len(), self.degree, "component arity differs from degree");
        let mut sorted: Vec<usize> = indices.to_vec();
        let mut sign = 1i32;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                } else if sorted[j] == sorted[j + 1] {
                    return T::zero();
                }
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return T::zero();
        }
        let mask = sorted.iter().fold(0u32, |m, &i| m | (1 << i));
        let c = self.coeffs[rank(mask)];
        if sign > 0 {
            c
        } else {
            -c
        }
    }

    /// `F(e_i, e_j)` for a 2-form.
    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> T {
        debug_assert_eq!(self.degree, 2);
        if i == j {
            T::zero()
        } else if i < j {
            self.coeffs[rank((1 << i) | (1 << j))]
        } else {
            -self.coeffs[rank((1 << i) | (1 << j))]
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        self.check_same(other);
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    fn check_same(&self, other: &Self) {
        assert!(
            self.dim == other.dim && self.degree == other.degree,
            "form shape mismatch: ({}, {}) vs ({}, {})",
            self.dim,
            self.degree,
            other.dim,
            other.degree
        );
    }

    /// Inner product making the basis forms orthonormal.
    pub fn inner(&self, other: &Self) -> T {
        self.check_same(other);
        self.coeffs.iter().zip(&other.coeffs).fold(T::zero(), |s, (&a, &b)| s + a * b)
    }

    pub fn norm2(&self) -> T {
        self.inner(self)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    /// Exterior product; panics on degree overflow, see [`KForm::try_wedge`].
    pub fn wedge(&self, other: &Self) -> Self {
        self.try_wedge(other).expect("wedge degree within MAX_DEGREE")
    }

    pub fn try_wedge(&self, other: &Self) -> Result<Self> {
        assert_eq!(self.dim, other.dim, "wedge of forms on different spaces");
        let mut out = Self::zero(self.dim, self.degree + other.degree)?;
        if out.coeffs.is_empty() {
            return Ok(out);
        }
        let ma = basis_masks(self.dim, self.degree);
        let mb = basis_masks(other.dim, other.degree);
        for (ia, &a) in ma.iter().enumerate() {
            let ca = self.coeffs[ia];
            if ca == T::zero() {
                continue;
            }
            for (ib, &b) in mb.iter().enumerate() {
                let cb = other.coeffs[ib];
                if cb == T::zero() || a & b != 0 {
                    continue;
                }
                let v = ca * cb;
                let r = rank(a | b);
                if wedge_sign(a, b) > 0 {
                    out.coeffs[r] += v;
                } else {
                    out.coeffs[r] -= v;
                }
            }
        }
        Ok(out)
    }

    /// Interior product `e_i ⌟ self`.
    pub fn interior_basis(&self, i: usize) -> Self {
        let mut out = Self::zeros(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        let bit = 1u32 << i;
        for (idx, &mask) in basis_masks(self.dim, self.degree).iter().enumerate() {
            if mask & bit == 0 {
                continue;
            }
            let c = self.coeffs[idx];
            let below = (mask & (bit - 1)).count_ones();
            let r = rank(mask & !bit);
            if below % 2 == 0 {
                out.coeffs[r] += c;
            } else {
                out.coeffs[r] -= c;
            }
        }
        out
    }

    /// Interior product `v ⌟ self`.
    pub fn interior(&self, v: &[T]) -> Self {
        assert_eq!(v.len(), self.dim, "vector dimension differs from form dimension");
        let mut out = Self::zeros(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (idx, &mask) in basis_masks(self.dim, self.degree).iter().enumerate() {
            let c = self.coeffs[idx];
            if c == T::zero() {
                continue;
            }
            let mut m = mask;
            let mut below = 0u32;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                let term = v[i] * c;
                let r = rank(mask & !(1 << i));
                if below % 2 == 0 {
                    out.coeffs[r] += term;
                } else {
                    out.coeffs[r] -= term;
                }
                below += 1;
                m &= m - 1;
            }
        }
        out
    }

    /// Pullback `(M^*α)(X1,…,Xk) = α(M X1,…,M Xk)` by a row-major `dim×dim` matrix.
    pub fn pullback(&self, mat: &[T]) -> Self {
        let d = self.dim;
        assert_eq!(mat.len(), d * d, "pullback matrix has wrong size");
        let k = self.degree;
        let mut out = Self::zeros(d, k);
        let masks = basis_masks(d, k);
        let idx_of = |mask: u32| -> Vec<usize> { (0..d).filter(|i| mask & (1 << i) != 0).collect() };
        for (io, &mo) in masks.iter().enumerate() {
            let cols = idx_of(mo);
            let mut acc = T::zero();
            for (ia, &ma) in masks.iter().enumerate() {
                let c = self.coeffs[ia];
                if c == T::zero() {
                    continue;
                }
                let rows = idx_of(ma);
                let sub: Vec<T> = rows.iter().flat_map(|&r| cols.iter().map(move |&cc| mat[r * d + cc])).collect();
                acc += c * det(&sub, k);
            }
            out.coeffs[io] = acc;
        }
        out
    }
}

/// Determinant of a small row-major matrix by Gaussian elimination.
pub fn det<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut d = T::one();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x * n + c].abs().partial_cmp(&m[y * n + c].abs()).expect("finite pivot"));
        let p = match p {
            Some(p) => p,
            None => return d,
        };
        if m[p * n + c] == T::zero() {
            return T::zero();
        }
        if p != c {
            for j in 0..n {
                m.swap(p * n + j, c * n + j);
            }
            d = -d;
        }
        let piv = m[c * n + c];
        d *= piv;
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            for j in c..n {
                let v = m[c * n + j];
                m[r * n + j] -= f * v;
            }
        }
    }
    d
}

impl<T: Real> Add for &KForm<T> {
    type Output = KForm<T>;
    fn add(self, rhs: Self) -> KForm<T> {
        let mut out = self.clone();
        out.axpy(T::one(), rhs);
        out
    }
}

impl<T: Real> Sub for &KForm<T> {
    type Output = KForm<T>;
    fn sub(self, rhs: Self) -> KForm<T> {
        let mut out = self.clone();
        out.axpy(-T::one(), rhs);
        out
    }
}

impl<T: Real> Neg for &KForm<T> {
    type Output = KForm<T>;
    fn neg(self) -> KForm<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for &KForm<T> {
    type Output = KForm<T>;
    fn mul(self, s: T) -> KForm<T> {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_component(f: &KForm<f64>, idx: &[usize]) -> f64 {
        f.component(idx)
    }

    #[test]
    fn rank_enumerates_storage_order() {
        for k in 0..=4 {
            for (i, &m) in basis_masks(8, k).iter().enumerate() {
                assert_eq!(rank(m), i);
            }
        }
        assert_eq!(basis_masks(12, 4).len(), 495);
    }

    #[test]
    fn degree_overflow_is_usage_error() {
        let e = KForm::<f64>::zero(12, 7).unwrap_err();
        assert!(e.is_usage());
        let a = KForm::<f64>::zero(8, 4).unwrap();
        assert!(a.try_wedge(&a).is_err());
    }

    #[test]
    fn wedge_of_basis_one_forms_anticommutes() {
        let e1 = KForm::<f64>::basis(4, &[1]).unwrap();
        let e3 = KForm::<f64>::basis(4, &[3]).unwrap();
        let a = e1.wedge(&e3);
        let b = e3.wedge(&e1);
        assert_eq!(a.component(&[1, 3]), 1.0);
        assert_eq!(b.component(&[1, 3]), -1.0);
        assert_eq!(a.component(&[3, 1]), -1.0);
    }

    #[test]
    fn interior_of_two_form_is_first_slot() {
        // (e0∧e1)(e1, ·) = -e^0
        let f = KForm::<f64>::basis(3, &[0, 1]).unwrap();
        let g = f.interior_basis(1);
        assert_eq!(g.coeffs(), &[-1.0, 0.0, 0.0]);
    }

    fn rand_form(dim: usize, k: usize, seed: &[f64]) -> KForm<f64> {
        let n = binom(dim, k);
        KForm::from_coeffs(dim, k, (0..n).map(|i| seed[i % seed.len()] * ((i as f64) * 0.37).sin()).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn wedge_is_graded_commutative(s in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let a = rand_form(6, 2, &s);
            let b = rand_form(6, 3, &s[2..]);
            let ab = a.wedge(&b);
            let ba = b.wedge(&a);
            prop_assert!((&ab - &ba).max_abs() < 1e-12);
            let c = rand_form(6, 1, &s[1..]);
            let bc = b.wedge(&c);
            let cb = c.wedge(&b);
            prop_assert!((&bc + &cb).max_abs() < 1e-12);
        }

        #[test]
        fn interior_is_antiderivation(s in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let a = rand_form(5, 2, &s);
            let b = rand_form(5, 2, &s[3..]);
            let v: Vec<f64> = s[..5].to_vec();
            let lhs = a.wedge(&b).interior(&v);
            let rhs = &a.interior(&v).wedge(&b) + &a.wedge(&b.interior(&v));
            prop_assert!((&lhs - &rhs).max_abs() < 1e-12);
        }

        #[test]
        fn wedge_is_associative(s in proptest::collection::vec(-1.0f64..1.0, 7)) {
            let a = rand_form(6, 1, &s);
            let b = rand_form(6, 2, &s[1..]);
            let c = rand_form(6, 2, &s[2..]);
            let l = a.wedge(&b).wedge(&c);
            let r = a.wedge(&b.wedge(&c));
            prop_assert!((&l - &r).max_abs() < 1e-12);
        }

        #[test]
        fn pullback_matches_componentwise_evaluation(s in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let a = rand_form(4, 2, &s);
            let m: Vec<f64> = s.clone();
            let p = a.pullback(&m);
            for i in 0..4 {
                for j in 0..4 {
                    let mut want = 0.0;
                    for k in 0..4 {
                        for l in 0..4 {
                            want += m[k * 4 + i] * m[l * 4 + j] * brute_component(&a, &[k, l]);
                        }
                    }
                    prop_assert!((p.component(&[i, j]) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let e1 = KForm::<f32>::basis(4, &[0]).unwrap();
        let e2 = KForm::<f32>::basis(4, &[2]).unwrap();
        assert_eq!(e1.wedge(&e2).norm2(), 1.0f32);
    }
}
