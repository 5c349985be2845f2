//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar about a base point in
//! up to [`MAX_VARS`] chart coordinates and one deformation parameter `t`.
//! Space and `t` degrees are truncated independently. Every jet also carries
//! its *valid* space degree: a derivative lowers it by one and a product keeps
//! the minimum, so coefficients that were never computed exactly are zeroed
//! instead of silently used.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest number of chart coordinates a jet space supports.
pub const MAX_VARS: usize = 4;
/// Largest space order a jet space supports.
pub const MAX_ORDER: usize = 4;
/// Largest `t` order a jet space supports.
pub const MAX_T_ORDER: usize = 3;

/// Exponent vector of one monomial `x^s t^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mono {
    /// Space exponents (unused slots are 0).
    pub s: [u8; MAX_VARS],
    /// Exponent of `t`.
    pub t: u8,
}

impl Mono {
    /// Total space degree.
    pub fn degree(&self) -> usize {
        self.s.iter().map(|&e| e as usize).sum()
    }
}

/// Shape of a jet: variable count and truncation orders, with the
/// precomputed product and derivative tables shared by every jet of the shape.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    t_order: usize,
    monos: Vec<Mono>,
    index: HashMap<Mono, usize>,
    mul: Vec<(u32, u32, u32)>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    degree: Vec<u8>,
}

impl JetSpace {
    /// Shared jet space for the given shape.
    pub fn get(nvars: usize, order: usize, t_order: usize) -> Result<&'static JetSpace> {
        if nvars == 0 || nvars > MAX_VARS || order > MAX_ORDER || t_order > MAX_T_ORDER {
            return Err(Error::usage(format!(
                "jet space ({nvars} vars, order {order}, t order {t_order}) outside supported range"
            )));
        }
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), &'static JetSpace>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        let key = (nvars, order, t_order);
        if let Some(sp) = guard.get(&key) {
            return Ok(sp);
        }
        let sp: &'static JetSpace = Box::leak(Box::new(Self::build(nvars, order, t_order)));
        guard.insert(key, sp);
        Ok(sp)
    }

    fn build(nvars: usize, order: usize, t_order: usize) -> Self {
        let mut monos = Vec::new();
        let mut s = [0u8; MAX_VARS];
        enumerate(nvars, order, 0, &mut s, &mut |s| {
            for t in 0..=t_order {
                monos.push(Mono { s: *s, t: t as u8 });
            }
        });
        // Constant term first; otherwise graded by total degree.
        monos.sort_by_key(|m| (m.degree() + m.t as usize, m.t, std::cmp::Reverse(m.s)));
        let index: HashMap<Mono, usize> = monos.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut mul = Vec::new();
        for (a, ma) in monos.iter().enumerate() {
            for (b, mb) in monos.iter().enumerate() {
                if ma.degree() + mb.degree() > order || (ma.t + mb.t) as usize > t_order {
                    continue;
                }
                let mut s = [0u8; MAX_VARS];
                for k in 0..MAX_VARS {
                    s[k] = ma.s[k] + mb.s[k];
                }
                let c = index[&Mono { s, t: ma.t + mb.t }];
                mul.push((a as u32, b as u32, c as u32));
            }
        }
        let deriv = (0..nvars)
            .map(|v| {
                monos
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.degree() < order)
                    .map(|(a, m)| {
                        let mut s = m.s;
                        s[v] += 1;
                        let src = index[&Mono { s, t: m.t }];
                        (a as u32, src as u32, s[v] as f64)
                    })
                    .collect()
            })
            .collect();
        let degree = monos.iter().map(|m| m.degree() as u8).collect();
        JetSpace { nvars, order, t_order, monos, index, mul, deriv, degree }
    }

    /// Number of chart coordinates.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Space truncation order.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `t` truncation order.
    pub fn t_order(&self) -> usize {
        self.t_order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.monos.len()
    }

    /// Always false: the constant monomial is always present.
    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    /// Monomial list in storage order.
    pub fn monos(&self) -> &[Mono] {
        &self.monos
    }

    /// Storage index of a monomial, if representable.
    pub fn index_of(&self, m: &Mono) -> Option<usize> {
        self.index.get(m).copied()
    }
}

fn enumerate(
    nvars: usize,
    budget: usize,
    var: usize,
    s: &mut [u8; MAX_VARS],
    f: &mut impl FnMut(&[u8; MAX_VARS]),
) {
    if var == nvars {
        f(s);
        return;
    }
    for e in 0..=budget {
        s[var] = e as u8;
        enumerate(nvars, budget - e, var + 1, s, f);
    }
    s[var] = 0;
}

/// Truncated Taylor expansion of a scalar.
#[derive(Clone, Debug)]
pub struct Jet<T: Real> {
    sp: &'static JetSpace,
    valid: u8,
    c: Vec<T>,
}

impl<T: Real> Jet<T> {
    /// Constant jet.
    pub fn constant(sp: &'static JetSpace, v: T) -> Self {
        let mut c = vec![T::zero(); sp.len()];
        c[0] = v;
        Jet { sp, valid: sp.order as u8, c }
    }

    /// Zero jet.
    pub fn zero(sp: &'static JetSpace) -> Self {
        Self::constant(sp, T::zero())
    }

    /// Coordinate function `x_i` expanded about `x0`.
    pub fn var(sp: &'static JetSpace, i: usize, x0: T) -> Self {
        assert!(i < sp.nvars, "coordinate index {i} out of range");
        let mut j = Self::constant(sp, x0);
        if sp.order >= 1 {
            let mut s = [0u8; MAX_VARS];
            s[i] = 1;
            j.c[sp.index[&Mono { s, t: 0 }]] = T::one();
        }
        j
    }

    /// The deformation parameter `t`.
    pub fn t_var(sp: &'static JetSpace) -> Self {
        let mut j = Self::zero(sp);
        if sp.t_order >= 1 {
            j.c[sp.index[&Mono { s: [0; MAX_VARS], t: 1 }]] = T::one();
        }
        j
    }

    /// Jet space of this jet.
    pub fn space(&self) -> &'static JetSpace {
        self.sp
    }

    /// Highest space degree whose coefficients are exact.
    pub fn valid_order(&self) -> usize {
        self.valid as usize
    }

    /// Raw coefficients in storage order.
    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// Value at the base point and `t = 0`.
    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Coefficient of a monomial (0 if not representable).
    pub fn coeff(&self, m: &Mono) -> T {
        self.sp.index_of(m).map_or(T::zero(), |i| self.c[i])
    }

    /// `k`-th `t` derivative at `t = 0` of the value at the base point.
    pub fn t_derivative(&self, k: usize) -> T {
        let c = self.coeff(&Mono { s: [0; MAX_VARS], t: k as u8 });
        let mut fact = T::one();
        for i in 2..=k {
            fact *= T::c(i as f64);
        }
        c * fact
    }

    /// Space-and-`t` polynomial restricted to one `t` power, as a new jet with
    /// `t` stripped (same space shape). Used to split `t`-jets into layers.
    pub fn t_layer(&self, k: usize, target: &'static JetSpace) -> Self {
        debug_assert!(target.nvars == self.sp.nvars);
        let mut out = Self::zero(target);
        out.valid = self.valid.min(target.order as u8);
        for (i, m) in self.sp.monos.iter().enumerate() {
            if m.t as usize == k {
                if let Some(j) = target.index_of(&Mono { s: m.s, t: 0 }) {
                    if m.degree() <= out.valid as usize {
                        out.c[j] = self.c[i];
                    }
                }
            }
        }
        out
    }

    /// Exact partial derivative in chart coordinate `i`.
    pub fn d(&self, i: usize) -> Self {
        assert!(i < self.sp.nvars, "coordinate index {i} out of range");
        assert!(self.valid >= 1, "derivative of a jet with no exact first-order part");
        let mut c = vec![T::zero(); self.c.len()];
        let valid = self.valid.saturating_sub(1);
        for &(a, src, f) in &self.sp.deriv[i] {
            if self.sp.degree[a as usize] <= valid {
                c[a as usize] = self.c[src as usize] * T::c(f);
            }
        }
        Jet { sp: self.sp, valid, c }
    }

    /// Check that at least `k` further derivatives are exact.
    pub fn require_order(&self, k: usize) -> Result<()> {
        if (self.valid as usize) < k {
            return Err(Error::usage(format!(
                "jet valid to order {} but {k} derivatives requested",
                self.valid
            )));
        }
        Ok(())
    }

    fn truncate(&mut self) {
        if (self.valid as usize) < self.sp.order {
            for (i, &d) in self.sp.degree.iter().enumerate() {
                if d > self.valid {
                    self.c[i] = T::zero();
                }
            }
        }
    }

    /// Multiply by a scalar.
    pub fn scale(&self, s: T) -> Self {
        Jet { sp: self.sp, valid: self.valid, c: self.c.iter().map(|&x| x * s).collect() }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert!(std::ptr::eq(self.sp, o.sp), "jets from different spaces");
        let mut out = Jet {
            sp: self.sp,
            valid: self.valid.min(o.valid),
            c: self.c.iter().zip(&o.c).map(|(&a, &b)| f(a, b)).collect(),
        };
        out.truncate();
        out
    }

    /// Truncated product.
    pub fn mul_jet(&self, o: &Self) -> Self {
        debug_assert!(std::ptr::eq(self.sp, o.sp), "jets from different spaces");
        let mut c = vec![T::zero(); self.c.len()];
        for &(a, b, r) in &self.sp.mul {
            c[r as usize] += self.c[a as usize] * o.c[b as usize];
        }
        let mut out = Jet { sp: self.sp, valid: self.valid.min(o.valid), c };
        out.truncate();
        out
    }

    /// Nilpotent part `f − f(0)`.
    fn nilpotent(&self) -> Self {
        let mut u = self.clone();
        u.c[0] = T::zero();
        u
    }

    fn series_len(&self) -> usize {
        self.sp.order + self.sp.t_order
    }

    /// Truncated reciprocal; errors on a vanishing constant term.
    pub fn recip(&self) -> Result<Self> {
        let f0 = self.c[0];
        if f0 == T::zero() || !f0.is_finite() {
            return Err(Error::Numerical("reciprocal of a jet with zero constant term".into()));
        }
        let u = self.nilpotent().scale(T::one() / f0);
        // 1/(1+u) = 1 − u(1 − u(1 − …)), exact once u^K vanishes.
        let one = Self::constant(self.sp, T::one());
        let mut r = one.clone();
        for _ in 0..self.series_len() {
            r = &one - &u.mul_jet(&r);
        }
        Ok(r.scale(T::one() / f0))
    }

    /// Truncated quotient.
    pub fn div_jet(&self, o: &Self) -> Result<Self> {
        Ok(self.mul_jet(&o.recip()?))
    }

    /// Truncated sine and cosine, computed together.
    pub fn sin_cos(&self) -> (Self, Self) {
        let (s0, c0) = self.c[0].sin_cos();
        let u = self.nilpotent();
        // Taylor series of sin u and cos u about 0.
        let mut su = Self::zero(self.sp);
        let mut cu = Self::constant(self.sp, T::one());
        let mut pow = Self::constant(self.sp, T::one());
        let mut fact = T::one();
        for k in 1..=self.series_len() {
            pow = pow.mul_jet(&u);
            fact *= T::c(k as f64);
            let term = pow.scale(T::one() / fact);
            match k % 4 {
                1 => su += &term,
                2 => cu -= &term,
                3 => su -= &term,
                _ => cu += &term,
            }
        }
        let sin = &su.scale(c0) + &cu.scale(s0);
        let cos = &cu.scale(c0) - &su.scale(s0);
        let valid = self.valid;
        let fix = |mut j: Self| {
            j.valid = valid;
            j.truncate();
            j
        };
        (fix(sin), fix(cos))
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, k: u32) -> Self {
        let mut r = Self::constant(self.sp, T::one());
        r.valid = self.valid;
        for _ in 0..k {
            r = r.mul_jet(self);
        }
        r
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> T {
        self.c.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

impl<'a, T: Real> Add for &'a Jet<T> {
    type Output = Jet<T>;
    fn add(self, o: Self) -> Jet<T> {
        self.zip(o, |a, b| a + b)
    }
}

impl<'a, T: Real> Sub for &'a Jet<T> {
    type Output = Jet<T>;
    fn sub(self, o: Self) -> Jet<T> {
        self.zip(o, |a, b| a - b)
    }
}

impl<'a, T: Real> Mul for &'a Jet<T> {
    type Output = Jet<T>;
    fn mul(self, o: Self) -> Jet<T> {
        self.mul_jet(o)
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Jet<T>;
    fn add(self, o: Self) -> Jet<T> {
        &self + &o
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Jet<T>;
    fn sub(self, o: Self) -> Jet<T> {
        &self - &o
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, o: Self) -> Jet<T> {
        self.mul_jet(&o)
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<'a, T: Real> Neg for &'a Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<'a, T: Real> AddAssign<&'a Jet<T>> for Jet<T> {
    fn add_assign(&mut self, o: &'a Jet<T>) {
        *self = &*self + o;
    }
}

impl<'a, T: Real> SubAssign<&'a Jet<T>> for Jet<T> {
    fn sub_assign(&mut self, o: &'a Jet<T>) {
        *self = &*self - o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(n: usize, o: usize, t: usize) -> &'static JetSpace {
        JetSpace::get(n, o, t).unwrap()
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(sp(3, 3, 2).len(), 20 * 3);
        assert_eq!(sp(4, 3, 0).len(), 35);
        assert!(JetSpace::get(5, 3, 0).is_err());
    }

    #[test]
    fn polynomial_derivatives_are_exact() {
        let s = sp(2, 3, 0);
        let x = Jet::<f64>::var(s, 0, 0.5);
        let y = Jet::<f64>::var(s, 1, -1.5);
        // f = x²y + 3y³
        let f = &(&x * &x) * &y + (&(&y * &y) * &y).scale(3.0);
        assert_relative_eq!(f.value(), 0.25 * -1.5 + 3.0 * (-1.5f64).powi(3));
        assert_relative_eq!(f.d(0).value(), 2.0 * 0.5 * -1.5);
        assert_relative_eq!(f.d(1).value(), 0.25 + 9.0 * 2.25);
        assert_relative_eq!(f.d(1).d(1).value(), 18.0 * -1.5);
        assert_relative_eq!(f.d(0).d(0).d(1).value(), 2.0);
        assert_eq!(f.d(0).d(1).d(1).valid_order(), 0);
        assert!(f.d(0).d(1).d(1).require_order(1).is_err());
    }

    #[test]
    fn reciprocal_and_trig_match_closed_forms() {
        let s = sp(1, 3, 0);
        let x = Jet::<f64>::var(s, 0, 0.7);
        let r = (&x * &x + Jet::constant(s, 1.0)).recip().unwrap();
        // d/dx 1/(1+x²) = −2x/(1+x²)²
        let q = 1.0 + 0.49;
        assert_relative_eq!(r.d(0).value(), -1.4 / (q * q), epsilon = 1e-14);
        assert_relative_eq!(r.d(0).d(0).value(), (6.0 * 0.49 - 2.0) / (q * q * q), epsilon = 1e-13);
        let (sn, cs) = x.scale(2.0).sin_cos();
        assert_relative_eq!(sn.d(0).d(0).d(0).value(), -8.0 * 1.4f64.cos(), epsilon = 1e-13);
        assert_relative_eq!(cs.d(0).value(), -2.0 * 1.4f64.sin(), epsilon = 1e-14);
        assert!(Jet::<f64>::zero(s).recip().is_err());
    }

    #[test]
    fn t_derivatives() {
        let s = sp(1, 2, 2);
        let x = Jet::<f64>::var(s, 0, 0.3);
        let t = Jet::<f64>::t_var(s);
        // f = 1/(1 + t x)
        let f = (Jet::constant(s, 1.0) + &t * &x).recip().unwrap();
        assert_relative_eq!(f.t_derivative(1), -0.3);
        assert_relative_eq!(f.t_derivative(2), 2.0 * 0.09, epsilon = 1e-15);
        let layer = f.t_layer(1, sp(1, 2, 0));
        assert_relative_eq!(layer.d(0).value(), -1.0);
    }

    fn close(a: &Jet<f64>, b: &Jet<f64>, tol: f64) -> bool {
        a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    /// c₀ + c₁x + c₂y + c₃xy + c₄sin x, a jet with every coefficient populated.
    fn sample(s: &'static JetSpace, p: (f64, f64), c: &[f64]) -> Jet<f64> {
        let x = Jet::var(s, 0, p.0);
        let y = Jet::var(s, 1, p.1);
        Jet::constant(s, c[0]) + x.scale(c[1]) + y.scale(c[2]) + (&x * &y).scale(c[3]) + x.sin_cos().0.scale(c[4])
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn product_is_commutative_and_leibniz(
            p in (-2.0f64..2.0, -2.0f64..2.0),
            ca in proptest::collection::vec(-1.0f64..1.0, 5),
            cb in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let s = sp(2, 3, 0);
            let (a, b) = (sample(s, p, &ca), sample(s, p, &cb));
            let ab = &a * &b;
            proptest::prop_assert!(close(&ab, &(&b * &a), 1e-14));
            for i in 0..2 {
                let rhs = &a.d(i) * &b + &a * &b.d(i);
                proptest::prop_assert!((ab.d(i).value() - rhs.value()).abs() < 1e-12);
            }
        }

        #[test]
        fn division_inverts_multiplication(
            p in (-2.0f64..2.0, -2.0f64..2.0),
            ca in proptest::collection::vec(-1.0f64..1.0, 5),
            cb in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let s = sp(2, 3, 1);
            let a = sample(s, p, &ca);
            // Keep the divisor's value away from zero.
            let b = sample(s, p, &cb) + Jet::constant(s, 10.0);
            let q = (&a * &b).div_jet(&b).unwrap();
            proptest::prop_assert!(close(&q, &a, 1e-11));
        }
    }
}
