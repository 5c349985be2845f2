//! Hermitian and quaternionic model spaces with their canonical forms and projectors.
//!
//! A 2-form `F` corresponds to the skew endomorphism `F̂` with
//! `F(X, Y) = g(F̂X, Y)`; under this identification `g(F, G) = -½ tr(F̂Ĝ)`.

use super::forms::KForm;
use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Square matrix over the model scalar.
pub type Mat<T> = DMatrix<T>;

/// Orthonormal model `(ℝ^{2m}, g, J)` with an optional quaternionic triple commuting with `J`.
#[derive(Debug, Clone)]
pub struct HermitianModel<T: Real> {
    dim: usize,
    j: Mat<T>,
    triple: Option<[Mat<T>; 3]>,
    omega_j: KForm<T>,
    omegas: Option<[KForm<T>; 3]>,
    kraines: Option<KForm<T>>,
    kraines_tilde: Option<KForm<T>>,
}

fn max_abs<T: Real>(m: &Mat<T>) -> T {
    m.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

impl<T: Real> HermitianModel<T> {
    /// Builds a model after validating `J² = -1`, skewness and the triple relations.
    pub fn new(j: Mat<T>, triple: Option<[Mat<T>; 3]>) -> Result<Self> {
        let dim = j.nrows();
        if dim == 0 || dim % 2 != 0 || j.ncols() != dim {
            return Err(Error::Construction(format!("complex structure must be square of even size, got {dim}")));
        }
        let tol = T::c(1e-9);
        let id = Mat::<T>::identity(dim, dim);
        let neg_id = -&id;
        let check = |name: &str, r: T| -> Result<()> {
            if r < tol {
                Ok(())
            } else {
                Err(Error::Construction(format!("{name} violated by {r:e}")))
            }
        };
        check("J^2 = -1", max_abs(&(&j * &j - &neg_id)))?;
        check("J skew", max_abs(&(&j + j.transpose())))?;
        if let Some(t) = &triple {
            for (a, ia) in t.iter().enumerate() {
                check(&format!("I{}^2 = -1", a + 1), max_abs(&(ia * ia - &neg_id)))?;
                check(&format!("I{} skew", a + 1), max_abs(&(ia + ia.transpose())))?;
                check(&format!("[I{}, J] = 0", a + 1), max_abs(&(ia * &j - &j * ia)))?;
            }
            check("I1 I2 = I3", max_abs(&(&t[0] * &t[1] - &t[2])))?;
            check("I2 I1 = -I3", max_abs(&(&t[1] * &t[0] + &t[2])))?;
        }
        let omega_j = form_of(&j);
        let omegas = triple.as_ref().map(|t| [form_of(&t[0]), form_of(&t[1]), form_of(&t[2])]);
        let m = dim / 2;
        let kraines = omegas.as_ref().map(|w| {
            let mut k = w[0].wedge(&w[0]);
            k.axpy(T::one(), &w[1].wedge(&w[1]));
            k.axpy(T::one(), &w[2].wedge(&w[2]));
            k
        });
        let kraines_tilde = kraines.as_ref().map(|k| {
            let mut t = omega_j.wedge(&omega_j);
            t.axpy(T::c((m as f64 - 1.0) / 3.0), k);
            t
        });
        Ok(Self { dim, j, triple, omega_j, omegas, kraines, kraines_tilde })
    }

    /// Flat Kähler model `ℂ^m` with `J e_{2k} = e_{2k+1}`.
    pub fn kahler_standard(m: usize) -> Result<Self> {
        let dim = 2 * m;
        let mut j = Mat::<T>::zeros(dim, dim);
        for k in 0..m {
            j[(2 * k + 1, 2 * k)] = T::one();
            j[(2 * k, 2 * k + 1)] = -T::one();
        }
        Self::new(j, None)
    }

    /// Quaternionic model `ℍ^n ≅ M_{n×2}(ℂ)`: `J X = iX`, `I_a X = X q_a` with `q_a = iσ_a`.
    ///
    /// Real coordinates: entry `(r, c)` has complex index `k = 2r + c`, stored at
    /// `2k` (real part) and `2k + 1` (imaginary part).
    pub fn quaternionic_standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("quaternionic dimension must be positive"));
        }
        let dim = 4 * n;
        // q_a = i σ_a as 2×2 complex matrices (re, im) row-major.
        let q: [[(f64, f64); 4]; 3] = [
            [(0.0, 0.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.0)],
            [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)],
            [(0.0, 1.0), (0.0, 0.0), (0.0, 0.0), (0.0, -1.0)],
        ];
        let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
        let apply = |f: &dyn Fn(&[(f64, f64)]) -> Vec<(f64, f64)>| -> Mat<T> {
            let mut out = Mat::<T>::zeros(dim, dim);
            for col in 0..dim {
                let mut x = vec![(0.0, 0.0); 2 * n];
                if col % 2 == 0 {
                    x[col / 2].0 = 1.0;
                } else {
                    x[col / 2].1 = 1.0;
                }
                let y = f(&x);
                for (k, v) in y.iter().enumerate() {
                    out[(2 * k, col)] = T::c(v.0);
                    out[(2 * k + 1, col)] = T::c(v.1);
                }
            }
            out
        };
        let j = apply(&|x| x.iter().map(|&v| cmul((0.0, 1.0), v)).collect());
        let right = |qa: [(f64, f64); 4]| {
            apply(&move |x: &[(f64, f64)]| {
                let mut y = vec![(0.0, 0.0); 2 * n];
                for r in 0..n {
                    for c in 0..2 {
                        let mut acc = (0.0, 0.0);
                        for l in 0..2 {
                            let p = cmul(x[2 * r + l], qa[2 * l + c]);
                            acc = (acc.0 + p.0, acc.1 + p.1);
                        }
                        y[2 * r + c] = acc;
                    }
                }
                y
            })
        };
        let triple = [right(q[0]), right(q[1]), right(q[2])];
        Self::new(j, Some(triple))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Complex dimension `m`.
    pub fn m(&self) -> usize {
        self.dim / 2
    }

    pub fn j(&self) -> &Mat<T> {
        &self.j
    }

    pub fn triple(&self) -> Result<&[Mat<T>; 3]> {
        self.triple.as_ref().ok_or_else(|| Error::usage("model has no quaternionic triple"))
    }

    pub fn has_triple(&self) -> bool {
        self.triple.is_some()
    }

    /// `ω_J = g(J·,·)`.
    pub fn omega_j(&self) -> &KForm<T> {
        &self.omega_j
    }

    /// `ω_a = g(I_a·,·)` for `a ∈ {0,1,2}`.
    pub fn omegas(&self) -> Result<&[KForm<T>; 3]> {
        self.omegas.as_ref().ok_or_else(|| Error::usage("model has no quaternionic triple"))
    }

    /// Kraines form `Ω = Σ ω_a∧ω_a`.
    pub fn kraines(&self) -> Result<&KForm<T>> {
        self.kraines.as_ref().ok_or_else(|| Error::usage("model has no quaternionic triple"))
    }

    /// `Ω̃ = ω_J² + ((m-1)/3) Ω`.
    pub fn kraines_tilde(&self) -> Result<&KForm<T>> {
        self.kraines_tilde.as_ref().ok_or_else(|| Error::usage("model has no quaternionic triple"))
    }

    /// `Ω̂ = Ω + ω_J²`.
    pub fn kraines_hat(&self) -> Result<KForm<T>> {
        let mut k = self.kraines()?.clone();
        k.axpy(T::one(), &self.omega_j.wedge(&self.omega_j));
        Ok(k)
    }

    /// `L*_F α = ½ Σ_i (F̂ e_i) ⌟ e_i ⌟ α`, adjoint of `α ↦ F∧α`.
    pub fn lstar(&self, f: &KForm<T>, alpha: &KForm<T>) -> KForm<T> {
        assert_eq!(f.degree(), 2, "L* requires a 2-form");
        let d = self.dim;
        let mut out = KForm::zero(d, alpha.degree().saturating_sub(2)).expect("lower degree");
        if alpha.degree() < 2 {
            return out;
        }
        let half = T::c(0.5);
        for i in 0..d {
            let inner = alpha.interior_basis(i);
            let fe: Vec<T> = (0..d).map(|jj| f.at2(i, jj)).collect();
            if fe.iter().all(|&x| x == T::zero()) {
                continue;
            }
            out.axpy(half, &inner.interior(&fe));
        }
        out
    }

    /// `ι_h α = Σ_k (h e_k)^♭ ∧ (e_k ⌟ α)`.
    pub fn iota(&self, h: &Mat<T>, alpha: &KForm<T>) -> KForm<T> {
        let d = self.dim;
        let mut out = KForm::zero(d, alpha.degree()).expect("same degree");
        for k in 0..d {
            let he: Vec<T> = (0..d).map(|jj| h[(jj, k)]).collect();
            let inner = alpha.interior_basis(k);
            out.axpy(T::one(), &KForm::one_form(&he).wedge(&inner));
        }
        out
    }

    /// `C(h) = Σ_a I_a h I_a`.
    pub fn c_op(&self, h: &Mat<T>) -> Result<Mat<T>> {
        let t = self.triple()?;
        Ok(t.iter().fold(Mat::<T>::zeros(self.dim, self.dim), |acc, ia| acc + ia * h * ia))
    }

    /// Projection onto `Λ^{1,1}`: `F̂ ↦ ½(F̂ - J F̂ J)`.
    pub fn proj_11(&self, f: &KForm<T>) -> KForm<T> {
        let e = endo_of(f);
        let p = (&e - &self.j * &e * &self.j) * T::c(0.5);
        form_of(&p)
    }

    /// Removes the `ω_J` component.
    pub fn proj_prim(&self, f: &KForm<T>) -> KForm<T> {
        let c = f.inner(&self.omega_j) / T::c(self.m() as f64);
        let mut out = f.clone();
        out.axpy(-c, &self.omega_j);
        out
    }

    /// Projection onto `Λ^{1,1}_0`.
    pub fn proj_110(&self, f: &KForm<T>) -> KForm<T> {
        self.proj_prim(&self.proj_11(f))
    }

    /// `F_Q = (1/m) Σ_a g(F, ω_a) ω_a`.
    pub fn proj_q(&self, f: &KForm<T>) -> Result<KForm<T>> {
        let w = self.omegas()?;
        let inv_m = T::one() / T::c(self.m() as f64);
        let mut out = KForm::zero(self.dim, 2).expect("2-forms");
        for wa in w {
            out.axpy(f.inner(wa) * inv_m, wa);
        }
        Ok(out)
    }

    /// Projection onto `Λ²_sp`, the 2-forms commuting with every `I_a`: `¼(F̂ - C F̂)`.
    pub fn proj_sp(&self, f: &KForm<T>) -> Result<KForm<T>> {
        let e = endo_of(f);
        let c = self.c_op(&e)?;
        Ok(form_of(&((&e - &c) * T::c(0.25))))
    }

    /// `F_𝔼`: projection onto `Λ^{1,1}_0 ∩ Λ²_sp`.
    pub fn proj_e(&self, f: &KForm<T>) -> Result<KForm<T>> {
        Ok(self.proj_prim(&self.proj_sp(&self.proj_11(f))?))
    }

    /// `F_𝔽`: the rest of `Λ^{1,1}_0`.
    pub fn proj_f(&self, f: &KForm<T>) -> Result<KForm<T>> {
        let mut out = self.proj_110(f);
        out.axpy(-T::one(), &self.proj_e(f)?);
        out.axpy(-T::one(), &self.proj_q(f)?);
        Ok(out)
    }

    /// Projection of a symmetric endomorphism onto `S^{2,±}` (`hJ = ±Jh`).
    pub fn proj_sym_type(&self, h: &Mat<T>, plus: bool) -> Mat<T> {
        let jhj = &self.j * h * &self.j;
        if plus {
            (h - jhj) * T::c(0.5)
        } else {
            (h + jhj) * T::c(0.5)
        }
    }

    /// `J` acting on forms by `(Jβ)(X,…) = β(JX,…)`.
    pub fn j_on_form(&self, beta: &KForm<T>) -> KForm<T> {
        let d = self.dim;
        let m: Vec<T> = (0..d * d).map(|idx| self.j[(idx / d, idx % d)]).collect();
        beta.pullback(&m)
    }

    /// `J` acting on a 1-form covector: `(Jα)(Y) = α(JY)`.
    pub fn j_on_covector(&self, a: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d).map(|y| (0..d).fold(T::zero(), |s, r| s + a[r] * self.j[(r, y)])).collect()
    }

    /// `J v` for a vector.
    pub fn j_vec(&self, v: &[T]) -> Vec<T> {
        mat_vec(&self.j, v)
    }

    /// `v^♭ ∧ (Jv)^♭`.
    pub fn v_wedge_jv(&self, v: &[T]) -> KForm<T> {
        KForm::one_form(v).wedge(&KForm::one_form(&self.j_vec(v)))
    }
}

/// 2-form of an endomorphism: `F(e_i, e_j) = g(M e_i, e_j) = M[j][i]`.
pub fn form_of<T: Real>(m: &Mat<T>) -> KForm<T> {
    KForm::two_form_from_antisym(m.nrows(), |i, j| m[(j, i)])
}

/// Skew endomorphism of a 2-form, inverse of [`form_of`] on skew matrices.
pub fn endo_of<T: Real>(f: &KForm<T>) -> Mat<T> {
    let d = f.dim();
    Mat::from_fn(d, d, |r, c| f.at2(c, r))
}

pub fn mat_vec<T: Real>(m: &Mat<T>, v: &[T]) -> Vec<T> {
    let d = v.len();
    (0..m.nrows()).map(|r| (0..d).fold(T::zero(), |s, c| s + m[(r, c)] * v[c])).collect()
}

/// `g(h1, h2) = tr(h1ᵀ h2)` on endomorphisms.
pub fn endo_inner<T: Real>(a: &Mat<T>, b: &Mat<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// `{a, b} = ab + ba`.
pub fn anticomm<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a * b + b * a
}

/// Max-abs entry of a matrix.
pub fn mat_max_abs<T: Real>(m: &Mat<T>) -> T {
    max_abs(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, d: usize) -> Mat<f64> {
        Mat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn standard_models_validate() {
        for n in 1..=3 {
            let q = HermitianModel::<f64>::quaternionic_standard(n).unwrap();
            assert_eq!(q.dim(), 4 * n);
        }
        HermitianModel::<f64>::kahler_standard(3).unwrap();
        HermitianModel::<f32>::quaternionic_standard(2).unwrap();
    }

    #[test]
    fn form_endo_roundtrip_and_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_mat(&mut rng, 6);
        let s = &a - a.transpose();
        let f = form_of(&s);
        assert!((endo_of(&f) - &s).amax() < 1e-14);
        let b = rand_mat(&mut rng, 6);
        let t = &b - b.transpose();
        let g = form_of(&t);
        let want = -0.5 * (&s * &t).trace();
        assert!((f.inner(&g) - want).abs() < 1e-12);
    }

    #[test]
    fn lstar_omega_omega_is_m() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let w = q.omega_j();
        let v = q.lstar(w, w);
        assert!((v.coeffs()[0] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn lstar_is_adjoint_of_wedge() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = form_of(&{
            let a = rand_mat(&mut rng, 8);
            &a - a.transpose()
        });
        let alpha = KForm::from_coeffs(8, 2, (0..28).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let beta = KForm::from_coeffs(8, 4, (0..70).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let l = f.wedge(&alpha).inner(&beta);
        let r = alpha.inner(&q.lstar(&f, &beta));
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn iota_is_self_adjoint_for_symmetric_h() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = rand_mat(&mut rng, 8);
        let h = &a + a.transpose();
        for k in 1..=4 {
            let n = crate::tensor_alg::forms::binom(8, k);
            let x = KForm::from_coeffs(8, k, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let y = KForm::from_coeffs(8, k, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            assert!((q.iota(&h, &x).inner(&y) - x.inner(&q.iota(&h, &y))).abs() < 1e-12);
        }
    }

    #[test]
    fn c_of_sp_type_endomorphism_is_minus_three() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = q.triple().unwrap().clone();
        // Averaging over the group generated by the triple yields an endomorphism commuting with it.
        let a = rand_mat(&mut rng, 8);
        let mut h = a.clone();
        for ia in &t {
            h -= ia * &a * ia;
        }
        for ia in &t {
            assert!((ia * &h - &h * ia).amax() < 1e-12);
        }
        let c = q.c_op(&h).unwrap();
        assert!((c + &h * 3.0).amax() < 1e-12);
    }

    #[test]
    fn projectors_are_orthogonal_and_complete() {
        let q = HermitianModel::<f64>::quaternionic_standard(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let raw = KForm::from_coeffs(12, 2, (0..66).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let f = q.proj_110(&raw);
        let (fq, fe, ff) = (q.proj_q(&f).unwrap(), q.proj_e(&f).unwrap(), q.proj_f(&f).unwrap());
        let sum = &(&fq + &fe) + &ff;
        assert!((&sum - &f).max_abs() < 1e-12);
        assert!(fq.inner(&fe).abs() < 1e-12);
        assert!(fq.inner(&ff).abs() < 1e-12);
        assert!(fe.inner(&ff).abs() < 1e-12);
        for p in [&fq, &fe, &ff] {
            assert!((&q.proj_110(p) - p).max_abs() < 1e-12);
        }
        assert!((&q.proj_e(&fe).unwrap() - &fe).max_abs() < 1e-12);
        assert!((&q.proj_q(&fq).unwrap() - &fq).max_abs() < 1e-12);
    }

    #[test]
    fn projector_ranks_match_dimensions() {
        // dim Q = 3 and dim 𝔼 = n² - 1 for the quaternionic model of dimension 4n.
        for n in 2..=3 {
            let q = HermitianModel::<f64>::quaternionic_standard(n).unwrap();
            let d = 4 * n;
            let nb = d * (d - 1) / 2;
            let mut trace_q = 0.0;
            let mut trace_e = 0.0;
            for b in 0..nb {
                let mut c = vec![0.0; nb];
                c[b] = 1.0;
                let e = KForm::from_coeffs(d, 2, c).unwrap();
                trace_q += q.proj_q(&e).unwrap().coeffs()[b];
                trace_e += q.proj_e(&e).unwrap().coeffs()[b];
            }
            assert!((trace_q - 3.0).abs() < 1e-10);
            assert!((trace_e - (n * n - 1) as f64).abs() < 1e-10);
        }
    }
}
