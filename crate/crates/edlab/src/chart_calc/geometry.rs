//! Riemannian geometry of a chart at one point, from metric jets.
//!
//! Curvature is stored in the standard convention
//! `R_std(∂_k,∂_l)∂_j = R^i_{jkl} ∂_i = ∇_k∇_l∂_j − ∇_l∇_k∂_j`; the sign
//! convention `R(X,Y) = ∇²_{Y,X} − ∇²_{X,Y}` is `−R_std`.
//!
//! Slot layouts used throughout:
//! - endomorphism `h^i_j`: `[Up, Down]`
//! - `∇h`: `[Down a, Up i, Down j]` holding `(∇_a h)^i_j`
//! - `TM`-valued 2-form `α(∂_a,∂_b)^i`: `[Down a, Down b, Up i]`
//! - `η_X Y` tensors use the same layout as 2-forms, without skew symmetry.

use super::jet::{Jet, JetSpace};
use super::tensor::{jsum, Slot, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Real;

use Slot::{Down, Up};

const ENDO: [Slot; 2] = [Up, Down];
const BIL: [Slot; 2] = [Down, Down];
const FORM2V: [Slot; 3] = [Down, Down, Up];

/// Smallest admissible `det g` at a queried point.
pub const DET_FLOOR: f64 = 1e-10;

/// Inverse of a square jet matrix by Gauss–Jordan elimination with
/// partial pivoting on the constant terms.
pub fn invert<T: Real>(dim: usize, m: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
    assert_eq!(m.len(), dim * dim);
    let sp = m[0].space();
    let mut a: Vec<Jet<T>> = m.to_vec();
    let mut inv: Vec<Jet<T>> = (0..dim * dim)
        .map(|k| Jet::constant(sp, if k / dim == k % dim { T::one() } else { T::zero() }))
        .collect();
    for col in 0..dim {
        let piv = (col..dim)
            .max_by(|&r, &s| a[r * dim + col].value().abs().partial_cmp(&a[s * dim + col].value().abs()).unwrap())
            .unwrap();
        if a[piv * dim + col].value().abs() <= T::c(1e-300) {
            return Err(Error::Numerical("singular jet matrix".into()));
        }
        if piv != col {
            for k in 0..dim {
                a.swap(piv * dim + k, col * dim + k);
                inv.swap(piv * dim + k, col * dim + k);
            }
        }
        let r = a[col * dim + col].recip()?;
        for k in 0..dim {
            a[col * dim + k] = &a[col * dim + k] * &r;
            inv[col * dim + k] = &inv[col * dim + k] * &r;
        }
        for row in 0..dim {
            if row == col {
                continue;
            }
            let f = a[row * dim + col].clone();
            for k in 0..dim {
                a[row * dim + k] = &a[row * dim + k] - &(&f * &a[col * dim + k]);
                inv[row * dim + k] = &inv[row * dim + k] - &(&f * &inv[col * dim + k]);
            }
        }
    }
    Ok(inv)
}

fn det_value<T: Real>(dim: usize, m: &[T]) -> T {
    let mut a = m.to_vec();
    let mut det = T::one();
    for c in 0..dim {
        let piv = (c..dim).max_by(|&r, &s| a[r * dim + c].abs().partial_cmp(&a[s * dim + c].abs()).unwrap()).unwrap();
        if a[piv * dim + c] == T::zero() {
            return T::zero();
        }
        if piv != c {
            for k in 0..dim {
                a.swap(piv * dim + k, c * dim + k);
            }
            det = -det;
        }
        det *= a[c * dim + c];
        for r in c + 1..dim {
            let f = a[r * dim + c] / a[c * dim + c];
            for k in c..dim {
                let v = a[c * dim + k];
                a[r * dim + k] -= f * v;
            }
        }
    }
    det
}

/// Metric, Christoffel symbols and curvature at one chart point.
#[derive(Clone, Debug)]
pub struct PointGeometry<T: Real> {
    sp: &'static JetSpace,
    dim: usize,
    g: Tensor<T>,
    ginv: Tensor<T>,
    gamma: Tensor<T>,
    riem: Option<Tensor<T>>,
    einstein: T,
}

impl<T: Real> PointGeometry<T> {
    /// Geometry of the metric with components `g_ij` (row-major jets).
    ///
    /// `einstein = None` takes `E = scal/n` at the point; curvature needs
    /// metric jets valid to order 2, otherwise only connection data exist.
    pub fn new(dim: usize, comps: Vec<Jet<T>>, einstein: Option<T>) -> Result<Self> {
        if comps.len() != dim * dim {
            return Err(Error::usage("metric component count does not match dimension"));
        }
        let sp = comps[0].space();
        let vals: Vec<T> = comps.iter().map(|j| j.value()).collect();
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (vals[i * dim + j], vals[j * dim + i]);
                if (a - b).abs() > T::c(1e-12) * (T::one() + a.abs()) {
                    return Err(Error::Invalid("metric components are not symmetric".into()));
                }
            }
        }
        let det = det_value(dim, &vals);
        if !(det > T::c(DET_FLOOR)) {
            return Err(Error::Numerical(format!("degenerate metric: det g = {det:e}")));
        }
        let g = Tensor::from_fn(dim, &BIL, |i| comps[i[0] * dim + i[1]].clone());
        let inv = invert(dim, &comps)?;
        let ginv = Tensor::from_fn(dim, &[Up, Up], |i| inv[i[0] * dim + i[1]].clone());
        if g.valid_order() < 1 {
            return Err(Error::usage("metric jets must be valid to order ≥ 1"));
        }
        let dg: Vec<Tensor<T>> = (0..dim).map(|c| g.map(|j| j.d(c))).collect();
        let gamma = Tensor::from_fn(dim, &[Up, Down, Down], |ix| {
            let (i, a, b) = (ix[0], ix[1], ix[2]);
            jsum(sp, dim, |l| {
                let k = &(dg[a].at(&[l, b]) + dg[b].at(&[l, a])) - dg[l].at(&[a, b]);
                ginv.at(&[i, l]) * &k
            })
            .scale(T::c(0.5))
        });
        let riem = if g.valid_order() >= 2 {
            Some(Tensor::from_fn(dim, &[Up, Down, Down, Down], |ix| {
                let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
                let mut r = &gamma.at(&[i, l, j]).d(k) - &gamma.at(&[i, k, j]).d(l);
                r += &jsum(sp, dim, |m| {
                    &(gamma.at(&[i, k, m]) * gamma.at(&[m, l, j])) - &(gamma.at(&[i, l, m]) * gamma.at(&[m, k, j]))
                });
                r
            }))
        } else {
            None
        };
        let mut geo = PointGeometry { sp, dim, g, ginv, gamma, riem, einstein: T::zero() };
        geo.einstein = match einstein {
            Some(e) => e,
            None => {
                let ric = geo.ricci()?;
                geo.trace(&ric).value() / T::c(dim as f64)
            }
        };
        Ok(geo)
    }

    /// Jet space of all components.
    pub fn space(&self) -> &'static JetSpace {
        self.sp
    }

    /// Chart dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Einstein constant in force (declared or computed).
    pub fn einstein(&self) -> T {
        self.einstein
    }

    /// Metric `g_ij`.
    pub fn metric(&self) -> &Tensor<T> {
        &self.g
    }

    /// Inverse metric `g^ij`.
    pub fn metric_inverse(&self) -> &Tensor<T> {
        &self.ginv
    }

    /// Christoffel symbols `Γ^i_{ab}`.
    pub fn christoffel(&self) -> &Tensor<T> {
        &self.gamma
    }

    /// Curvature `R^i_{jkl}` in the standard convention.
    pub fn riemann_std(&self) -> Result<&Tensor<T>> {
        self.riem.as_ref().ok_or_else(|| Error::usage("curvature needs metric jets of order ≥ 2"))
    }

    /// Curvature in the convention `R(X,Y) = ∇²_{Y,X} − ∇²_{X,Y}`, stored as
    /// `[Up i, Down j, Down k, Down l]` with `R(∂_k,∂_l)∂_j = R^i_{jkl}∂_i`.
    pub fn riemann(&self) -> Result<Tensor<T>> {
        Ok(self.riemann_std()?.scale(-T::one()))
    }

    fn sum(&self, f: impl FnMut(usize) -> Jet<T>) -> Jet<T> {
        jsum(self.sp, self.dim, f)
    }

    fn sum2(&self, mut f: impl FnMut(usize, usize) -> Jet<T>) -> Jet<T> {
        jsum(self.sp, self.dim * self.dim, |k| f(k / self.dim, k % self.dim))
    }

    /// Levi-Civita covariant derivative; the new slot is prepended.
    pub fn nabla(&self, t: &Tensor<T>) -> Result<Tensor<T>> {
        if t.valid_order() < 1 {
            return Err(Error::usage("covariant derivative of a tensor without exact first-order jets"));
        }
        let mut slots = vec![Down];
        slots.extend_from_slice(t.slots());
        let d = self.dim;
        Ok(Tensor::from_fn(d, &slots, |ix| {
            let c = ix[0];
            let idx = &ix[1..];
            let mut out = t.at(idx).d(c);
            let mut moved = idx.to_vec();
            for (s, slot) in t.slots().iter().enumerate() {
                let orig = idx[s];
                let term = jsum(self.sp, d, |l| {
                    moved[s] = l;
                    match slot {
                        Up => self.gamma.at(&[orig, c, l]) * t.at(&moved),
                        Down => self.gamma.at(&[l, c, orig]) * t.at(&moved),
                    }
                });
                moved[s] = orig;
                match slot {
                    Up => out += &term,
                    Down => out -= &term,
                }
            }
            out
        }))
    }

    /// Vector field `V^i` to 1-form `g_ij V^j`.
    pub fn lower(&self, v: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &[Down], |i| self.sum(|j| self.g.at(&[i[0], j]) * v.at(&[j])))
    }

    /// 1-form `α_j` to vector field `g^ij α_j`.
    pub fn raise(&self, a: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &[Up], |i| self.sum(|j| self.ginv.at(&[i[0], j]) * a.at(&[j])))
    }

    /// Endomorphism `g^{-1}b` of a bilinear form `b_ij`.
    pub fn endo_from_bilinear(&self, b: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| self.sum(|k| self.ginv.at(&[ix[0], k]) * b.at(&[k, ix[1]])))
    }

    /// Bilinear form `g(h·,·)` of an endomorphism, `b_ij = g_ik h^k_j`.
    pub fn bilinear_from_endo(&self, h: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &BIL, |ix| self.sum(|k| self.g.at(&[ix[0], k]) * h.at(&[k, ix[1]])))
    }

    /// Identity endomorphism.
    pub fn identity(&self) -> Tensor<T> {
        Tensor::identity(self.sp, self.dim)
    }

    /// `tr h`.
    pub fn trace(&self, h: &Tensor<T>) -> Jet<T> {
        self.sum(|i| h.at(&[i, i]).clone())
    }

    /// `A ∘ B`.
    pub fn compose(&self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| self.sum(|k| a.at(&[ix[0], k]) * b.at(&[k, ix[1]])))
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
        &self.compose(a, b) + &self.compose(b, a)
    }

    /// `g`-adjoint `A*` with `g(A*X, Y) = g(X, AY)`.
    pub fn adjoint(&self, a: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| {
            self.sum2(|j, l| &(self.ginv.at(&[ix[0], j]) * a.at(&[l, j])) * self.g.at(&[l, ix[1]]))
        })
    }

    /// `g`-symmetric part `½(A + A*)`.
    pub fn sym(&self, a: &Tensor<T>) -> Tensor<T> {
        (&self.adjoint(a) + a).scale(T::c(0.5))
    }

    /// `A(V)`.
    pub fn apply(&self, a: &Tensor<T>, v: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &[Up], |i| self.sum(|j| a.at(&[i[0], j]) * v.at(&[j])))
    }

    /// `g(A, B) = Σ g(A e_i, B e_i)` on endomorphisms.
    pub fn inner_endo(&self, a: &Tensor<T>, b: &Tensor<T>) -> Jet<T> {
        let ga = self.bilinear_from_endo(a);
        self.sum2(|k, l| {
            let bk_l = self.sum(|j| b.at(&[k, j]) * self.ginv.at(&[j, l]));
            ga.at(&[k, l]) * &bk_l
        })
    }

    /// `⟨α, β⟩ = ½ Σ_ij g(α(e_i,e_j), β(e_i,e_j))` on `TM`-valued 2-forms.
    pub fn inner_2form(&self, a: &Tensor<T>, b: &Tensor<T>) -> Jet<T> {
        let d = self.dim;
        // Lower the value slot of α, raise both form slots of β.
        let al = Tensor::from_fn(d, &[Down, Down, Down], |ix| {
            self.sum(|i| self.g.at(&[ix[2], i]) * a.at(&[ix[0], ix[1], i]))
        });
        let br = Tensor::from_fn(d, &[Up, Up, Up], |ix| {
            self.sum2(|c, e| &(self.ginv.at(&[ix[0], c]) * self.ginv.at(&[ix[1], e])) * b.at(&[c, e, ix[2]]))
        });
        jsum(self.sp, d * d * d, |k| {
            let ix = [k / (d * d), (k / d) % d, k % d];
            al.at(&ix) * br.at(&ix)
        })
        .scale(T::c(0.5))
    }

    /// Divergence `δh = −Σ (∇_{e_i}h) e_i` as a vector field.
    pub fn divergence(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nh = self.nabla(h)?;
        Ok(Tensor::from_fn(self.dim, &[Up], |i| {
            -self.sum2(|a, b| self.ginv.at(&[a, b]) * nh.at(&[a, i[0], b]))
        }))
    }

    /// `δ*α`, the `g`-symmetric part of `∇α` as an endomorphism.
    pub fn delta_star(&self, alpha: &Tensor<T>) -> Result<Tensor<T>> {
        let na = self.nabla(alpha)?;
        let s = Tensor::from_fn(self.dim, &BIL, |ix| (na.at(&[ix[0], ix[1]]) + na.at(&[ix[1], ix[0]])).scale(T::c(0.5)));
        Ok(self.endo_from_bilinear(&s))
    }

    /// `d_∇h(X,Y) = (∇_X h)Y − (∇_Y h)X`.
    pub fn d_nabla(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nh = self.nabla(h)?;
        Ok(Tensor::from_fn(self.dim, &FORM2V, |ix| {
            nh.at(&[ix[0], ix[2], ix[1]]) - nh.at(&[ix[1], ix[2], ix[0]])
        }))
    }

    /// `∇V` as the endomorphism `X ↦ ∇_X V` (exterior derivative of a
    /// `TM`-valued 0-form).
    pub fn nabla_vector(&self, v: &Tensor<T>) -> Result<Tensor<T>> {
        let nv = self.nabla(v)?;
        Ok(Tensor::from_fn(self.dim, &ENDO, |ix| nv.at(&[ix[1], ix[0]]).clone()))
    }

    /// Divergence `δα(Y) = −Σ (∇_{e_i}α)(e_i, Y)` of a `TM`-valued 2-form.
    pub fn divergence_2form(&self, alpha: &Tensor<T>) -> Result<Tensor<T>> {
        let na = self.nabla(alpha)?;
        Ok(Tensor::from_fn(self.dim, &ENDO, |ix| {
            -self.sum2(|a, c| self.ginv.at(&[a, c]) * na.at(&[c, a, ix[1], ix[0]]))
        }))
    }

    /// Divergence `−Σ (∇_{e_i}η)_{e_i}` of an `η`-type tensor, as the
    /// endomorphism `X ↦ −Σ (∇_{e_i}η)_{e_i} X`.
    pub fn divergence_eta(&self, eta: &Tensor<T>) -> Result<Tensor<T>> {
        self.divergence_2form(eta)
    }

    /// Differential of a scalar.
    pub fn d_scalar(&self, f: &Jet<T>) -> Result<Tensor<T>> {
        f.require_order(1)?;
        Ok(Tensor::from_fn(self.dim, &[Down], |i| f.d(i[0])))
    }

    /// Gradient of a scalar.
    pub fn gradient(&self, f: &Jet<T>) -> Result<Tensor<T>> {
        Ok(self.raise(&self.d_scalar(f)?))
    }

    /// `d*α = −Σ (∇_{e_i}α)(e_i)` on 1-forms.
    pub fn codifferential(&self, alpha: &Tensor<T>) -> Result<Jet<T>> {
        let na = self.nabla(alpha)?;
        Ok(-self.sum2(|a, b| self.ginv.at(&[a, b]) * na.at(&[a, b])))
    }

    /// Exterior derivative of a 1-form.
    pub fn d_form(&self, alpha: &Tensor<T>) -> Result<Tensor<T>> {
        let na = self.nabla(alpha)?;
        Ok(Tensor::from_fn(self.dim, &BIL, |ix| na.at(&[ix[0], ix[1]]) - na.at(&[ix[1], ix[0]])))
    }

    /// `d*β(Y) = −Σ (∇_{e_i}β)(e_i, Y)` on 2-forms.
    pub fn codifferential_2form(&self, beta: &Tensor<T>) -> Result<Tensor<T>> {
        let nb = self.nabla(beta)?;
        Ok(Tensor::from_fn(self.dim, &[Down], |ix| {
            -self.sum2(|a, c| self.ginv.at(&[a, c]) * nb.at(&[c, a, ix[0]]))
        }))
    }

    /// Hodge Laplacian `dd* + d*d` on 1-forms.
    pub fn hodge_laplacian(&self, alpha: &Tensor<T>) -> Result<Tensor<T>> {
        let a = self.d_scalar(&self.codifferential(alpha)?)?;
        let b = self.codifferential_2form(&self.d_form(alpha)?)?;
        Ok(&a + &b)
    }

    /// `Δf = d*df`.
    pub fn laplacian(&self, f: &Jet<T>) -> Result<Jet<T>> {
        self.codifferential(&self.d_scalar(f)?)
    }

    /// Rough Laplacian `∇*∇h = −Σ ∇²_{e_i,e_i} h`.
    pub fn rough_laplacian(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nnh = self.nabla(&self.nabla(h)?)?;
        Ok(Tensor::from_fn(self.dim, h.slots(), |ix| {
            -self.sum2(|a, b| {
                let mut full = vec![a, b];
                full.extend_from_slice(ix);
                self.ginv.at(&[a, b]) * nnh.at(&full)
            })
        }))
    }

    /// Curvature action `R̊h = Σ R(e_i,·) h e_i`.
    pub fn ring_r(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let r = self.riemann_std()?;
        // R̊h(∂_b) = Σ R_std(∂_b, e_a) h e_a = R^i_{jba} h^j_c g^{ac} ∂_i.
        let hg = Tensor::from_fn(self.dim, &[Up, Up], |ix| self.sum(|c| h.at(&[ix[0], c]) * self.ginv.at(&[ix[1], c])));
        Ok(Tensor::from_fn(self.dim, &ENDO, |ix| {
            self.sum2(|j, a| r.at(&[ix[0], j, ix[1], a]) * hg.at(&[j, a]))
        }))
    }

    /// Ricci tensor `ric_{lj} = R^k_{jkl}`, from curvature alone.
    pub fn ricci_bilinear(&self) -> Result<Tensor<T>> {
        let r = self.riemann_std()?;
        Ok(Tensor::from_fn(self.dim, &BIL, |ix| self.sum(|k| r.at(&[k, ix[1], k, ix[0]]).clone())))
    }

    /// Ricci endomorphism `Ric(X) = Σ R(e_i, X) e_i`.
    pub fn ricci(&self) -> Result<Tensor<T>> {
        Ok(self.endo_from_bilinear(&self.ricci_bilinear()?))
    }

    /// Scalar curvature.
    pub fn scalar_curvature(&self) -> Result<Jet<T>> {
        Ok(self.trace(&self.ricci()?))
    }

    /// Bianchi operator `𝒟h = 2δh + d tr h` as a 1-form.
    pub fn bianchi(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let div = self.lower(&self.divergence(h)?);
        let dtr = self.d_scalar(&self.trace(h))?;
        Ok(&div.scale(T::c(2.0)) + &dtr)
    }

    /// Einstein operator `Δ_E = ∇*∇ − 2R̊`.
    pub fn einstein_op(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(&self.rough_laplacian(h)? - &self.ring_r(h)?.scale(T::c(2.0)))
    }

    /// Modified Einstein operator `Δ̃_E = Δ_E − δ*∘𝒟`.
    pub fn einstein_op_tilde(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(&self.einstein_op(h)? - &self.delta_star(&self.bianchi(h)?)?)
    }

    /// `h♯α(X,Y) = α(hX,Y) + α(X,hY)`.
    pub fn sharp(&self, h: &Tensor<T>, alpha: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &FORM2V, |ix| {
            let (a, b, i) = (ix[0], ix[1], ix[2]);
            self.sum(|c| &(alpha.at(&[c, b, i]) * h.at(&[c, a])) + &(alpha.at(&[a, c, i]) * h.at(&[c, b])))
        })
    }

    /// `h ∘ α`, the endomorphism applied to the values of a 2-form.
    pub fn compose_2form(&self, h: &Tensor<T>, alpha: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &FORM2V, |ix| self.sum(|j| h.at(&[ix[2], j]) * alpha.at(&[ix[0], ix[1], j])))
    }

    /// Symmetric Frölicher–Nijenhuis bracket
    /// `2[h₁,h₂] = −(h₁♯d_∇h₂ + h₂♯d_∇h₁) + d_∇{h₁,h₂}`.
    pub fn fn_bracket(&self, h1: &Tensor<T>, h2: &Tensor<T>) -> Result<Tensor<T>> {
        let s = &self.sharp(h1, &self.d_nabla(h2)?) + &self.sharp(h2, &self.d_nabla(h1)?);
        let d = self.d_nabla(&self.anticommutator(h1, h2))?;
        Ok((&d - &s).scale(T::c(0.5)))
    }

    /// `[h,h](X,Y) = −(∇_{hX}h)Y + (∇_{hY}h)X + h(d_∇h(X,Y))`.
    pub fn fn_bracket_self(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nh = self.nabla(h)?;
        let dh = self.d_nabla(h)?;
        let hd = self.compose_2form(h, &dh);
        Ok(Tensor::from_fn(self.dim, &FORM2V, |ix| {
            let (a, b, i) = (ix[0], ix[1], ix[2]);
            let t = self.sum(|c| &(h.at(&[c, b]) * nh.at(&[c, i, a])) - &(h.at(&[c, a]) * nh.at(&[c, i, b])));
            &t + hd.at(ix)
        }))
    }

    /// `X ⌟ α`, the endomorphism `Y ↦ α(X, Y)`.
    pub fn interior(&self, x: &Tensor<T>, alpha: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| self.sum(|a| x.at(&[a]) * alpha.at(&[a, ix[1], ix[0]])))
    }

    /// Skew endomorphism `A` of a 2-form `β` with `g(AX, Y) = β(X, Y)`.
    pub fn endo_from_2form(&self, beta: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| self.sum(|c| self.ginv.at(&[ix[0], c]) * beta.at(&[ix[1], c])))
    }

    /// `∇_V h`.
    pub fn nabla_along(&self, v: &Tensor<T>, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nh = self.nabla(h)?;
        Ok(Tensor::from_fn(self.dim, h.slots(), |ix| {
            self.sum(|a| {
                let mut full = vec![a];
                full.extend_from_slice(ix);
                v.at(&[a]) * nh.at(&full)
            })
        }))
    }

    /// Koszul tensor `B_{ab,c} = g((∇_a h)∂_b, ∂_c) + g(∂_a, (∇_b h)∂_c − (∇_c h)∂_b)`,
    /// lowered to an `η`-type tensor by `g^{-1}`.
    pub fn koszul(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let nh = self.nabla(h)?;
        let lowered = Tensor::from_fn(self.dim, &[Down, Down, Down], |ix| {
            let (a, b, c) = (ix[0], ix[1], ix[2]);
            self.sum(|i| {
                let first = self.g.at(&[i, c]) * nh.at(&[a, i, b]);
                let second = self.g.at(&[a, i]) * &(nh.at(&[b, i, c]) - nh.at(&[c, i, b]));
                &first + &second
            })
        });
        Ok(Tensor::from_fn(self.dim, &FORM2V, |ix| {
            self.sum(|c| self.ginv.at(&[ix[2], c]) * lowered.at(&[ix[0], ix[1], c]))
        }))
    }

    /// `η` of `g_h = g(h·,·)` from Koszul's formula: `η = h^{-1} ∘ koszul(h)`.
    pub fn eta(&self, h: &Tensor<T>) -> Result<Tensor<T>> {
        let hinv = invert(self.dim, h.components())?;
        let k = self.koszul(h)?;
        Ok(Tensor::from_fn(self.dim, &FORM2V, |ix| {
            self.sum(|j| &hinv[ix[2] * self.dim + j] * k.at(&[ix[0], ix[1], j]))
        }))
    }

    /// `η_X` as an endomorphism.
    pub fn eta_slice(&self, eta: &Tensor<T>, a: usize) -> Tensor<T> {
        Tensor::from_fn(self.dim, &ENDO, |ix| eta.at(&[a, ix[1], ix[0]]).clone())
    }

    /// `Σ η_{e_i} e_i` as a vector field.
    pub fn eta_trace(&self, eta: &Tensor<T>) -> Tensor<T> {
        Tensor::from_fn(self.dim, &[Up], |i| self.sum2(|a, b| self.ginv.at(&[a, b]) * eta.at(&[a, b, i[0]])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_calc::fields::{coordinates, FieldKind, FieldSpec};
    use crate::chart_calc::fixtures::{ChartMetric, Fixture};
    use crate::chart_calc::checks::basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let sp = JetSpace::get(2, 2, 0).unwrap();
        let comps = vec![Jet::constant(sp, 1.0), Jet::constant(sp, 1.0), Jet::constant(sp, 1.0), Jet::constant(sp, 1.0)];
        assert!(PointGeometry::new(2, comps, None).is_err());
        let tiny = vec![Jet::constant(sp, 1e-6), Jet::zero(sp), Jet::zero(sp), Jet::constant(sp, 1e-6)];
        assert!(PointGeometry::new(2, tiny, None).is_err());
    }

    #[test]
    fn asymmetric_metric_is_rejected() {
        let sp = JetSpace::get(2, 2, 0).unwrap();
        let comps = vec![Jet::constant(sp, 1.0), Jet::constant(sp, 0.5), Jet::zero(sp), Jet::constant(sp, 1.0)];
        assert!(PointGeometry::new(2, comps, None).is_err());
    }

    #[test]
    fn bracket_with_identity_vanishes() {
        let m = ChartMetric::new(Fixture::Sphere3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = FieldSpec::random(FieldKind::Symmetric, 3, basis(&m), 1.0, &mut rng);
        let sp = JetSpace::get(3, 2, 0).unwrap();
        for x in m.random_points(3, 5) {
            let geo = m.geometry_in(sp, &x).unwrap();
            let hh = h.endo(&geo, &coordinates(sp, &x)).unwrap();
            let b = geo.fn_bracket(&geo.identity(), &hh).unwrap();
            assert!(max_abs(&b.values()) < 1e-13);
        }
    }

    #[test]
    fn tilde_einstein_on_identity() {
        // Δ̃_E id = −2E id, i.e. ½Δ̃_E(λ id) = −Eλ id.
        for f in [Fixture::Sphere3, Fixture::Cp2] {
            let m = ChartMetric::new(f).unwrap();
            let x = &m.random_points(1, 6)[0];
            let geo = m.geometry(x, 2).unwrap();
            let lhs = geo.einstein_op_tilde(&geo.identity()).unwrap().values();
            let want = geo.identity().scale(-2.0 * m.einstein).values();
            assert!(crate::report::rel_residual(&lhs, &want) < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn derivatives_need_enough_jet_order() {
        let m = ChartMetric::new(Fixture::Torus3).unwrap();
        assert!(m.geometry(&[0.1, 0.2, 0.3], 0).unwrap_err().is_usage());
        let geo = m.geometry(&[0.1, 0.2, 0.3], 1).unwrap();
        assert!(geo.riemann_std().is_err());
    }
}
