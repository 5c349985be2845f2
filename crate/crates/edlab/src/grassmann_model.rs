//! Algebraic model of `Gr₂(ℂ^{n+2}) = SU(n+2)/S(U(2)×U(n))` at the base point.
//!
//! `𝔪` is the space of matrices `[[0, -X*], [X, 0]]` with `X ∈ M_{n×2}(ℂ)`. The
//! metric is `g = s·⟨·,·⟩` for the trace form `⟨A, B⟩ = -Re tr(AB)` and a scale
//! `s > 0`. Real coordinates on `𝔪` follow [`HermitianModel::quaternionic_standard`]:
//! entry `X_{rc}` has complex index `k = 2r + c` with real part at `2k` and
//! imaginary part at `2k + 1`.
//!
//! Left translation by `g` is an isometry mapping `o` to `gK` and the Killing
//! field of `A` to that of `g⁻¹Ag`, so every pointwise quantity at `gK` is
//! computed at `o` from `g⁻¹Ag`. Along the geodesic `exp(tU)·o` the pulled-back
//! element is `e^{-t ad U} A` and the pull-back frame is parallel, which turns
//! covariant derivatives into derivatives in `t`.

use crate::error::{Error, Result};
use crate::lie_core::{form_raw, haar_su, su_basis, CMat, SuMatrix, C64};
use crate::report::{rel_residual, CheckReport};
use crate::tensor_alg::forms::basis_masks;
use crate::tensor_alg::model::{dot, mat_vec};
use crate::tensor_alg::{endo_of, form_of, HermitianModel, KForm, Mat};
use nalgebra::SymmetricEigen;
use rand::Rng;

const I: C64 = C64::new(0.0, 1.0);
/// Tolerance for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;
const BUILD_TOL: f64 = 1e-10;

/// The splitting `su(n+2) = 𝔨 ⊕ 𝔪` with metric, complex and quaternionic
/// structure and curvature at the base point.
#[derive(Debug, Clone)]
pub struct GrassmannAlgebraModel {
    n: usize,
    scale: f64,
    m_basis: Vec<CMat>,
    k_basis: Vec<CMat>,
    z: CMat,
    sp1: [CMat; 3],
    herm: HermitianModel<f64>,
    curvature: Mat<f64>,
    einstein: f64,
    lambda_q: f64,
    lambda_e: f64,
    lambda_omega: f64,
    spectrum: Vec<f64>,
}

fn bracket(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

fn block_residuals(a: &CMat) -> (f64, f64) {
    // (max on the diagonal blocks, max on the off-diagonal blocks)
    let size = a.nrows();
    let (mut diag, mut off) = (0.0f64, 0.0f64);
    for r in 0..size {
        for c in 0..size {
            let v = a[(r, c)].norm();
            if (r < 2) == (c < 2) {
                diag = diag.max(v);
            } else {
                off = off.max(v);
            }
        }
    }
    (diag, off)
}

fn construction(name: &str, r: f64) -> Result<()> {
    if r.is_finite() && r < BUILD_TOL {
        Ok(())
    } else {
        Err(Error::Construction(format!("{name} violated by {r:e}")))
    }
}

fn mat_res(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    rel_residual(a.as_slice(), b.as_slice())
}

fn form_res(a: &KForm<f64>, b: &KForm<f64>) -> f64 {
    rel_residual(a.coeffs(), b.coeffs())
}

impl GrassmannAlgebraModel {
    /// Model with the metric equal to the trace form.
    pub fn build(n: usize) -> Result<Self> {
        Self::build_scaled(n, 1.0)
    }

    /// Model with metric `g = scale·⟨·,·⟩`.
    pub fn build_scaled(n: usize, scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::usage(format!("the Grassmannian model needs n >= 2, got {n}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::usage(format!("metric scale must be positive, got {scale}")));
        }
        let size = n + 2;
        let d = 4 * n;
        let inv = 1.0 / scale.sqrt();
        let h = std::f64::consts::FRAC_1_SQRT_2 * inv;
        let mut m_basis = Vec::with_capacity(d);
        for r in 0..n {
            for c in 0..2 {
                let mut re = CMat::zeros(size, size);
                re[(2 + r, c)] = C64::new(h, 0.0);
                re[(c, 2 + r)] = C64::new(-h, 0.0);
                let mut im = CMat::zeros(size, size);
                im[(2 + r, c)] = C64::new(0.0, h);
                im[(c, 2 + r)] = C64::new(0.0, h);
                m_basis.push(re);
                m_basis.push(im);
            }
        }
        let k_basis: Vec<CMat> = su_basis(n)
            .into_iter()
            .map(|b| b.entries() * C64::new(inv, 0.0))
            .filter(|b| block_residuals(b).1 == 0.0)
            .collect();

        let mut model = Self {
            n,
            scale,
            m_basis,
            k_basis,
            z: CMat::from_fn(size, size, |r, c| {
                if r != c {
                    C64::new(0.0, 0.0)
                } else if r < 2 {
                    I * (-(n as f64) / size as f64)
                } else {
                    I * (2.0 / size as f64)
                }
            }),
            sp1: [
                Self::sp1_generator(size, [(0.0, 0.0), (0.0, 1.0), (0.0, 1.0), (0.0, 0.0)]),
                Self::sp1_generator(size, [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]),
                Self::sp1_generator(size, [(0.0, 1.0), (0.0, 0.0), (0.0, 0.0), (0.0, -1.0)]),
            ],
            herm: HermitianModel::kahler_standard(2 * n)?,
            curvature: Mat::zeros(0, 0),
            einstein: 0.0,
            lambda_q: 0.0,
            lambda_e: 0.0,
            lambda_omega: 0.0,
            spectrum: Vec::new(),
        };
        model.validate_splitting()?;

        let j = model.ad_m(&model.z);
        let triple = [model.ad_m(&model.sp1[0]), model.ad_m(&model.sp1[1]), model.ad_m(&model.sp1[2])];
        let standard = HermitianModel::<f64>::quaternionic_standard(n)?;
        construction("ad(Z) = J on 𝔪", mat_res(&j, standard.j()))?;
        for (a, (ia, sa)) in triple.iter().zip(standard.triple()?).enumerate() {
            construction(&format!("ad(Q_{}) = I_{} on 𝔪", a + 1, a + 1), mat_res(ia, sa))?;
        }
        model.herm = HermitianModel::new(j, Some(triple))?;
        model.build_curvature()?;
        Ok(model)
    }

    /// `diag(-q, 0)` for `q ∈ su(2)` given row-major as (re, im) pairs; `ad` of it acts as `X ↦ Xq`.
    fn sp1_generator(size: usize, q: [(f64, f64); 4]) -> CMat {
        let mut out = CMat::zeros(size, size);
        for r in 0..2 {
            for c in 0..2 {
                let (re, im) = q[2 * r + c];
                out[(r, c)] = C64::new(-re, -im);
            }
        }
        out
    }

    fn validate_splitting(&self) -> Result<()> {
        let all: Vec<&CMat> = self.m_basis.iter().chain(&self.k_basis).collect();
        let size = self.size();
        construction("dim 𝔨 + dim 𝔪 = dim su(n+2)", (all.len() as f64 - (size * size - 1) as f64).abs())?;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                construction("orthonormal basis", (self.g_raw(a, b) - want).abs())?;
            }
        }
        let mut mm = 0.0f64;
        let mut km = 0.0f64;
        for (i, a) in self.m_basis.iter().enumerate() {
            for b in &self.m_basis[i + 1..] {
                mm = mm.max(block_residuals(&bracket(a, b)).1);
            }
            for k in &self.k_basis {
                km = km.max(block_residuals(&bracket(k, a)).0);
            }
        }
        construction("[𝔪, 𝔪] ⊆ 𝔨", mm)?;
        construction("[𝔨, 𝔪] ⊆ 𝔪", km)
    }

    fn build_curvature(&mut self) -> Result<()> {
        let d = self.dim();
        let masks = basis_masks(d, 2);
        let mut curv = Mat::<f64>::zeros(masks.len(), masks.len());
        for (col, &mask) in masks.iter().enumerate() {
            let i = mask.trailing_zeros() as usize;
            let j = 31 - mask.leading_zeros() as usize;
            let k = bracket(&self.m_basis[i], &self.m_basis[j]);
            let f = form_of(&self.ad_m(&k));
            for (row, &c) in f.coeffs().iter().enumerate() {
                curv[(row, col)] = c;
            }
        }
        // Ric(u, w) = Σ_i ℛ(e_i∧e_u)(e_i, e_w) = g([[e_i, e_u], e_i], e_w).
        let mut ric = Mat::<f64>::zeros(d, d);
        for u in 0..d {
            for i in 0..d {
                let k = bracket(&self.m_basis[i], &self.m_basis[u]);
                let ad = self.ad_m(&k);
                for w in 0..d {
                    ric[(u, w)] += ad[(w, i)];
                }
            }
        }
        // Positive Einstein constant fixes the sign of the curvature operator.
        let raw_e = ric.trace() / d as f64;
        let sign = if raw_e > 0.0 { 1.0 } else { -1.0 };
        curv *= sign;
        ric *= sign;
        let e = ric.trace() / d as f64;
        if !(e > 0.0) {
            return Err(Error::Construction(format!("Einstein constant is not positive: {e:e}")));
        }
        construction("Ric = E g", mat_res(&ric, &(Mat::identity(d, d) * e)))?;
        construction("curvature operator symmetric", mat_res(&curv, &curv.transpose()))?;
        self.curvature = curv;
        self.einstein = e;

        let apply = |f: &KForm<f64>| self.curvature_op(f);
        let w = self.herm.omegas()?.clone();
        let lq = apply(&w[0]).inner(&w[0]) / w[0].norm2();
        for (a, wa) in w.iter().enumerate() {
            construction(&format!("ℛ ω_{} = Λ_Q ω_{}", a + 1, a + 1), form_res(&apply(wa), &wa.scale(lq)))?;
        }
        if !(lq > 0.0) {
            return Err(Error::Construction(format!("Λ_Q is not positive: {lq:e}")));
        }
        let wj = self.herm.omega_j().clone();
        let lw = apply(&wj).inner(&wj) / wj.norm2();
        construction("ℛ ω_J ∝ ω_J", form_res(&apply(&wj), &wj.scale(lw)))?;

        // ℛ on 𝔼 and 𝔽 through the projector matrices.
        let nf = masks.len();
        let mut pe = Mat::<f64>::zeros(nf, nf);
        let mut pf = Mat::<f64>::zeros(nf, nf);
        for col in 0..nf {
            let mut b = KForm::zero(d, 2)?;
            b.coeffs_mut()[col] = 1.0;
            let (fe, ff) = (self.herm.proj_e(&b)?, self.herm.proj_f(&b)?);
            for row in 0..nf {
                pe[(row, col)] = fe.coeffs()[row];
                pf[(row, col)] = ff.coeffs()[row];
            }
        }
        let rank_e = pe.trace();
        construction("dim 𝔼 = n² - 1", (rank_e - (self.n * self.n - 1) as f64).abs() / rank_e)?;
        let le = (&self.curvature * &pe).trace() / rank_e;
        construction("ℛ = Λ_𝔼 on 𝔼", mat_res(&(&self.curvature * &pe), &(&pe * le)))?;
        construction("ℛ = 0 on 𝔽", mat_res(&(&self.curvature * &pf), &Mat::zeros(nf, nf)))?;

        let mut spectrum: Vec<f64> = SymmetricEigen::new(self.curvature.clone()).eigenvalues.iter().copied().collect();
        spectrum.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        self.lambda_q = lq;
        self.lambda_e = le;
        self.lambda_omega = lw;
        self.spectrum = spectrum;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Complex dimension `m = 2n`.
    pub fn m(&self) -> usize {
        2 * self.n
    }

    /// Real dimension `4n` of `𝔪`.
    pub fn dim(&self) -> usize {
        4 * self.n
    }

    /// Matrix size `N = n + 2`.
    pub fn size(&self) -> usize {
        self.n + 2
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn einstein(&self) -> f64 {
        self.einstein
    }

    pub fn lambda_q(&self) -> f64 {
        self.lambda_q
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    /// Eigenvalue of the curvature operator on `ω_J`.
    pub fn lambda_omega(&self) -> f64 {
        self.lambda_omega
    }

    /// Eigenvalues of the curvature operator on `Λ²𝔪`, descending.
    pub fn curvature_spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn hermitian(&self) -> &HermitianModel<f64> {
        &self.herm
    }

    /// `g`-orthonormal basis of `𝔪`.
    pub fn m_basis(&self) -> &[CMat] {
        &self.m_basis
    }

    /// `g`-orthonormal basis of `𝔨`.
    pub fn k_basis(&self) -> &[CMat] {
        &self.k_basis
    }

    /// Central element of `𝔨` with `ad(Z)|𝔪 = J`.
    pub fn z_generator(&self) -> SuMatrix {
        SuMatrix::project(self.n, &self.z)
    }

    /// Elements of `𝔨` whose adjoint action on `𝔪` is `I_1, I_2, I_3`.
    pub fn sp1_generators(&self) -> [SuMatrix; 3] {
        [0, 1, 2].map(|a| SuMatrix::project(self.n, &self.sp1[a]))
    }

    /// The metric on `su(n+2)`.
    pub fn g_raw(&self, a: &CMat, b: &CMat) -> f64 {
        self.scale * form_raw(a, b)
    }

    /// Curvature operator on 2-forms.
    pub fn curvature_op(&self, f: &KForm<f64>) -> KForm<f64> {
        let c = &self.curvature * nalgebra::DVector::from_column_slice(f.coeffs());
        KForm::from_coeffs(self.dim(), 2, c.as_slice().to_vec()).expect("2-forms")
    }

    /// `𝔪`-coordinates of the `𝔪`-component of `a`.
    pub fn m_coords(&self, a: &CMat) -> Vec<f64> {
        let f = (2.0 * self.scale).sqrt();
        let mut v = vec![0.0; self.dim()];
        for r in 0..self.n {
            for c in 0..2 {
                let x = a[(2 + r, c)];
                let k = 2 * r + c;
                v[2 * k] = f * x.re;
                v[2 * k + 1] = f * x.im;
            }
        }
        v
    }

    /// Element of `𝔪` with the given coordinates.
    pub fn m_element(&self, v: &[f64]) -> CMat {
        let size = self.size();
        let f = 1.0 / (2.0 * self.scale).sqrt();
        let mut a = CMat::zeros(size, size);
        for r in 0..self.n {
            for c in 0..2 {
                let k = 2 * r + c;
                let x = C64::new(v[2 * k], v[2 * k + 1]) * f;
                a[(2 + r, c)] = x;
                a[(c, 2 + r)] = -x.conj();
            }
        }
        a
    }

    /// `U ↦ pr_𝔪 [a, U]` on `𝔪`, by full commutators.
    pub fn ad_m(&self, a: &CMat) -> Mat<f64> {
        let d = self.dim();
        let mut out = Mat::zeros(d, d);
        for (l, b) in self.m_basis.iter().enumerate() {
            let col = self.m_coords(&bracket(a, b));
            for (k, v) in col.into_iter().enumerate() {
                out[(k, l)] = v;
            }
        }
        out
    }

    /// `∇X` at `o` for the Killing field of `a`: `X ↦ S X - X P` for `a_𝔨 = diag(P, S)`.
    pub fn nabla_x(&self, a: &CMat) -> Mat<f64> {
        let d = self.dim();
        let n = self.n;
        let mut out = Mat::zeros(d, d);
        for l in 0..d {
            let (kl, part) = (l / 2, l % 2);
            let (rl, cl) = (kl / 2, kl % 2);
            let x = if part == 0 { C64::new(1.0, 0.0) } else { I };
            // Column l: X = x E_{rl,cl}; (SX)_{r,c} = S_{r,rl} x δ_{c,cl}, (XP)_{r,c} = δ_{r,rl} x P_{cl,c}.
            for r in 0..n {
                for c in 0..2 {
                    let mut v = C64::new(0.0, 0.0);
                    if c == cl {
                        v += a[(2 + r, 2 + rl)] * x;
                    }
                    if r == rl {
                        v -= x * a[(cl, c)];
                    }
                    let k = 2 * r + c;
                    out[(2 * k, l)] = v.re;
                    out[(2 * k + 1, l)] = v.im;
                }
            }
        }
        out
    }

    /// `ε = (dX^♭)_0 - t (dX^♭)_Q` with this `t`.
    pub fn epsilon_coefficient(&self) -> f64 {
        let m = self.m() as f64;
        (m - 1.0) * (m + 4.0) / (3.0 * m)
    }

    /// Coefficient `E(m-4)/(m(m+4))` in the Killing potential and in `Φ`.
    pub fn kpot_coefficient(&self) -> f64 {
        let m = self.m() as f64;
        self.einstein * (m - 4.0) / (m * (m + 4.0))
    }

    /// `(m² + 8m + 12)/4`.
    pub fn mu2_weight(&self) -> f64 {
        let m = self.m() as f64;
        (m * m + 8.0 * m + 12.0) / 4.0
    }

    /// `μ₂(X, X)` from the pointwise constant `|X|² + (E/m)z² + 𝐪 + 𝐞` at `o`, unit volume.
    pub fn mu2_pointwise(&self, a: &SuMatrix) -> Result<f64> {
        self.same_n(a)?;
        let jet = self.jet_local(a.entries(), 0.0);
        Ok(jet.moment_constant(self) * self.m() as f64 / (self.mu2_weight() * self.einstein))
    }

    fn same_n(&self, a: &SuMatrix) -> Result<()> {
        if a.n() != self.n {
            Err(Error::usage(format!("matrix has n = {}, model has n = {}", a.n(), self.n)))
        } else {
            Ok(())
        }
    }

    /// Moment map `z_X = g(g⁻¹Ag, Z)` at `gK`, given `local = g⁻¹Ag`.
    pub fn z_local(&self, local: &CMat) -> f64 {
        self.g_raw(local, &self.z)
    }

    /// Jet at `gK` from `local = g⁻¹Ag`, without validating the point.
    pub(crate) fn jet_local(&self, local: &CMat, mu2: f64) -> KillingJet {
        let h = &self.herm;
        let m = self.m() as f64;
        let x = self.m_coords(local);
        let nabla_x = self.nabla_x(local);
        let dx = form_of(&nabla_x).scale(2.0);
        let omega_part = dx.inner(h.omega_j()) / m;
        let mut dx0 = h.proj_11(&dx);
        dx0.axpy(-omega_part, h.omega_j());
        let dx_q = h.proj_q(&dx).expect("quaternionic model");
        let dx_e = h.proj_e(&dx).expect("quaternionic model");
        let z = self.z_local(local);
        let q = dx_q.norm2() / (4.0 * self.lambda_q);
        let e = dx_e.norm2() / (4.0 * self.lambda_e);
        let k = self.kpot_coefficient();
        let p = e - q - k * (z * z + self.mu2_weight() * mu2);
        KillingJet {
            point: CMat::identity(self.size(), self.size()),
            local: local.clone(),
            x,
            nabla_x,
            dx,
            dx0,
            dx_q,
            dx_e,
            omega_part,
            z,
            q,
            e,
            p,
            mu2,
        }
    }

    /// `A1 = -[U, A]` and `A2 = [U, [U, A]]` along the geodesic in direction `e_l`.
    fn transvect(&self, a: &CMat, l: usize) -> (CMat, CMat) {
        let u = &self.m_basis[l];
        let a1 = -bracket(u, a);
        let a2 = -bracket(u, &a1);
        (a1, a2)
    }
}

/// Pointwise data of a Killing field at `gK`, expressed in the frame pulled back to `o`.
#[derive(Debug, Clone)]
pub struct KillingJet {
    /// Representative `g` of the point `gK`.
    pub point: CMat,
    /// `g⁻¹ A g`.
    pub local: CMat,
    pub x: Vec<f64>,
    /// `U ↦ ∇_U X`.
    pub nabla_x: Mat<f64>,
    /// `dX^♭ = 2·(2-form of ∇X)`.
    pub dx: KForm<f64>,
    /// Component on `Λ^{1,1}_0`.
    pub dx0: KForm<f64>,
    pub dx_q: KForm<f64>,
    pub dx_e: KForm<f64>,
    /// Coefficient `c` with `dX^♭ = (dX^♭)_0 + c ω_J`.
    pub omega_part: f64,
    pub z: f64,
    pub q: f64,
    pub e: f64,
    pub p: f64,
    /// `μ₂(X, X)` used in `p`.
    pub mu2: f64,
}

impl KillingJet {
    /// `ε(X) = (dX^♭)_0 - t (dX^♭)_Q`.
    pub fn epsilon(&self, model: &GrassmannAlgebraModel) -> KForm<f64> {
        let mut eps = self.dx0.clone();
        eps.axpy(-model.epsilon_coefficient(), &self.dx_q);
        eps
    }

    /// `Φ = (dX^♭)_𝔼 - (dX^♭)_Q - 2E(m-4)/(m(m+4)) z ω_J`.
    pub fn phi(&self, model: &GrassmannAlgebraModel) -> KForm<f64> {
        let mut phi = &self.dx_e - &self.dx_q;
        phi.axpy(-2.0 * model.kpot_coefficient() * self.z, model.herm.omega_j());
        phi
    }

    /// `Ψ = -E/(2(m+4)) X⌟(Ω + ω_J²)`.
    pub fn psi(&self, model: &GrassmannAlgebraModel) -> KForm<f64> {
        let m = model.m() as f64;
        let hat = model.herm.kraines_hat().expect("quaternionic model");
        hat.interior(&self.x).scale(-model.einstein / (2.0 * (m + 4.0)))
    }

    /// `|X|² + (E/m)z² + 𝐪 + 𝐞`.
    pub fn moment_constant(&self, model: &GrassmannAlgebraModel) -> f64 {
        dot(&self.x, &self.x) + model.einstein / model.m() as f64 * self.z * self.z + self.q + self.e
    }
}

fn check_unitary(g: &CMat, size: usize) -> Result<()> {
    if g.nrows() != size || g.ncols() != size {
        return Err(Error::usage(format!("point must be a {size}x{size} unitary matrix")));
    }
    let r = (g.adjoint() * g - CMat::identity(size, size)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if !(r < UNITARY_TOL) {
        return Err(Error::usage(format!("point is not unitary (residual {r:e})")));
    }
    Ok(())
}

/// Jet of the Killing field of `a` at `point·K`, with `mu2 = μ₂(X, X)` entering `p`.
pub fn killing_jet(model: &GrassmannAlgebraModel, a: &SuMatrix, point: &CMat, mu2: f64) -> Result<KillingJet> {
    model.same_n(a)?;
    check_unitary(point, model.size())?;
    let local = a.conj_inv(point);
    let mut jet = model.jet_local(local.entries(), mu2);
    jet.point = point.clone();
    Ok(jet)
}

/// `ε(X_A)` at `point·K`.
pub fn epsilon_map(model: &GrassmannAlgebraModel, a: &SuMatrix, point: &CMat) -> Result<KForm<f64>> {
    Ok(killing_jet(model, a, point, 0.0)?.epsilon(model))
}

/// Rank of `A ↦ (ε(X_A), ∇ε(X_A), ∇²_{e_l,e_l}ε(X_A))` at `o` over `su(n+2)`.
///
/// The second derivatives are needed: `ε(X_Z)` vanishes to first order at `o`.
pub fn epsilon_jet_rank(model: &GrassmannAlgebraModel) -> usize {
    let basis = su_basis(model.n);
    let d = model.dim();
    let rows: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| {
            let a = b.entries();
            let mut row = model.jet_local(a, 0.0).epsilon(model).coeffs().to_vec();
            for l in 0..d {
                let (a1, a2) = model.transvect(a, l);
                row.extend_from_slice(model.jet_local(&a1, 0.0).epsilon(model).coeffs());
                row.extend_from_slice(model.jet_local(&a2, 0.0).epsilon(model).coeffs());
            }
            row
        })
        .collect();
    let mat = Mat::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let sv = mat.singular_values();
    let top = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Haar-random points, one per requested sample.
pub fn random_points(model: &GrassmannAlgebraModel, count: usize, rng: &mut impl Rng) -> Vec<CMat> {
    (0..count).map(|_| haar_su(model.size(), rng)).collect()
}

/// Derivatives of a homogeneous quadratic `f` along a geodesic through polarization.
fn quad_derivs(f: &dyn Fn(&CMat) -> f64, a: &CMat, a1: &CMat, a2: &CMat) -> (f64, f64) {
    let b = |x: &CMat, y: &CMat| (f(&(x + y)) - f(&(x - y))) / 4.0;
    (2.0 * b(a, a1), 2.0 * f(a1) + 2.0 * b(a, a2))
}

/// First covariant derivatives of the linear jet data, `∇_{e_l}` for each basis direction.
struct FirstOrder {
    base: KillingJet,
    /// Jet of `-[e_l, A]`, whose linear data is `∇_{e_l}` of the linear data of `A`.
    d1: Vec<KillingJet>,
    a2: Vec<CMat>,
}

impl FirstOrder {
    fn new(model: &GrassmannAlgebraModel, local: &CMat, mu2: f64) -> Self {
        let base = model.jet_local(local, mu2);
        let (mut d1, mut a2s) = (Vec::new(), Vec::new());
        for l in 0..model.dim() {
            let (a1, a2) = model.transvect(local, l);
            d1.push(model.jet_local(&a1, 0.0));
            a2s.push(a2);
        }
        Self { base, d1, a2: a2s }
    }

    /// `d α = Σ e^k ∧ ∇_k α` for linear form data selected by `sel`.
    fn d(&self, model: &GrassmannAlgebraModel, sel: &dyn Fn(&KillingJet) -> KForm<f64>) -> KForm<f64> {
        let dim = model.dim();
        let mut out = KForm::zero(dim, sel(&self.base).degree() + 1).expect("degree in range");
        for (k, j1) in self.d1.iter().enumerate() {
            let ek = KForm::basis(dim, &[k]).expect("basis");
            out.axpy(1.0, &ek.wedge(&sel(j1)));
        }
        out
    }

    /// `d* α = -Σ e_k ⌟ ∇_k α`.
    fn codiff(&self, model: &GrassmannAlgebraModel, sel: &dyn Fn(&KillingJet) -> KForm<f64>) -> KForm<f64> {
        let dim = model.dim();
        let mut out = KForm::zero(dim, sel(&self.base).degree() - 1).expect("degree in range");
        for (k, j1) in self.d1.iter().enumerate() {
            out.axpy(-1.0, &sel(j1).interior_basis(k));
        }
        out
    }
}

fn lin_eps(model: &GrassmannAlgebraModel) -> impl Fn(&KillingJet) -> KForm<f64> + '_ {
    move |j: &KillingJet| j.epsilon(model)
}

/// Exterior-calculus identities of `dX^♭` and its projections at `point·K`.
pub fn check_killing_structure_at(model: &GrassmannAlgebraModel, a: &SuMatrix, point: &CMat, tol: f64) -> Result<CheckReport> {
    model.same_n(a)?;
    check_unitary(point, model.size())?;
    let local = a.conj_inv(point);
    let fo = FirstOrder::new(model, local.entries(), 0.0);
    let h = &model.herm;
    let (m, e) = (model.m() as f64, model.einstein);
    let lq = model.lambda_q;
    let dim = model.dim();
    let jet = &fo.base;
    let xf = KForm::one_form(&jet.x);
    let omega = h.kraines()?;
    let omega_t = h.kraines_tilde()?;
    let wj2 = h.omega_j().wedge(h.omega_j());
    let mut rep = CheckReport::new();

    // Q-projection identities with v = X.
    let mut lhs1 = KForm::zero(dim, 1)?;
    let mut lhs2 = KForm::zero(dim, 3)?;
    for i in 0..dim {
        let ei = KForm::basis(dim, &[i])?;
        let pq = h.proj_q(&ei.wedge(&xf))?;
        lhs1.axpy(1.0, &pq.interior_basis(i));
        lhs2.axpy(1.0, &ei.wedge(&pq));
    }
    rep.residual("killing/q_projection_trace", "e_i⌟(e^i∧X)_Q = (3/m)X^♭", form_res(&lhs1, &xf.scale(3.0 / m)), tol);
    rep.residual(
        "killing/q_projection_wedge",
        "e^i∧(e^i∧X)_Q = -(1/2m)X⌟Ω",
        form_res(&lhs2, &omega.interior(&jet.x).scale(-1.0 / (2.0 * m))),
        tol,
    );

    let sel_dx0 = |j: &KillingJet| j.dx0.clone();
    let sel_q = |j: &KillingJet| j.dx_q.clone();
    rep.residual(
        "killing/primitive_part_codifferential",
        "d*α_X = (2E(m-1)/m)X^♭",
        form_res(&fo.codiff(model, &sel_dx0), &xf.scale(2.0 * e * (m - 1.0) / m)),
        tol,
    );
    rep.residual(
        "killing/primitive_part_differential",
        "dα_X = -(E/m)X⌟ω_J²",
        form_res(&fo.d(model, &sel_dx0), &wj2.interior(&jet.x).scale(-e / m)),
        tol,
    );
    rep.residual(
        "killing/q_part_differential",
        "dβ_X = (Λ_Q/m)X⌟Ω",
        form_res(&fo.d(model, &sel_q), &omega.interior(&jet.x).scale(lq / m)),
        tol,
    );
    rep.residual(
        "killing/q_part_codifferential",
        "d*β_X = (6Λ_Q/m)X^♭",
        form_res(&fo.codiff(model, &sel_q), &xf.scale(6.0 * lq / m)),
        tol,
    );
    let eps_sel = lin_eps(model);
    rep.residual(
        "killing/epsilon_differential",
        "dε(X) = -(E/m)X⌟Ω̃",
        form_res(&fo.d(model, &eps_sel), &omega_t.interior(&jet.x).scale(-e / m)),
        tol,
    );
    rep.residual(
        "killing/epsilon_coclosed",
        "d*ε(X) = 0",
        form_res(&fo.codiff(model, &eps_sel), &KForm::zero(dim, 1)?),
        tol,
    );

    let eps = jet.epsilon(model);
    let s = -1.0 / (2.0 * m);
    rep.residual("killing/epsilon_via_kraines", "ε(X) = -(1/2m)L*_{dX^♭}Ω̃", form_res(&eps, &h.lstar(&jet.dx, omega_t).scale(s)), tol);
    rep.residual(
        "killing/epsilon_via_kraines_primitive",
        "ε(X) = -(1/2m)L*_{(dX^♭)_0}Ω̃",
        form_res(&eps, &h.lstar(&jet.dx0, omega_t).scale(s)),
        tol,
    );
    let mut eps_i = jet.dx_e.clone();
    eps_i.axpy(-(m * m - 4.0) / (3.0 * m), &jet.dx_q);
    rep.residual("killing/epsilon_e_form", "ε(X) = (dX^♭)_𝔼 - ((m²-4)/3m)(dX^♭)_Q", form_res(&eps, &eps_i), tol);
    rep.residual("killing/dx_type_11", "dX^♭ ∈ Λ^{1,1}", form_res(&h.proj_11(&jet.dx), &jet.dx), tol);
    rep.residual("killing/dx0_in_e_plus_q", "(dX^♭)_𝔽 = 0", form_res(&h.proj_f(&jet.dx)?, &KForm::zero(dim, 2)?), tol);
    rep.residual("killing/omega_component", "g(dX^♭, ω_J) = 2E z_X", rel_residual(&[jet.omega_part * m], &[2.0 * e * jet.z]), tol);

    // X⌟ω_J = dz and ∇_U dX^♭ = 2ℛ(X∧U) along every basis direction.
    let mut dz = Vec::with_capacity(dim);
    let mut k1 = 0.0f64;
    for (l, j1) in fo.d1.iter().enumerate() {
        dz.push(j1.z);
        let ul = KForm::basis(dim, &[l])?;
        let want = model.curvature_op(&xf.wedge(&ul)).scale(2.0);
        k1 = k1.max(form_res(&j1.dx, &want));
    }
    rep.residual("killing/moment_map_z", "X⌟ω_J = dz_X", rel_residual(h.omega_j().interior(&jet.x).coeffs(), &dz), tol);
    rep.residual("killing/curvature_equation", "∇_U dX^♭ = 2ℛ(X∧U)", k1, tol);
    Ok(rep)
}

/// [`check_killing_structure_at`] at the base point.
pub fn check_killing_structure(model: &GrassmannAlgebraModel, a: &SuMatrix, tol: f64) -> Result<CheckReport> {
    check_killing_structure_at(model, a, &CMat::identity(model.size(), model.size()), tol)
}

/// `g(A, B) = ½ Σ_{ij} g(A(e_i,e_j), B(e_i,e_j))` on `TM`-valued 2-forms.
fn vv_inner(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
    let mut s = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        for (aij, bij) in ai.iter().zip(bi) {
            s += dot(aij, bij);
        }
    }
    0.5 * s
}

/// Both sides of the Frölicher–Nijenhuis identity for `h = F̂J`, `F = ε(X)`.
fn fn_j_sides(model: &GrassmannAlgebraModel, fo: &FirstOrder) -> (f64, f64) {
    let h = &model.herm;
    let d = model.dim();
    let j = h.j();
    let f = fo.base.epsilon(model);
    let nf: Vec<KForm<f64>> = fo.d1.iter().map(|j1| j1.epsilon(model)).collect();
    let hh = endo_of(&f) * j;
    let nh: Vec<Mat<f64>> = nf.iter().map(|g| endo_of(g) * j).collect();
    let nabla_along = |v: &[f64]| -> Mat<f64> { nh.iter().zip(v).fold(Mat::zeros(d, d), |acc, (m, &c)| acc + m * c) };

    // d_∇h(e_i, e_j) = (∇_i h)e_j - (∇_j h)e_i.
    let dnh: Vec<Vec<Vec<f64>>> =
        (0..d).map(|i| (0..d).map(|jj| (0..d).map(|c| nh[i][(c, jj)] - nh[jj][(c, i)]).collect()).collect()).collect();
    let nabla_he: Vec<Mat<f64>> = (0..d).map(|i| nabla_along(hh.column(i).as_slice())).collect();
    let bracket: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|jj| {
                    let hd = mat_vec(&hh, &dnh[i][jj]);
                    (0..d).map(|c| -nabla_he[i][(c, jj)] + nabla_he[jj][(c, i)] + hd[c]).collect()
                })
                .collect()
        })
        .collect();
    let lhs = vv_inner(&bracket, &dnh);

    let mut df = KForm::zero(d, 3).expect("3-forms");
    let mut dl = KForm::zero(d, 3).expect("3-forms");
    for (k, g) in nf.iter().enumerate() {
        let ek = KForm::basis(d, &[k]).expect("basis");
        df.axpy(1.0, &ek.wedge(g));
        dl.axpy(2.0, &ek.wedge(&h.lstar(h.omega_j(), &g.wedge(&f))));
    }
    let rhs = -2.0 * h.omega_j().wedge(&df).inner(&f.wedge(&df)) + 1.5 * df.inner(&dl);
    (lhs, rhs)
}

fn hermitian_killing_at(model: &GrassmannAlgebraModel, local: &CMat, mu2: f64, tol: f64, rep: &mut CheckReport) -> Result<()> {
    let fo = FirstOrder::new(model, local, mu2);
    let h = &model.herm;
    let jet = &fo.base;
    let psi = jet.psi(model);
    let phi = jet.phi(model);
    let mut hk = 0.0f64;
    let mut dp = Vec::new();
    for (l, (j1, a2)) in fo.d1.iter().zip(&fo.a2).enumerate() {
        let mut u = vec![0.0; model.dim()];
        u[l] = 1.0;
        let upsi = psi.interior(&u);
        let rhs = &upsi + &h.j_on_form(&upsi);
        hk = hk.max(form_res(&j1.phi(model), &rhs));
        let pq = |x: &CMat| {
            let jj = model.jet_local(x, 0.0);
            jj.e - jj.q - model.kpot_coefficient() * jj.z * jj.z
        };
        dp.push(quad_derivs(&pq, local, &j1.local, a2).0);
    }
    rep.residual("hermitian_killing/equation", "∇_UΦ_X = U⌟Ψ_X + J(U⌟Ψ_X)", hk, tol);
    rep.residual("hermitian_killing/killing_potential", "X⌟Φ_X = d𝐩_X", rel_residual(phi.interior(&jet.x).coeffs(), &dp), tol);
    let (lhs, rhs) = fn_j_sides(model, &fo);
    rep.residual("hermitian_killing/fn_bracket_pairing", "g([FJ,FJ]^FN, d_∇(FJ)) for F = ε(X)", rel_residual(&[lhs], &[rhs]), tol);
    Ok(())
}

/// Hermitian Killing equation, Killing potential and bracket pairing at `o` and at `points`.
pub fn check_hermitian_killing(model: &GrassmannAlgebraModel, a: &SuMatrix, points: &[CMat], tol: f64) -> Result<CheckReport> {
    model.same_n(a)?;
    let mu2 = model.mu2_pointwise(a)?;
    let mut rep = CheckReport::new();
    hermitian_killing_at(model, a.entries(), mu2, tol, &mut rep)?;
    for g in points {
        check_unitary(g, model.size())?;
        hermitian_killing_at(model, a.conj_inv(g).entries(), mu2, tol, &mut rep)?;
    }
    Ok(rep)
}

/// Values, gradients and Laplacians of the moment maps at one point.
#[derive(Debug, Clone)]
pub struct MomentMapJet {
    pub jet: KillingJet,
    pub grad_q: Vec<f64>,
    pub grad_e: Vec<f64>,
    pub lap_q: f64,
    pub lap_e: f64,
    pub lap_z: f64,
    pub lap_p: f64,
}

/// Moment-map jet at `g⁻¹Ag`; Laplacian `Δf = -Σ_l f''(e_l)`.
pub fn moment_map_jet(model: &GrassmannAlgebraModel, local: &CMat, mu2: f64) -> MomentMapJet {
    let jet = model.jet_local(local, mu2);
    let k = model.kpot_coefficient();
    let fq = |x: &CMat| model.jet_local(x, 0.0).q;
    let fe = |x: &CMat| model.jet_local(x, 0.0).e;
    let fp = |x: &CMat| {
        let j = model.jet_local(x, 0.0);
        j.e - j.q - k * j.z * j.z
    };
    let (mut grad_q, mut grad_e) = (Vec::new(), Vec::new());
    let (mut lap_q, mut lap_e, mut lap_z, mut lap_p) = (0.0, 0.0, 0.0, 0.0);
    for l in 0..model.dim() {
        let (a1, a2) = model.transvect(local, l);
        let (q1, q2) = quad_derivs(&fq, local, &a1, &a2);
        let (e1, e2) = quad_derivs(&fe, local, &a1, &a2);
        let (_, p2) = quad_derivs(&fp, local, &a1, &a2);
        grad_q.push(q1);
        grad_e.push(e1);
        lap_q -= q2;
        lap_e -= e2;
        lap_p -= p2;
        lap_z -= model.g_raw(&a2, &model.z);
    }
    MomentMapJet { jet, grad_q, grad_e, lap_q, lap_e, lap_z, lap_p }
}

/// Moment maps of `(dX^♭)_Q`, `(dX^♭)_𝔼`, their Laplacians and the pointwise constant.
pub fn check_moment_maps(model: &GrassmannAlgebraModel, a: &SuMatrix, points: &[CMat], tol: f64) -> Result<CheckReport> {
    model.same_n(a)?;
    let (m, e) = (model.m() as f64, model.einstein);
    let (lq, le) = (model.lambda_q, model.lambda_e);
    let mu2 = model.mu2_pointwise(a)?;
    let mut rep = CheckReport::new();
    let mut constants = Vec::new();
    let id = CMat::identity(model.size(), model.size());
    for g in std::iter::once(&id).chain(points) {
        check_unitary(g, model.size())?;
        let mm = moment_map_jet(model, a.conj_inv(g).entries(), mu2);
        let j = &mm.jet;
        let xx = dot(&j.x, &j.x);
        rep.residual("moment_maps/q_hamiltonian", "X⌟(dX^♭)_Q = d𝐪_X", rel_residual(j.dx_q.interior(&j.x).coeffs(), &mm.grad_q), tol);
        rep.residual("moment_maps/e_hamiltonian", "X⌟(dX^♭)_𝔼 = d𝐞_X", rel_residual(j.dx_e.interior(&j.x).coeffs(), &mm.grad_e), tol);
        rep.residual(
            "moment_maps/q_laplacian",
            "Δ𝐪 = 4Λ_Q𝐪 - (6Λ_Q/m)|X|²",
            rel_residual(&[mm.lap_q], &[4.0 * lq * j.q - 6.0 * lq / m * xx]),
            tol,
        );
        rep.residual(
            "moment_maps/e_laplacian",
            "Δ𝐞 = 4Λ_𝔼𝐞 - (Λ_𝔼(m²-4)/2m)|X|²",
            rel_residual(&[mm.lap_e], &[4.0 * le * j.e - le * (m * m - 4.0) / (2.0 * m) * xx]),
            tol,
        );
        rep.residual("moment_maps/z_eigenfunction", "Δz = 2Ez", rel_residual(&[mm.lap_z], &[2.0 * e * j.z]), tol);
        rep.residual("moment_maps/p_eigenfunction", "Δ𝐩 = 2E𝐩", rel_residual(&[mm.lap_p], &[2.0 * e * j.p]), tol);
        constants.push(j.moment_constant(model));
    }
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.residual("moment_maps/constant_combination", "|X|² + (E/m)z² + 𝐪 + 𝐞 constant", (hi - lo) / hi.abs().max(1.0), tol);
    Ok(rep)
}

/// Curvature eigenvalue ratios, spectrum clusters and the symmetric-space axioms.
pub fn check_model(model: &GrassmannAlgebraModel, tol: f64) -> CheckReport {
    let m = model.m() as f64;
    let e = model.einstein;
    let mut rep = CheckReport::new();
    rep.residual("model/lambda_q_ratio", "Λ_Q/E = m/(m+4)", (model.lambda_q / e - m / (m + 4.0)).abs(), tol);
    rep.residual("model/lambda_e_ratio", "Λ_𝔼/E = 4/(m+4)", (model.lambda_e / e - 4.0 / (m + 4.0)).abs(), tol);
    rep.residual("model/lambda_omega_ratio", "ℛω_J = Eω_J", (model.lambda_omega / e - 1.0).abs(), tol);
    let n = model.n;
    let mut expected: Vec<f64> = std::iter::repeat(model.lambda_omega)
        .take(1)
        .chain(std::iter::repeat(model.lambda_q).take(3))
        .chain(std::iter::repeat(model.lambda_e).take(n * n - 1))
        .collect();
    expected.resize(model.spectrum.len(), 0.0);
    expected.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    rep.residual("model/curvature_spectrum", "spectrum {E, Λ_Q³, Λ_𝔼^(n²-1), 0}", rel_residual(&model.spectrum, &expected), tol);
    rep
}
