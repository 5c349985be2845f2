//! Pointwise algebraic identities on the model spaces.

use super::forms::{binom, KForm};
use super::model::{anticomm, dot, endo_inner, endo_of, form_of, mat_max_abs, mat_vec, HermitianModel, Mat};
use crate::error::Result;
use crate::report::CheckReport;
use crate::scalar::Real;
use rand::Rng;

/// Uniform entries in `[-1, 1)`.
pub fn random_mat<T: Real>(rng: &mut impl Rng, d: usize) -> Mat<T> {
    Mat::from_fn(d, d, |_, _| T::c(rng.gen_range(-1.0..1.0)))
}

pub fn random_sym<T: Real>(rng: &mut impl Rng, d: usize) -> Mat<T> {
    let a = random_mat::<T>(rng, d);
    (&a + a.transpose()) * T::c(0.5)
}

/// Random symmetric trace-free endomorphism.
pub fn random_sym0<T: Real>(rng: &mut impl Rng, d: usize) -> Mat<T> {
    let mut h = random_sym::<T>(rng, d);
    let t = h.trace() / T::c(d as f64);
    for i in 0..d {
        h[(i, i)] -= t;
    }
    h
}

pub fn random_vec<T: Real>(rng: &mut impl Rng, d: usize) -> Vec<T> {
    (0..d).map(|_| T::c(rng.gen_range(-1.0..1.0))).collect()
}

pub fn random_form<T: Real>(rng: &mut impl Rng, d: usize, k: usize) -> KForm<T> {
    KForm::from_coeffs(d, k, random_vec(rng, binom(d, k))).expect("degree within range")
}

/// Random element of `Λ^{1,1}_0`.
pub fn random_110<T: Real>(model: &HermitianModel<T>, rng: &mut impl Rng) -> KForm<T> {
    model.proj_110(&random_form(rng, model.dim(), 2))
}

/// Random element of `𝔼 ⊕ Q`.
pub fn random_eq<T: Real>(model: &HermitianModel<T>, rng: &mut impl Rng) -> Result<KForm<T>> {
    let f = random_form(rng, model.dim(), 2);
    Ok(&model.proj_e(&f)? + &model.proj_q(&f)?)
}

fn form_res<T: Real>(a: &KForm<T>, b: &KForm<T>) -> f64 {
    (a - b).max_abs().as_f64()
}

fn rel<T: Real>(a: T, b: T) -> f64 {
    let (a, b) = (a.as_f64(), b.as_f64());
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// `L*_ω(F∧F) = 2·(F̂JF̂)` for primitive `F ∈ Λ^{1,1}_0`.
pub fn check_ls<T: Real>(model: &HermitianModel<T>, f: &KForm<T>, tol: f64) -> CheckReport {
    let mut rep = CheckReport::new();
    let prim = model.lstar(model.omega_j(), f).coeffs()[0].abs().as_f64();
    rep.residual("ls/precondition_primitive", "primitive input", prim, tol);
    if prim >= tol {
        return rep;
    }
    let lhs = model.lstar(model.omega_j(), &f.wedge(f));
    let fe = endo_of(f);
    let rhs = form_of(&(&fe * model.j() * &fe)).scale(T::c(2.0));
    rep.residual("ls/lstar_of_square", "L*_ω(F∧F) = 2FJF", form_res(&lhs, &rhs), tol);
    rep
}

/// Identities of the Kraines form and its modification `Ω̃`.
pub fn check_kraines<T: Real>(model: &HermitianModel<T>, rng: &mut impl Rng, tol: f64) -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    let m = model.m() as f64;
    let om = model.kraines()?;
    let omt = model.kraines_tilde()?;
    let w = model.omegas()?;
    let wj = model.omega_j();

    rep.residual("kraines/omega_tilde_primitive", "L*_{ω_J} Ω̃ = 0", model.lstar(wj, omt).max_abs().as_f64(), tol);
    let want = w[0].scale(T::c(2.0 * (m * m - 4.0) / 3.0));
    rep.residual(
        "kraines/lstar_omega1_tilde",
        "L*_{ω_1} Ω̃ = (2(m²-4)/3) ω_1",
        form_res(&model.lstar(&w[0], omt), &want),
        tol,
    );
    for (a, wa) in w.iter().enumerate() {
        rep.residual(
            &format!("kraines/lstar_omega{}_kraines", a + 1),
            "L*_{ω_a} Ω = 2(m+1) ω_a",
            form_res(&model.lstar(wa, om), &wa.scale(T::c(2.0 * (m + 1.0)))),
            tol,
        );
    }
    rep.residual("kraines/norm", "g(Ω, Ω) = 6m(m+1)", rel(om.norm2(), T::c(6.0 * m * (m + 1.0))), tol);
    if model.m() >= 3 {
        let s = smallest_singular_contraction(model, omt);
        rep.residual("kraines/nondegenerate_contraction", "v ↦ v⌟Ω̃ injective", if s > tol { 0.0 } else { 1.0 / s.max(1e-300) }, 1.0);
    }
    for _ in 0..5 {
        let f = random_110(model, rng);
        let (fq, fe) = (model.proj_q(&f)?, model.proj_e(&f)?);
        let lhs = model.lstar(&f, om).scale(T::c(0.5));
        let mut rhs = f.clone();
        rhs.axpy(T::c(m), &fq);
        rhs.axpy(T::c(-4.0), &fe);
        rep.residual("kraines/half_lstar_kraines", "½L*_F Ω = F + mF_Q - 4F_𝔼", form_res(&lhs, &rhs), tol);

        let lhs = model.lstar(&f, omt).scale(T::c(0.5));
        let mut rhs = f.scale(T::c((m - 4.0) / 3.0));
        rhs.axpy(T::c(m * (m - 1.0) / 3.0), &fq);
        rhs.axpy(T::c(-4.0 * (m - 1.0) / 3.0), &fe);
        rep.residual("kraines/half_lstar_tilde", "½L*_F Ω̃ on Λ^{1,1}_0", form_res(&lhs, &rhs), tol);

        let g = random_eq(model, rng)?;
        let lhs = model.lstar(&g, omt).scale(T::c(0.5));
        let mut rhs = g.scale(T::c(-m));
        rhs.axpy(T::c((m - 1.0) * (m + 4.0) / 3.0), &model.proj_q(&g)?);
        rep.residual("kraines/half_lstar_tilde_on_e_plus_q", "½L*_F Ω̃ on 𝔼⊕Q", form_res(&lhs, &rhs), tol);
    }
    Ok(rep)
}

/// Smallest singular value of `v ↦ v⌟α`.
pub fn smallest_singular_contraction<T: Real>(model: &HermitianModel<T>, alpha: &KForm<T>) -> f64 {
    let d = model.dim();
    let cols: Vec<Vec<f64>> = (0..d).map(|i| alpha.interior_basis(i).coeffs().iter().map(|c| c.as_f64()).collect()).collect();
    let rows = cols[0].len();
    let mat = nalgebra::DMatrix::<f64>::from_fn(rows, d, |r, c| cols[c][r]);
    mat.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Contraction identities for symmetric trace-free `h` and a vector `v`.
///
/// The first two contraction identities need `hJ = Jh`; they are applied to the
/// `S^{2,+}` part of `h`, for which `tr(hJ) = 0` holds automatically.
pub fn check_quadratic_identities<T: Real>(
    model: &HermitianModel<T>,
    h: &Mat<T>,
    v: &[T],
    rng: &mut impl Rng,
    tol: f64,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new();
    let d = model.dim();
    let m = model.m() as f64;
    let sym = mat_max_abs(&(h - h.transpose())).as_f64();
    let tr = h.trace().abs().as_f64();
    rep.residual("quadratic/precondition_symmetric_tracefree", "h ∈ S²_0", sym.max(tr), tol);
    let om = model.kraines()?;
    let wj = model.omega_j();
    let w2 = wj.wedge(wj);
    let hp = model.proj_sym_type(h, true);
    let vw2 = w2.interior(v);
    let vom = om.interior(v);
    let hv = mat_vec(&hp, v);

    let lhs = model.iota(&hp, &vw2).inner(&vw2);
    let rhs = T::c(4.0 * (m - 3.0)) * dot(&hv, v);
    rep.residual("quadratic/iota_omega_sq", "g(ι_h(v⌟ω²), v⌟ω²) = 4(m-3)g(hv,v)", rel(lhs, rhs), tol);

    let ch = model.c_op(&hp)?;
    let hj = form_of(&(&hp * model.j()));
    let vjv_q = model.proj_q(&model.v_wedge_jv(v))?;
    let lhs = model.iota(&hp, &vw2).inner(&vom);
    let rhs = T::c(-12.0) * dot(v, &hv) + T::c(8.0) * dot(v, &mat_vec(&ch, v)) + T::c(8.0 * m) * hj.inner(&vjv_q);
    rep.residual("quadratic/iota_omega_sq_kraines", "g(ι_h(v⌟ω²), v⌟Ω) mixed identity", rel(lhs, rhs), tol);

    let chg = model.c_op(h)?;
    let lhs = model.iota(h, &vom).inner(&vom);
    let op = &chg * T::c(m + 4.0) + h * T::c(3.0);
    let rhs = T::c(-4.0) * dot(v, &mat_vec(&op, v));
    rep.residual("quadratic/iota_kraines", "g(ι_h(v⌟Ω), v⌟Ω) = -4g(v,(3h+(m+4)Ch)v)", rel(lhs, rhs), tol);

    let trip = model.triple()?;
    let g = random_mat::<T>(rng, d);
    for (a, ia) in trip.iter().enumerate() {
        let lhs = model.c_op(&anticomm(&g, ia))?;
        let rhs = -anticomm(&model.c_op(&g)?, ia) - anticomm(&g, ia) * T::c(2.0);
        rep.residual(&format!("quadratic/c_anticomm_{}", a + 1), "C{h,I_a} = -{Ch,I_a} - 2{h,I_a}", mat_max_abs(&(lhs - rhs)).as_f64(), tol);
    }
    let cg = model.c_op(&g)?;
    let lhs = model.c_op(&cg)?;
    let rhs = &cg * T::c(-2.0) + &g * T::c(3.0);
    rep.residual("quadratic/c_squared", "C² = -2C + 3", mat_max_abs(&(lhs - rhs)).as_f64(), tol);

    let h2 = crate::tensor_alg::checks::random_sym0::<T>(rng, d);
    let lhs = model.iota(h, om).inner(&model.iota(&h2, om));
    let rhs = T::c(-4.0 * (m + 4.0)) * endo_inner(&chg, &h2) + T::c(12.0 * m) * endo_inner(h, &h2);
    rep.residual("quadratic/iota_kraines_pairing", "g(ι_{h1}Ω, ι_{h2}Ω) identity", rel(lhs, rhs), tol);

    let beta = model.proj_q(&random_form(rng, d, 2))?;
    let lhs = model.lstar(wj, &beta.wedge(&beta));
    let rhs = wj.scale(T::c(-2.0 / m) * beta.norm2());
    rep.residual("quadratic/square_in_q", "L*_{ω_J}(β∧β) = -(2/m)|β|²ω_J", form_res(&lhs, &rhs), tol);
    Ok(rep)
}

/// Projection of a 3-form in complex dimension 3 onto type `(2,1)+(1,2)`.
///
/// The derivation action `J_*` of `J` satisfies `J_*² = -(p-q)²` on `(p,q)`-forms.
pub fn proj_21<T: Real>(model: &HermitianModel<T>, a: &KForm<T>) -> KForm<T> {
    let jd = |x: &KForm<T>| model.iota(&model.j().transpose(), x);
    let mut out = jd(&jd(a));
    out.axpy(T::c(9.0), a);
    out.scale(T::c(1.0 / 8.0))
}

/// Removes the `ω∧Λ¹` component of a 3-form by least squares.
pub fn proj_primitive3<T: Real>(model: &HermitianModel<T>, a: &KForm<T>) -> KForm<T> {
    let d = model.dim();
    let w = model.omega_j();
    let cols: Vec<KForm<T>> = (0..d).map(|i| w.wedge(&KForm::basis(d, &[i]).expect("index in range"))).collect();
    let gram = nalgebra::DMatrix::<f64>::from_fn(d, d, |i, j| cols[i].inner(&cols[j]).as_f64());
    let rhs = nalgebra::DVector::<f64>::from_fn(d, |i, _| cols[i].inner(a).as_f64());
    let sol = gram.lu().solve(&rhs).expect("Lefschetz map is injective on 1-forms");
    let mut out = a.clone();
    for (i, c) in cols.iter().enumerate() {
        out.axpy(T::c(-sol[i]), c);
    }
    out
}

/// In complex dimension 3, `ω∧α = 0` for primitive 3-forms of type `(2,1)+(1,2)`.
///
/// Also records the leakage for a `(3,0)+(0,3)` form (which is primitive, hence also
/// killed) and for the non-primitive form `ω∧e¹`, the genuine counterexample.
pub fn check_dim3_wedge<T: Real>(rng: &mut impl Rng, samples: usize, tol: f64) -> Result<CheckReport> {
    let model = HermitianModel::<T>::kahler_standard(3)?;
    let w = model.omega_j();
    let mut rep = CheckReport::new();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let raw = random_form::<T>(rng, 6, 3);
        let a = proj_primitive3(&model, &proj_21(&model, &raw));
        let scale = a.max_abs().as_f64().max(1e-300);
        let resid = model.lstar(w, &a).max_abs().as_f64() / scale;
        rep.residual("dim3/precondition_primitive", "primitive input", resid, tol);
        worst = worst.max(w.wedge(&a).max_abs().as_f64() / scale);
    }
    rep.residual("dim3/omega_wedge_vanishes", "ω∧α = 0 in complex dimension 3", worst, tol);
    let raw = random_form::<T>(rng, 6, 3);
    let p21 = proj_21(&model, &raw);
    let a30 = &raw - &p21;
    rep.residual(
        "dim3/type_30_also_annihilated",
        "(3,0)+(0,3) forms are primitive",
        w.wedge(&a30).max_abs().as_f64() / a30.max_abs().as_f64().max(1e-300),
        tol,
    );
    let e1 = KForm::<T>::basis(6, &[0])?;
    let np = w.wedge(&e1);
    rep.flag("dim3/non_primitive_counterexample", "ω∧(ω∧e¹) ≠ 0", w.wedge(&np).max_abs().as_f64() > 0.5);
    Ok(rep)
}

/// Anti-`J`-linear `h`: `tr h³ = 0`, `[h², J] = 0`, and `h♯` maps `Λ^{1,1}⊗T` into `λ²⊗T`.
pub fn check_anti_type<T: Real>(model: &HermitianModel<T>, h: &Mat<T>, rng: &mut impl Rng, tol: f64) -> CheckReport {
    let mut rep = CheckReport::new();
    let j = model.j();
    let pre = mat_max_abs(&(h * j + j * h)).as_f64();
    rep.residual("anti_type/precondition", "hJ = -Jh", pre, tol);
    let h2 = h * h;
    rep.residual("anti_type/trace_cube", "tr h³ = 0", (&h2 * h).trace().abs().as_f64(), tol);
    rep.residual("anti_type/square_commutes", "[h², J] = 0", mat_max_abs(&(&h2 * j - j * &h2)).as_f64(), tol);
    let d = model.dim();
    let mut worst = 0.0f64;
    for _ in 0..d {
        let gamma = model.proj_11(&random_form::<T>(rng, d, 2));
        let shifted = sharp_component(h, &gamma);
        worst = worst.max(model.proj_11(&shifted).max_abs().as_f64());
    }
    rep.residual("anti_type/sharp_shifts_type", "h♯(Λ^{1,1}⊗T) ⊂ λ²⊗T", worst, tol);
    rep
}

/// `(h♯β)(X,Y) = β(hX,Y) + β(X,hY)` for a scalar 2-form `β`.
pub fn sharp_component<T: Real>(h: &Mat<T>, beta: &KForm<T>) -> KForm<T> {
    let d = beta.dim();
    let b = Mat::from_fn(d, d, |i, j| beta.at2(i, j));
    let r = h.transpose() * &b + &b * h;
    KForm::two_form_from_antisym(d, |i, j| r[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_pass(rep: &CheckReport) {
        for c in rep.failures() {
            panic!("{} failed: {:e} (tol {:e})", c.check_name, c.residual_or_zscore, c.tolerance);
        }
    }

    #[test]
    fn ls_identity_m4() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let f = random_110(&q, &mut rng);
            assert_pass(&check_ls(&q, &f, 1e-12));
        }
        let zero = KForm::zero(8, 2).unwrap();
        assert_pass(&check_ls(&q, &zero, 1e-12));
    }

    #[test]
    fn ls_closed_form_example() {
        // F = e0∧e2 + e1∧e3 is primitive of type (1,1) with F̂JF̂ = -J, so L*_ω(F∧F) = -2ω.
        let k = HermitianModel::<f64>::kahler_standard(2).unwrap();
        let f = &KForm::basis(4, &[0, 2]).unwrap() + &KForm::basis(4, &[1, 3]).unwrap();
        assert!((&k.proj_110(&f) - &f).max_abs() < 1e-15);
        let lhs = k.lstar(k.omega_j(), &f.wedge(&f));
        assert!((&lhs + &k.omega_j().scale(2.0)).max_abs() < 1e-14);
        assert_pass(&check_ls(&k, &f, 1e-12));
    }

    #[test]
    fn kraines_identities_hold_for_m4_and_m6() {
        for n in [2, 3] {
            let q = HermitianModel::<f64>::quaternionic_standard(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            assert_pass(&check_kraines(&q, &mut rng, 1e-10).unwrap());
        }
    }

    #[test]
    fn kraines_paper_constants_m4() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let w = q.omegas().unwrap();
        let lhs = q.lstar(&w[0], q.kraines_tilde().unwrap());
        assert!((&lhs - &w[0].scale(8.0)).max_abs() < 1e-12);
        assert!((q.kraines().unwrap().norm2() - 120.0).abs() < 1e-10);
    }

    #[test]
    fn missing_triple_is_usage_error() {
        let k = HermitianModel::<f64>::kahler_standard(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(check_kraines(&k, &mut rng, 1e-10).unwrap_err().is_usage());
    }

    #[test]
    fn quadratic_identities() {
        for n in [2, 3] {
            let q = HermitianModel::<f64>::quaternionic_standard(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(40 + n as u64);
            for _ in 0..5 {
                let h = random_sym0::<f64>(&mut rng, 4 * n);
                let v = random_vec::<f64>(&mut rng, 4 * n);
                assert_pass(&check_quadratic_identities(&q, &h, &v, &mut rng, 1e-10).unwrap());
            }
        }
    }

    #[test]
    fn quadratic_identities_vanish_on_zero() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = check_quadratic_identities(&q, &Mat::zeros(8, 8), &[0.0; 8], &mut rng, 1e-12).unwrap();
        assert_pass(&rep);
    }

    #[test]
    fn c_squared_on_many_random_endomorphisms() {
        let q = HermitianModel::<f64>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let h = random_mat::<f64>(&mut rng, 8);
            let c = q.c_op(&h).unwrap();
            let cc = q.c_op(&c).unwrap();
            worst = worst.max((cc + &c * 2.0 - &h * 3.0).amax());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn dim3_wedge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_pass(&check_dim3_wedge::<f64>(&mut rng, 100, 1e-12).unwrap());
    }

    #[test]
    fn anti_type() {
        for n in 1..=3 {
            let q = HermitianModel::<f64>::quaternionic_standard(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let h = q.proj_sym_type(&random_sym::<f64>(&mut rng, 4 * n), false);
            assert_pass(&check_anti_type(&q, &h, &mut rng, 1e-13));
        }
    }

    #[test]
    fn kraines_in_single_precision() {
        let q = HermitianModel::<f32>::quaternionic_standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_pass(&check_kraines(&q, &mut rng, 1e-4).unwrap());
    }
}
