//! Verification suites built on the chart calculus.
//!
//! Every suite compares two independently assembled sides of an identity.
//! Pointwise residuals are relative to `max(1, largest term)`; integrated
//! residuals are relative to the largest integrated term.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::fields::{coordinates, Basis, FieldKind, FieldSpec};
use super::fixtures::{ChartMetric, Fixture, EINSTEIN_TOL};
use super::geometry::PointGeometry;
use super::jet::{Jet, JetSpace};
use super::quadrature::GridQuadrature;
use super::tensor::{Slot, Tensor};
use crate::error::{Error, Result};
use crate::report::{rel_residual, CheckReport};

type Geo = PointGeometry<f64>;
type T64 = Tensor<f64>;

/// Default tolerances of the chart suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartTolerances {
    pub pointwise: f64,
    pub weitzenboeck: f64,
    pub first_variation: f64,
    pub second_variation: f64,
    pub koiso: f64,
    pub kahler: f64,
    pub einstein: f64,
    pub finite_difference: f64,
}

impl Default for ChartTolerances {
    fn default() -> Self {
        ChartTolerances {
            pointwise: 1e-7,
            weitzenboeck: 1e-7,
            first_variation: 1e-8,
            second_variation: 1e-6,
            koiso: 1e-6,
            kahler: 1e-8,
            einstein: EINSTEIN_TOL,
            finite_difference: 1e-6,
        }
    }
}

impl ChartTolerances {
    /// Every tolerance set to `tol`.
    pub fn uniform(tol: f64) -> Self {
        ChartTolerances {
            pointwise: tol,
            weitzenboeck: tol,
            first_variation: tol,
            second_variation: tol,
            koiso: tol,
            kahler: tol,
            einstein: tol,
            finite_difference: tol,
        }
    }
}

/// Runs `f` at every point in parallel and keeps the slotwise maximum.
fn worst_over<F>(points: &[Vec<f64>], slots: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let per: Vec<Vec<f64>> = points.par_iter().map(|x| f(x)).collect::<Result<_>>()?;
    let mut worst = vec![0.0f64; slots];
    for v in per {
        debug_assert_eq!(v.len(), slots);
        for (w, r) in worst.iter_mut().zip(v) {
            *w = if r.is_nan() || w.is_nan() { f64::NAN } else { w.max(r) };
        }
    }
    Ok(worst)
}

fn res(a: &T64, b: &T64) -> f64 {
    rel_residual(&a.values(), &b.values())
}

fn push_all(rep: &mut CheckReport, names: &[(&str, &str)], worst: &[f64], tol: f64, samples: usize) {
    for ((name, reference), &r) in names.iter().zip(worst) {
        rep.residual(name, reference, r, tol).samples = Some(samples);
    }
}

/// Inner product `g(A,B)` of endomorphisms given by plain component values.
fn inner_values(geo: &Geo, a: &[f64], b: &[f64]) -> f64 {
    let d = geo.dim();
    let g = geo.metric().values();
    let gi = geo.metric_inverse().values();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    s += g[i * d + k] * a[i * d + j] * b[k * d + l] * gi[j * d + l];
                }
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Curvature and operators

/// Curvature data at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    /// `Γ^i_{ab}`, layout `[i][a][b]`.
    pub christoffel: Vec<f64>,
    /// `R^i_{jkl}` with `R(∂_k,∂_l)∂_j = R^i_{jkl}∂_i` and
    /// `R(X,Y) = ∇²_{Y,X} − ∇²_{X,Y}`.
    pub riemann: Vec<f64>,
    /// Ricci endomorphism `Ric^i_j`.
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

/// Christoffel symbols, curvature, Ricci endomorphism and scalar curvature.
pub fn curvature_suite(metric: &ChartMetric, x: &[f64]) -> Result<CurvatureData> {
    let geo = metric.geometry(x, 2)?;
    let ric = geo.ricci()?;
    Ok(CurvatureData {
        christoffel: geo.christoffel().values(),
        riemann: geo.riemann()?.values(),
        scalar: geo.trace(&ric).value(),
        ricci: ric.values(),
    })
}

/// Fields consumed by [`operator_suite`].
#[derive(Clone, Debug, Serialize)]
pub struct OperatorFields {
    pub h1: FieldSpec,
    pub h2: FieldSpec,
    pub alpha: FieldSpec,
}

impl OperatorFields {
    /// Random fields suited to the fixture's domain.
    pub fn random(metric: &ChartMetric, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = basis(metric);
        let d = metric.dim;
        OperatorFields {
            h1: FieldSpec::random(FieldKind::Symmetric, d, b, 1.0, &mut rng),
            h2: FieldSpec::random(FieldKind::Symmetric, d, b, 1.0, &mut rng),
            alpha: FieldSpec::random(FieldKind::OneForm, d, b, 1.0, &mut rng),
        }
    }
}

/// Random-field basis for a fixture: band 1 on the torus, cubics on balls.
pub fn basis(metric: &ChartMetric) -> Basis {
    if metric.is_torus() {
        Basis::Fourier { band: 1 }
    } else {
        Basis::Polynomial { degree: 3 }
    }
}

/// Values of the first-order operators at a point.
#[derive(Clone, Debug, Serialize)]
pub struct OperatorData {
    pub d_nabla: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_star: Vec<f64>,
    pub trace: f64,
    pub bianchi: Vec<f64>,
    pub ring_r: Vec<f64>,
    pub einstein_op: Vec<f64>,
    pub einstein_op_tilde: Vec<f64>,
    pub fn_bracket: Vec<f64>,
    pub sharp: Vec<f64>,
    /// Self-tests `tr δ*α = −d*α` and `[id, h] = 0`.
    pub self_tests: CheckReport,
}

/// Self-test tolerance of [`operator_suite`].
pub const OPERATOR_SELF_TOL: f64 = 1e-9;

/// Operators on the given fields at `x`; fails if a self-test fails.
pub fn operator_suite(metric: &ChartMetric, fields: &OperatorFields, x: &[f64]) -> Result<OperatorData> {
    let sp = JetSpace::get(metric.dim, 3, 0)?;
    let geo = metric.geometry_in(sp, x)?;
    let xs = coordinates(sp, x);
    let h1 = fields.h1.endo(&geo, &xs)?;
    let h2 = fields.h2.endo(&geo, &xs)?;
    let alpha = fields.alpha.one_form(&xs)?;
    let ds = geo.delta_star(&alpha)?;
    let mut self_tests = CheckReport::new();
    let lhs = geo.trace(&ds).value();
    let rhs = -geo.codifferential(&alpha)?.value();
    self_tests.residual("trace_delta_star", "tr δ*α = −d*α", rel_residual(&[lhs], &[rhs]), OPERATOR_SELF_TOL);
    let id_bracket = geo.fn_bracket(&geo.identity(), &h1)?;
    let zero = Tensor::zeros(sp, geo.dim(), id_bracket.slots());
    self_tests.residual("fn_bracket_identity", "[id, h] = 0", res(&id_bracket, &zero), OPERATOR_SELF_TOL);
    if !self_tests.all_pass() {
        return Err(Error::Numerical(format!("operator self-test failed at {x:?}: {:?}", self_tests.failures())));
    }
    let dh = geo.d_nabla(&h1)?;
    Ok(OperatorData {
        delta: geo.divergence(&h1)?.values(),
        delta_star: ds.values(),
        trace: geo.trace(&h1).value(),
        bianchi: geo.bianchi(&h1)?.values(),
        ring_r: geo.ring_r(&h1)?.values(),
        einstein_op: geo.einstein_op(&h1)?.values(),
        einstein_op_tilde: geo.einstein_op_tilde(&h1)?.values(),
        fn_bracket: geo.fn_bracket(&h1, &h2)?.values(),
        sharp: geo.sharp(&h2, &dh).values(),
        d_nabla: dh.values(),
        self_tests,
    })
}

/// `½ g^{-1} L_V g` from partial derivatives only, `V = α♯`.
fn lie_derivative_oracle(geo: &Geo, alpha: &T64) -> Result<T64> {
    let d = geo.dim();
    let v = geo.raise(alpha);
    let g = geo.metric();
    let sp = geo.space();
    let sum = |f: &dyn Fn(usize) -> Jet<f64>| (0..d).fold(Jet::zero(sp), |acc, c| &acc + &f(c));
    let lie = Tensor::from_fn(d, &[Slot::Down, Slot::Down], |ix| {
        let (a, b) = (ix[0], ix[1]);
        let t1 = sum(&|c| v.at(&[c]) * &g.at(&[a, b]).d(c));
        let t2 = sum(&|c| g.at(&[c, b]) * &v.at(&[c]).d(a));
        let t3 = sum(&|c| g.at(&[a, c]) * &v.at(&[c]).d(b));
        (&(&t1 + &t2) + &t3).scale(0.5)
    });
    Ok(geo.endo_from_bilinear(&lie))
}

/// Operator identities at each point: Lie-derivative form of `δ*`, its
/// trace, `[id,h] = 0`, the two bracket formulas, `R̊ id = Ric`, `h♯`
/// self-adjointness and the Einstein condition.
pub fn operator_checks(metric: &ChartMetric, fields: &OperatorFields, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let names = [
        ("operators/delta_star_lie", "δ*α = ½ g⁻¹ L_{α♯} g"),
        ("operators/trace_delta_star", "tr δ*α = −d*α"),
        ("operators/fn_bracket_identity", "[id, h] = 0"),
        ("operators/fn_bracket_forms", "[h,h] via ∇ = −h♯d_∇h + d_∇h²"),
        ("operators/ring_r_identity", "R̊ id = Ric"),
        ("operators/ricci_einstein", "Ric = E·id"),
        ("operators/sharp_adjoint", "⟨h♯α, β⟩ = ⟨α, h♯β⟩"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let sp = JetSpace::get(metric.dim, 3, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let h = fields.h1.endo(&geo, &xs)?;
        let hb = fields.h2.endo(&geo, &xs)?;
        let alpha = fields.alpha.one_form(&xs)?;
        let ds = geo.delta_star(&alpha)?;
        let tr = Tensor::from_fn(1, &[Slot::Up], |_| geo.trace(&ds));
        let cd = Tensor::from_fn(1, &[Slot::Up], |_| -geo.codifferential(&alpha).expect("order checked"));
        let idb = geo.fn_bracket(&geo.identity(), &h)?;
        let zero3 = Tensor::zeros(sp, geo.dim(), idb.slots());
        let hh = geo.fn_bracket(&h, &h)?;
        let hh_nabla = geo.fn_bracket_self(&h)?;
        let ric = geo.ricci()?;
        let e_id = geo.identity().scale(geo.einstein());
        let a2 = geo.d_nabla(&h)?;
        let b2 = geo.d_nabla(&hb)?;
        let s1 = geo.inner_2form(&geo.sharp(&h, &a2), &b2).value();
        let s2 = geo.inner_2form(&a2, &geo.sharp(&h, &b2)).value();
        Ok(vec![
            res(&ds, &lie_derivative_oracle(&geo, &alpha)?),
            res(&tr, &cd),
            res(&idb, &zero3),
            res(&hh, &hh_nabla),
            res(&geo.ring_r(&geo.identity())?, &ric),
            res(&ric, &e_id),
            rel_residual(&[s1], &[s2]),
        ])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Weitzenböck formulas

/// Weitzenböck formulas on symmetric 2-tensors and on 1-forms.
pub fn weitzenboeck_check(
    metric: &ChartMetric,
    h: &FieldSpec,
    alpha: &FieldSpec,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    let names = [
        ("weitzenboeck/two_tensors", "δd_∇h + d_∇δh = ∇*∇h + Eh − R̊h"),
        ("weitzenboeck/two_tensors_split", "δd_∇h = −(δ* + ½d)δh + Δ_E h + Eh + R̊h"),
        ("weitzenboeck/one_forms", "2δδ*α − dd*α = Δα − 2Eα"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let sp = JetSpace::get(metric.dim, 3, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let e = geo.einstein();
        let hh = h.endo(&geo, &xs)?;
        let a = alpha.one_form(&xs)?;
        let ddh = geo.divergence_2form(&geo.d_nabla(&hh)?)?;
        let div = geo.divergence(&hh)?;
        let lhs0 = &ddh + &geo.nabla_vector(&div)?;
        let rr = geo.ring_r(&hh)?;
        let rhs0 = &(&geo.rough_laplacian(&hh)? + &hh.scale(e)) - &rr;
        let div_form = geo.lower(&div);
        let split = &geo.delta_star(&div_form)? + &geo.endo_from_2form(&geo.d_form(&div_form)?).scale(0.5);
        let rhs1 = &(&(&geo.einstein_op(&hh)? + &hh.scale(e)) + &rr) - &split;
        let lhs2 = &geo.lower(&geo.divergence(&geo.delta_star(&a)?)?).scale(2.0)
            - &geo.d_scalar(&geo.codifferential(&a)?)?;
        let rhs2 = &geo.hodge_laplacian(&a)? - &a.scale(2.0 * e);
        Ok(vec![res(&lhs0, &rhs0), res(&ddh, &rhs1), res(&lhs2, &rhs2)])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

// ---------------------------------------------------------------------------
// First variation

/// First variation of the Ricci endomorphism along `h_t = id + t·ḣ`, the
/// perturbed-connection tensor `η`, its traces, and the curvature of `g_h`.
pub fn variation_first(metric: &ChartMetric, hdot: &FieldSpec, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let names = [
        ("first_variation/ricci", "d/dt Ric^{g_t} = ½Δ̃_E ḣ"),
        ("first_variation/eta_koszul", "η = 2(∇^{g_h} − ∇^g) from g_h(η_X Y, Z) = g((∇_X h)Y, Z) + g(X, (∇_Y h)Z − (∇_Z h)Y)"),
        ("first_variation/eta_dot", "d/dt η = η̇ with g(η̇_X Y, Z) = g((∇_X ḣ)Y, Z) + g(X, (∇_Y ḣ)Z − (∇_Z ḣ)Y)"),
        ("first_variation/trace_eta_dot", "Σ η̇_{e_i} e_i = −𝒟ḣ"),
        ("first_variation/divergence_eta_dot", "δη̇ = ∇*∇ḣ + dδḣ"),
        ("first_variation/curvature_of_g_h", "R^h = R − ½((∇_X η)_Y − (∇_Y η)_X) − ¼[η_X, η_Y] at t = 0.1"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let d = metric.dim;
        // t-jets: d/dt Ric and η(h_t).
        let spt = JetSpace::get(d, 2, 1)?;
        let geo_t = metric.deformed_geometry(spt, x, None, hdot, None)?;
        let ric_dot = geo_t.ricci()?.t_derivatives(1);
        let base_t = metric.geometry_in(spt, x)?;
        let xt = coordinates(spt, x);
        let hd_t = hdot.endo(&base_t, &xt)?;
        let tj = Jet::t_var(spt);
        let h_t = &base_t.identity() + &hd_t.scale_jet(&tj);
        let eta_t = base_t.eta(&h_t)?;
        let dgam = (geo_t.christoffel() - base_t.christoffel()).scale(2.0);
        // Christoffel layout [i][a][b] vs η layout [a][b][i].
        let dgam = Tensor::from_fn(d, eta_t.slots(), |ix| dgam.at(&[ix[2], ix[0], ix[1]]).clone());
        let eta_vs_gamma = rel_residual(&eta_t.t_derivatives(1), &dgam.t_derivatives(1))
            .max(rel_residual(&eta_t.values(), &dgam.values()));

        // Operator side at t = 0.
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let hd = hdot.endo(&geo, &xs)?;
        let half_tilde = geo.einstein_op_tilde(&hd)?.scale(0.5);
        let eta_dot = geo.koszul(&hd)?;
        let tr_eta = geo.eta_trace(&eta_dot);
        let minus_bianchi = geo.raise(&geo.bianchi(&hd)?).scale(-1.0);
        let div_eta = geo.divergence_eta(&eta_dot)?;
        let dd = geo.endo_from_2form(&geo.d_form(&geo.lower(&geo.divergence(&hd)?))?);
        let rhs_iii = &geo.rough_laplacian(&hd)? + &dd;

        // Curvature of g_h at t = 0.1 two ways.
        let t = 0.1;
        let h = &geo.identity() + &hd.scale(t);
        let eta = geo.eta(&h)?;
        let neta = geo.nabla(&eta)?;
        let r = geo.riemann()?;
        let rh = Tensor::from_fn(d, r.slots(), |ix| {
            let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
            let mut v = r.at(ix).clone();
            v -= &(neta.at(&[k, l, j, i]) - neta.at(&[l, k, j, i])).scale(0.5);
            let mut br = Jet::zero(sp);
            for m in 0..d {
                br += &(eta.at(&[l, j, m]) * eta.at(&[k, m, i]));
                br -= &(eta.at(&[k, j, m]) * eta.at(&[l, m, i]));
            }
            v -= &br.scale(0.25);
            v
        });
        let direct = metric.deformed_geometry(sp, x, Some(t), hdot, None)?.riemann()?;

        Ok(vec![
            rel_residual(&ric_dot, &half_tilde.values()),
            eta_vs_gamma,
            rel_residual(&eta_t.t_derivatives(1), &eta_dot.values()),
            res(&tr_eta, &minus_bianchi),
            res(&div_eta, &rhs_iii),
            res(&rh, &direct),
        ])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

/// Gauge directions `ḣ = δ*X`: `Δ̃_E δ*X = 0` and the Ricci endomorphism is
/// stationary along them.
pub fn gauge_check(metric: &ChartMetric, x_field: &FieldSpec, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let names = [
        ("gauge/tilde_einstein_delta_star", "Δ̃_E δ*X = 0"),
        ("gauge/first_variation", "d/dt Ric^{g_t} = 0 for ḣ = δ*X"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let d = metric.dim;
        let sp = JetSpace::get(d, 3, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let ds = geo.delta_star(&x_field.one_form(&xs)?)?;
        let lap = geo.einstein_op_tilde(&ds)?;
        let zero = Tensor::zeros(sp, d, lap.slots());
        // Metric g + t g δ*X, built from jets of δ*X in the t-jet space.
        let spt = JetSpace::get(d, 3, 1)?;
        let base = metric.geometry_in(spt, x)?;
        let xt = coordinates(spt, x);
        let ds_t = base.delta_star(&x_field.one_form(&xt)?)?;
        let b = base.bilinear_from_endo(&ds_t);
        let tj = Jet::t_var(spt);
        let comps: Vec<Jet<f64>> = (0..d * d)
            .map(|k| base.metric().at(&[k / d, k % d]) + &(&tj * b.at(&[k / d, k % d])))
            .collect();
        let geo_t = PointGeometry::new(d, comps, Some(metric.einstein))?;
        let ric_dot = geo_t.ricci()?.t_derivatives(1);
        Ok(vec![res(&lap, &zero), rel_residual(&ric_dot, &vec![0.0; d * d])])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

/// Cross-check of the jet engine: `t`-derivatives of `Ric^{g_t}` against
/// 5-point finite differences with step `1e-3`.
pub fn tjet_fd_check(
    metric: &ChartMetric,
    hdot: &FieldSpec,
    hddot: &FieldSpec,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    let names = [
        ("jet/first_t_derivative", "t-jet d/dt Ric^{g_t} = 5-point difference"),
        ("jet/second_t_derivative", "t-jet d²/dt² Ric^{g_t} = 5-point difference"),
    ];
    let step = 1e-3;
    let worst = worst_over(points, names.len(), |x| {
        let d = metric.dim;
        let spt = JetSpace::get(d, 2, 2)?;
        let ric = metric.deformed_geometry(spt, x, None, hdot, Some(hddot))?.ricci()?;
        let sp = JetSpace::get(d, 2, 0)?;
        let at = |t: f64| -> Result<Vec<f64>> {
            Ok(metric.deformed_geometry(sp, x, Some(t), hdot, Some(hddot))?.ricci()?.values())
        };
        let (m2, m1, z, p1, p2) = (at(-2.0 * step)?, at(-step)?, at(0.0)?, at(step)?, at(2.0 * step)?);
        let fd1: Vec<f64> = (0..d * d).map(|k| (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * step)).collect();
        let fd2: Vec<f64> = (0..d * d)
            .map(|k| (-m2[k] + 16.0 * m1[k] - 30.0 * z[k] + 16.0 * p1[k] - p2[k]) / (12.0 * step * step))
            .collect();
        Ok(vec![rel_residual(&ric.t_derivatives(1), &fd1), rel_residual(&ric.t_derivatives(2), &fd2)])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Second variation

fn require_torus(metric: &ChartMetric) -> Result<()> {
    if !metric.is_torus() {
        return Err(Error::usage(format!("{} has no exact quadrature; integrated checks need torus3", metric.name())));
    }
    Ok(())
}

fn band_of(f: &FieldSpec) -> Result<u32> {
    f.validate()?;
    f.band().ok_or_else(|| Error::usage("integrated checks need trigonometric (band-limited) fields"))
}

/// Integrated terms of the second variation, each paired with `h₃`.
#[derive(Clone, Debug, Serialize)]
pub struct SecondVariation {
    /// `⟨2·d²/dt² Ric^{g_t}, h₃⟩`.
    pub lhs: f64,
    /// `⟨Δ̃_E(ḧ − (3/2)ḣ²), h₃⟩`.
    pub tilde_term: f64,
    /// `⟨v(ḣ,ḣ), h₃⟩` from its weak definition.
    pub v_term: f64,
    /// Remaining lower-order terms paired with `h₃`.
    pub rest: f64,
    pub rhs: f64,
    pub residual: f64,
    pub report: CheckReport,
}

/// Pairing of `h₃` with the right side of the second-variation formula,
/// pointwise part, split into (tilde term, rest).
fn second_variation_rhs(geo: &Geo, h: &T64, hh: &T64, big_h: &T64) -> Result<(f64, f64, f64)> {
    let e = geo.einstein();
    let h2 = geo.compose(h, h);
    let t1 = geo.einstein_op_tilde(&(hh - &h2.scale(1.5)))?;
    let trh = geo.trace(h);
    let dtrh2 = geo.d_scalar(&geo.trace(&h2))?;
    let t3 = geo.delta_star(&dtrh2)?.scale(-0.5);
    let div = geo.divergence(h)?;
    let bh = geo.bianchi(h)?;
    // The coefficient of hδh is −2; with +2 the identity fails at O(1).
    let form = &geo.lower(&geo.apply(h, &geo.raise(&bh))) - &geo.lower(&geo.apply(h, &div)).scale(2.0);
    let t4 = geo.delta_star(&form)?.scale(2.0);
    let t5 = geo.nabla_along(&geo.gradient(&trh)?, h)?.scale(-1.0);
    let inner = &geo.einstein_op_tilde(h)? + &geo.delta_star(&geo.d_scalar(&trh)?)?;
    let t6 = geo.anticommutator(h, &inner).scale(-0.5);
    let t2 = h2.scale(-e);
    let rest = &(&(&t2 + &t3) + &(&t4 + &t5)) + &t6;
    // ⟨v(h,h), H⟩ = ⟨[h,h], d_∇H⟩ + 2⟨[h,H], d_∇h⟩.
    let v = &geo.inner_2form(&geo.fn_bracket(h, h)?, &geo.d_nabla(big_h)?)
        + &geo.inner_2form(&geo.fn_bracket(h, big_h)?, &geo.d_nabla(h)?).scale(2.0);
    Ok((geo.inner_endo(&t1, big_h).value(), v.value(), geo.inner_endo(&rest, big_h).value()))
}

/// Weak form of the second variation of the Ricci endomorphism on the
/// torus, paired with `h₃`, plus the skew-part identity at `points`.
pub fn variation_second(
    metric: &ChartMetric,
    hdot: &FieldSpec,
    hddot: &FieldSpec,
    h3: &FieldSpec,
    grid: &GridQuadrature,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<SecondVariation> {
    require_torus(metric)?;
    let (b1, b2, b3) = (band_of(hdot)?, band_of(hddot)?, band_of(h3)?);
    grid.require_band((2 * b1).max(b2) + b3)?;
    let d = metric.dim;
    let m = grid.mean(4, |x| {
        let spt = JetSpace::get(d, 2, 2)?;
        let ric = metric.deformed_geometry(spt, x, None, hdot, Some(hddot))?.ricci()?;
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let h = hdot.endo(&geo, &xs)?;
        let hh = hddot.endo(&geo, &xs)?;
        let big_h = h3.endo(&geo, &xs)?;
        let lhs = 2.0 * inner_values(&geo, &ric.t_derivatives(2), &big_h.values());
        let (tilde, v, rest) = second_variation_rhs(&geo, &h, &hh, &big_h)?;
        Ok(vec![lhs, tilde, v, rest])
    })?;
    let (lhs, tilde_term, v_term, rest) = (m[0], m[1], m[2], m[3]);
    let rhs = tilde_term + v_term + rest;
    let scale = lhs.abs().max(tilde_term.abs()).max(v_term.abs()).max(rest.abs()).max(f64::MIN_POSITIVE);
    let residual = (lhs - rhs).abs() / scale;
    let mut report = CheckReport::new();
    report
        .residual(
            "second_variation/weak",
            "sym 2·d²/dt² Ric = Δ̃_E(ḧ − (3/2)h²) + v(h,h) − Eh² − ½δ*d tr h² + 2δ*(h𝒟h − 2hδh) − ∇_{grad tr h}h − ½{h, Δ̃_E h + δ*d tr h}",
            residual,
            tol,
        )
        .samples = Some(grid.len());
    let worst = worst_over(points, 1, |x| {
        let spt = JetSpace::get(d, 2, 2)?;
        let geo_t = metric.deformed_geometry(spt, x, None, hdot, Some(hddot))?;
        let ric = geo_t.ricci()?;
        let ric_bil = geo_t.ricci_bilinear()?;
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let hd = hdot.endo(&geo, &xs)?.values();
        let hdd = hddot.endo(&geo, &xs)?.values();
        let gi = geo.metric_inverse().values();
        let rb2 = ric_bil.t_derivatives(2);
        let e = metric.einstein;
        let lhs: Vec<f64> = (0..d * d)
            .map(|k| {
                let (i, j) = (k / d, k % d);
                (0..d).map(|l| gi[i * d + l] * rb2[l * d + j]).sum::<f64>() - e * hdd[k]
            })
            .collect();
        let r1 = ric.t_derivatives(1);
        let r2 = ric.t_derivatives(2);
        let rhs: Vec<f64> = (0..d * d)
            .map(|k| {
                let (i, j) = (k / d, k % d);
                r2[k] + 2.0 * (0..d).map(|l| hd[i * d + l] * r1[l * d + j]).sum::<f64>()
            })
            .collect();
        Ok(vec![rel_residual(&lhs, &rhs)])
    })?;
    report
        .residual("second_variation/skew_part", "g⁻¹ d²/dt²(ric − E g_t) = d²/dt² Ric + 2ḣ∘d/dt Ric", worst[0], tol)
        .samples = Some(points.len());
    Ok(SecondVariation { lhs, tilde_term, v_term, rest, rhs, residual, report })
}

// ---------------------------------------------------------------------------
// Identities

/// Fields consumed by [`identity_checks`].
#[derive(Clone, Debug, Serialize)]
pub struct IdentityFields {
    pub h: FieldSpec,
    pub big_h: FieldSpec,
    pub x: FieldSpec,
    pub f: FieldSpec,
}

impl IdentityFields {
    /// Random fields suited to the fixture's domain.
    pub fn random(metric: &ChartMetric, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = basis(metric);
        let d = metric.dim;
        IdentityFields {
            h: FieldSpec::random(FieldKind::Symmetric, d, b, 1.0, &mut rng),
            big_h: FieldSpec::random(FieldKind::Symmetric, d, b, 1.0, &mut rng),
            x: FieldSpec::random(FieldKind::OneForm, d, b, 1.0, &mut rng),
            f: FieldSpec::random(FieldKind::Scalar, d, b, 1.0, &mut rng),
        }
    }
}

/// `L = Σ ∇_{e_i}h ∘ ∇_{e_i}h`.
fn nabla_square(geo: &Geo, nh: &T64) -> T64 {
    let d = geo.dim();
    let sp = geo.space();
    Tensor::from_fn(d, &[Slot::Up, Slot::Down], |ix| {
        let mut acc = Jet::zero(sp);
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    acc += &(&(geo.metric_inverse().at(&[a, b]) * nh.at(&[a, ix[0], k])) * nh.at(&[b, k, ix[1]]));
                }
            }
        }
        acc
    })
}

/// Pointwise identities for the quadratic terms (directional and product
/// formulas for `η̇`), `𝒟Δ̃_E = 0` and the gauge formulas for `δ*X + f·id`.
pub fn identity_checks_pointwise(
    metric: &ChartMetric,
    fields: &IdentityFields,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<CheckReport> {
    let names = [
        ("identities/directional", "g(∇_{hX}h + h∘η̇_X, H) = g(−X⌟[h,h] + ∇_X h², H)"),
        ("identities/product_i", "Σ g(η̇_{e_i}(∇_{e_j}h)e_i, He_j) = −⟨d_∇h, H♯d_∇h⟩ + g(L,H)"),
        ("identities/product_ii", "g(Σ η̇_{e_i}², H) = g(L,H) − ⟨d_∇h, H♯d_∇h⟩"),
        ("identities/product_combo", "−½g(Σ η̇_{e_i}², H) + Σ g(η̇_{e_i}(∇_{e_j}h)e_i, He_j) = ½(g(L,H) − ⟨d_∇h, H♯d_∇h⟩)"),
        ("identities/bianchi_tilde_einstein", "𝒟 Δ̃_E h = 0"),
        ("identities/bianchi_gauge", "𝒟(δ*X + f·id) = (Δ − 2E)X + (n−2)df"),
        ("identities/tilde_einstein_conformal", "Δ̃_E(f·id) = (Δf − 2Ef)id − (n−2)δ*df"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let d = metric.dim;
        let n = d as f64;
        let sp = JetSpace::get(d, 3, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let e = geo.einstein();
        let h = fields.h.endo(&geo, &xs)?;
        let big_h = fields.big_h.endo(&geo, &xs)?;
        let nh = geo.nabla(&h)?;
        let eta = geo.koszul(&h)?;
        let hh = geo.fn_bracket(&h, &h)?;
        let nh2 = geo.nabla(&geo.compose(&h, &h))?;

        // Directional identity, one residual per coordinate direction.
        let mut dl = Vec::new();
        let mut dr = Vec::new();
        for a in 0..d {
            let along_h = Tensor::from_fn(d, &[Slot::Up, Slot::Down], |ix| {
                (0..d).fold(Jet::zero(sp), |acc, c| &acc + &(h.at(&[c, a]) * nh.at(&[c, ix[0], ix[1]])))
            });
            let lhs = &along_h + &geo.compose(&h, &geo.eta_slice(&eta, a));
            let ea = Tensor::from_fn(d, &[Slot::Up], |i| Jet::constant(sp, if i[0] == a { 1.0 } else { 0.0 }));
            let nxa = Tensor::from_fn(d, &[Slot::Up, Slot::Down], |ix| nh2.at(&[a, ix[0], ix[1]]).clone());
            let rhs = &nxa - &geo.interior(&ea, &hh);
            dl.push(geo.inner_endo(&lhs, &big_h).value());
            dr.push(geo.inner_endo(&rhs, &big_h).value());
        }

        // Product identities.
        let l = nabla_square(&geo, &nh);
        let dh = geo.d_nabla(&h)?;
        let gl = geo.inner_endo(&l, &big_h).value();
        let sharp_term = geo.inner_2form(&dh, &geo.sharp(&big_h, &dh)).value();
        let mut prod_i = Jet::zero(sp);
        let mut eta_sq = Tensor::zeros(sp, d, &[Slot::Up, Slot::Down]);
        let gi = geo.metric_inverse();
        let hl = geo.bilinear_from_endo(&big_h);
        for a in 0..d {
            for b in 0..d {
                let gab = gi.at(&[a, b]);
                eta_sq = &eta_sq + &geo.compose(&geo.eta_slice(&eta, a), &geo.eta_slice(&eta, b)).scale_jet(gab);
                for c in 0..d {
                    for e2 in 0..d {
                        // g^{ab} g^{ce} g(η̇_{∂a}((∇_c h)∂_b), H∂_e)
                        let w = gab * gi.at(&[c, e2]);
                        let mut inner = Jet::zero(sp);
                        for m in 0..d {
                            for i in 0..d {
                                inner += &(&(eta.at(&[a, m, i]) * nh.at(&[c, m, b])) * hl.at(&[i, e2]));
                            }
                        }
                        prod_i += &(&w * &inner);
                    }
                }
            }
        }
        let prod_i = prod_i.value();
        let prod_ii = geo.inner_endo(&eta_sq, &big_h).value();

        // Hodge-type identities.
        let hodge = geo.bianchi(&geo.einstein_op_tilde(&h)?)?;
        let zero_form = Tensor::zeros(sp, d, &[Slot::Down]);
        let xf = fields.x.one_form(&xs)?;
        let f = fields.f.scalar(&xs)?;
        let id = geo.identity();
        let df = geo.d_scalar(&f)?;
        let eq1_l = geo.bianchi(&(&geo.delta_star(&xf)? + &id.scale_jet(&f)))?;
        let eq1_r = &(&geo.hodge_laplacian(&xf)? - &xf.scale(2.0 * e)) + &df.scale(n - 2.0);
        let eq2_l = geo.einstein_op_tilde(&id.scale_jet(&f))?;
        let lap_f = &geo.laplacian(&f)? - &f.scale(2.0 * e);
        let eq2_r = &id.scale_jet(&lap_f) - &geo.delta_star(&df)?.scale(n - 2.0);

        Ok(vec![
            rel_residual(&dl, &dr),
            rel_residual(&[prod_i], &[gl - sharp_term]),
            rel_residual(&[prod_ii], &[gl - sharp_term]),
            rel_residual(&[-0.5 * prod_ii + prod_i], &[0.5 * (gl - sharp_term)]),
            res(&hodge, &zero_form),
            res(&eq1_l, &eq1_r),
            res(&eq2_l, &eq2_r),
        ])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

fn integrated_residual(a: f64, b: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(a.abs().max(b.abs()), |m, t| m.max(t.abs())).max(f64::MIN_POSITIVE);
    (a - b).abs() / scale
}

/// Integrated identities on the torus: the bracket formula for the product
/// terms, the integration-by-parts chain for `v`, and `δ` as the `L²`
/// adjoint of `d_∇`.
pub fn identity_checks_integrated(
    metric: &ChartMetric,
    h: &FieldSpec,
    big_h: &FieldSpec,
    grid: &GridQuadrature,
    tol: f64,
) -> Result<CheckReport> {
    require_torus(metric)?;
    let (bh, bb) = (band_of(h)?, band_of(big_h)?);
    grid.require_band(2 * bh + bb)?;
    let d = metric.dim;
    let m = grid.mean(11, |x| {
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let e = geo.einstein();
        let h = h.endo(&geo, &xs)?;
        let big = big_h.endo(&geo, &xs)?;
        let nh = geo.nabla(&h)?;
        let dh = geo.d_nabla(&h)?;
        let dbig = geo.d_nabla(&big)?;
        let hh = geo.fn_bracket(&h, &h)?;
        let hbig = geo.fn_bracket(&h, &big)?;
        let h2 = geo.compose(&h, &h);
        let ip = |a: &T64, b: &T64| geo.inner_2form(a, b).value();
        let ie = |a: &T64, b: &T64| geo.inner_endo(a, b).value();
        // Bracket formula for the product terms.
        let lhs = ie(&nabla_square(&geo, &nh), &big) - ip(&dh, &geo.sharp(&big, &dh));
        let trh = geo.trace(&h);
        let a1 = &geo.einstein_op_tilde(&h2)? + &geo.delta_star(&geo.d_scalar(&geo.trace(&h2))?)?;
        let a2 = &geo.einstein_op_tilde(&h)? + &geo.delta_star(&geo.d_scalar(&trh)?)?;
        let pointwise = &(&a1.scale(0.5) - &geo.anticommutator(&h, &a2).scale(0.5)) - &h2.scale(e);
        let w1 = ip(&hh, &dbig);
        let w2 = ip(&hbig, &dh);
        let pw = ie(&pointwise, &big);
        // Chain for ⟨v(h,h), H⟩.
        let dh2 = geo.d_nabla(&h2)?;
        let dhb = geo.d_nabla(&geo.anticommutator(&h, &big))?;
        let c2 = -2.0 * ip(&geo.sharp(&h, &dh), &dbig) + ip(&dh2, &dbig) - ip(&dh, &geo.sharp(&big, &dh)) + ip(&dhb, &dh);
        let ddbig = geo.divergence_2form(&dbig)?;
        let ddh = geo.divergence_2form(&dh)?;
        let c3 = -2.0 * ip(&dh, &geo.sharp(&h, &dbig)) - ip(&dh, &geo.sharp(&big, &dh))
            + ie(&h2, &ddbig)
            + ie(&geo.anticommutator(&h, &ddh), &big);
        // Adjointness of δ and d_∇.
        let strong = ie(&geo.divergence_2form(&hh)?, &big);
        let l_term = ie(&nabla_square(&geo, &nh), &big);
        let s_term = ip(&dh, &geo.sharp(&big, &dh));
        Ok(vec![lhs, w1, w2, pw, c2, c3, strong, l_term, s_term, ie(&h2, &ddbig), ie(&geo.anticommutator(&h, &ddh), &big)])
    })?;
    let (lhs, w1, w2, pw, c2, c3, strong) = (m[0], m[1], m[2], m[3], m[4], m[5], m[6]);
    let rhs = -w1 + 2.0 * w2 + pw;
    let v = w1 + 2.0 * w2;
    let mut rep = CheckReport::new();
    let samples = Some(grid.len());
    rep.residual(
        "identities/bracket_product_terms",
        "⟨L,H⟩ − ⟨d_∇h, H♯d_∇h⟩ = −⟨δ[h,h],H⟩ + 2⟨δ[h,H],h⟩ + ⟨½(Δ̃_E h² + δ*d tr h²) − ½{h, Δ̃_E h + δ*d tr h} − Eh², H⟩",
        integrated_residual(lhs, rhs, &[m[7], m[8], w1, w2, pw]),
        tol,
    )
    .samples = samples;
    rep.residual(
        "identities/v_chain_brackets",
        "⟨[h,h], d_∇H⟩ + 2⟨[h,H], d_∇h⟩ = −2⟨h♯d_∇h, d_∇H⟩ + ⟨d_∇h², d_∇H⟩ − ⟨d_∇h, H♯d_∇h⟩ + ⟨d_∇{h,H}, d_∇h⟩",
        integrated_residual(v, c2, &[w1, w2]),
        tol,
    )
    .samples = samples;
    rep.residual(
        "identities/v_chain_by_parts",
        "⟨v(h,h),H⟩ = −2⟨d_∇h, h♯d_∇H⟩ − ⟨d_∇h, H♯d_∇h⟩ + ⟨h², δd_∇H⟩ + ⟨{h, δd_∇h}, H⟩",
        integrated_residual(v, c3, &[w1, w2, m[9], m[10]]),
        tol,
    )
    .samples = samples;
    rep.residual(
        "identities/divergence_adjoint",
        "⟨δ[h,h], H⟩ = ⟨[h,h], d_∇H⟩",
        integrated_residual(strong, w1, &[]),
        tol,
    )
    .samples = samples;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Koiso obstruction

/// Integrated terms of the obstruction identity for divergence-free `h`.
#[derive(Clone, Debug, Serialize)]
pub struct KoisoResult {
    /// `2∫P(h)`.
    pub two_p: f64,
    /// `⟨δ[h,h], h⟩`.
    pub bracket: f64,
    /// `⟨Δ_E h, h²⟩`.
    pub einstein: f64,
    /// `∫ tr h³`.
    pub cubic: f64,
    pub residual: f64,
    pub report: CheckReport,
}

/// `2P(h) = 3g(∇²_{e_i,he_i}h, h) − 6g((∇²_{e_i,e_j}h)he_i, he_j) + 2E tr h³`.
fn two_p_density(geo: &Geo, h: &T64) -> Result<Jet<f64>> {
    let d = geo.dim();
    let sp = geo.space();
    let nnh = geo.nabla(&geo.nabla(h)?)?;
    let gi = geo.metric_inverse();
    let g = geo.metric();
    let mut t1 = Jet::zero(sp);
    let mut t2 = Jet::zero(sp);
    for a in 0..d {
        for b in 0..d {
            let slice = Tensor::from_fn(d, &[Slot::Up, Slot::Down], |ix| nnh.at(&[a, b, ix[0], ix[1]]).clone());
            let w = (0..d).fold(Jet::zero(sp), |acc, c| &acc + &(gi.at(&[a, c]) * h.at(&[b, c])));
            t1 += &(&w * &geo.inner_endo(&slice, h));
            // g^{ac} g^{be} g_{ik} (∇²_{ab}h)^i_m h^m_c h^k_e
            let sh = geo.compose(&slice, h);
            for c in 0..d {
                for e in 0..d {
                    let w = gi.at(&[a, c]) * gi.at(&[b, e]);
                    let mut s = Jet::zero(sp);
                    for i in 0..d {
                        for k in 0..d {
                            s += &(&(g.at(&[i, k]) * sh.at(&[i, c])) * h.at(&[k, e]));
                        }
                    }
                    t2 += &(&w * &s);
                }
            }
        }
    }
    let h3 = geo.trace(&geo.compose(h, &geo.compose(h, h)));
    Ok(&(&t1.scale(3.0) - &t2.scale(6.0)) + &h3.scale(2.0 * geo.einstein()))
}

/// `2∫P(h) = 3⟨δ[h,h],h⟩ − (3/2)⟨Δ_E h, h²⟩ − E∫tr h³` for `δh = 0`.
pub fn koiso_check(metric: &ChartMetric, h: &FieldSpec, grid: &GridQuadrature, tol: f64) -> Result<KoisoResult> {
    require_torus(metric)?;
    let b = band_of(h)?;
    grid.require_band(3 * b)?;
    let d = metric.dim;
    let m = grid.mean(5, |x| {
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let xs = coordinates(sp, x);
        let hh = h.endo(&geo, &xs)?;
        let div = geo.divergence(&hh)?.values();
        let div_max = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h2 = geo.compose(&hh, &hh);
        Ok(vec![
            two_p_density(&geo, &hh)?.value(),
            geo.inner_endo(&geo.divergence_2form(&geo.fn_bracket(&hh, &hh)?)?, &hh).value(),
            geo.inner_endo(&geo.einstein_op(&hh)?, &h2).value(),
            geo.trace(&geo.compose(&hh, &h2)).value(),
            div_max * div_max,
        ])
    })?;
    let div_rms = m[4].sqrt();
    if !(div_rms < tol) {
        return Err(Error::Invalid(format!("field is not divergence-free: rms |δh| = {div_rms:e}")));
    }
    let (two_p, bracket, einstein, cubic) = (m[0], m[1], m[2], m[3]);
    let e = metric.einstein;
    let rhs = 3.0 * bracket - 1.5 * einstein - e * cubic;
    let residual = integrated_residual(two_p, rhs, &[3.0 * bracket, 1.5 * einstein, e * cubic]);
    let mut report = CheckReport::new();
    report
        .residual("koiso/divergence_free", "δh = 0", div_rms, tol)
        .samples = Some(grid.len());
    report
        .residual("koiso/identity", "2∫P(h) = 3⟨δ[h,h],h⟩ − (3/2)⟨Δ_E h, h²⟩ − E∫tr h³", residual, tol)
        .samples = Some(grid.len());
    Ok(KoisoResult { two_p, bracket, einstein, cubic, residual, report })
}

// ---------------------------------------------------------------------------
// Kähler type

/// Type projections for a parallel complex structure `J`: commuting part
/// `½(A − JAJ)` and anti-commuting part `½(A + JAJ)`.
fn type_parts(geo: &Geo, j: &T64, a: &T64) -> (T64, T64) {
    let jaj = geo.compose(j, &geo.compose(a, j));
    ((a - &jaj).scale(0.5), (a + &jaj).scale(0.5))
}

/// `R̊` preserves `S^{2,+}` and `S^{2,−}` on a Kähler fixture.
pub fn kahler_type_check(metric: &ChartMetric, h: &FieldSpec, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
    let names = [
        ("kahler/parallel_j", "∇J = 0"),
        ("kahler/plus_type", "R̊ S^{2,+} ⊂ S^{2,+}"),
        ("kahler/minus_type", "R̊ S^{2,−} ⊂ S^{2,−}"),
        ("kahler/ricci_type", "R̊ id = Ric ∈ S^{2,+}"),
    ];
    let worst = worst_over(points, names.len(), |x| {
        let d = metric.dim;
        let sp = JetSpace::get(d, 2, 0)?;
        let geo = metric.geometry_in(sp, x)?;
        let j = metric
            .complex_structure(sp)
            .ok_or_else(|| Error::usage(format!("{} has no complex structure", metric.name())))?;
        let nj = geo.nabla(&j)?;
        let nj_res = rel_residual(&nj.values(), &vec![0.0; nj.components().len()]);
        if !(nj_res < tol) {
            return Err(Error::Invalid(format!("complex structure not parallel: |∇J| = {nj_res:e}")));
        }
        let xs = coordinates(sp, x);
        let hh = h.endo(&geo, &xs)?;
        let (plus, minus) = type_parts(&geo, &j, &hh);
        let zero = vec![0.0; d * d];
        let (_, leak_plus) = type_parts(&geo, &j, &geo.ring_r(&plus)?);
        let (leak_minus, _) = type_parts(&geo, &j, &geo.ring_r(&minus)?);
        let (_, leak_id) = type_parts(&geo, &j, &geo.ring_r(&geo.identity())?);
        Ok(vec![
            nj_res,
            rel_residual(&leak_plus.values(), &zero),
            rel_residual(&leak_minus.values(), &zero),
            rel_residual(&leak_id.values(), &zero),
        ])
    })?;
    let mut rep = CheckReport::new();
    push_all(&mut rep, &names, &worst, tol, points.len());
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Suite

/// Options of [`chart_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartOptions {
    pub seed: u64,
    pub grid: usize,
    pub points: usize,
    pub triples: usize,
    pub tolerances: ChartTolerances,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions { seed: 1, grid: 9, points: 20, triples: 5, tolerances: ChartTolerances::default() }
    }
}

/// Seed offsets keep each check's random inputs independent.
pub(crate) fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

/// Every chart check applicable to a fixture; names are prefixed by
/// `chart/<fixture>`.
pub fn chart_suite(fixture: Fixture, opts: &ChartOptions) -> Result<CheckReport> {
    let metric = ChartMetric::new(fixture)?;
    let tol = &opts.tolerances;
    let pts = metric.random_points(opts.points, sub_seed(opts.seed, 1));
    let mut rep = metric.validate(&pts, tol.einstein)?;
    let ops = OperatorFields::random(&metric, sub_seed(opts.seed, 2));
    rep.extend(operator_checks(&metric, &ops, &pts, tol.pointwise)?);
    let b = basis(&metric);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(opts.seed, 3));
    let d = metric.dim;
    let sym = |rng: &mut ChaCha8Rng| FieldSpec::random(FieldKind::Symmetric, d, b, 1.0, rng);
    let form = |rng: &mut ChaCha8Rng| FieldSpec::random(FieldKind::OneForm, d, b, 1.0, rng);
    let (h, alpha) = (sym(&mut rng), form(&mut rng));
    rep.extend(weitzenboeck_check(&metric, &h, &alpha, &pts, tol.weitzenboeck)?);
    let hdot = sym(&mut rng);
    rep.extend(variation_first(&metric, &hdot, &pts, tol.first_variation)?);
    rep.extend(gauge_check(&metric, &form(&mut rng), &pts, tol.first_variation)?);
    let hddot = sym(&mut rng);
    let few = &pts[..pts.len().min(5)];
    rep.extend(tjet_fd_check(&metric, &hdot, &hddot, few, tol.finite_difference)?);
    let ids = IdentityFields::random(&metric, sub_seed(opts.seed, 4));
    rep.extend(identity_checks_pointwise(&metric, &ids, &pts, tol.pointwise)?);
    if metric.is_torus() {
        let grid = GridQuadrature::new(opts.grid, d)?;
        rep.extend(identity_checks_integrated(&metric, &ids.h, &ids.big_h, &grid, tol.pointwise)?);
        for k in 0..opts.triples {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(opts.seed, 100 + k as u64));
            let (a, b2, c) = (sym(&mut rng), sym(&mut rng), sym(&mut rng));
            rep.extend(variation_second(&metric, &a, &b2, &c, &grid, few, tol.second_variation)?.report);
            let hk = FieldSpec::divergence_free_torus(d, 1, 1.0, &mut rng);
            rep.extend(koiso_check(&metric, &hk, &grid, tol.koiso)?.report);
        }
    }
    if fixture == Fixture::Cp2 {
        rep.extend(kahler_type_check(&metric, &sym(&mut rng), &pts, tol.kahler)?);
    }
    Ok(rep.worst_by_name().prefixed(&format!("chart/{}", metric.name())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> ChartMetric {
        ChartMetric::new(Fixture::Torus3).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn sym(metric: &ChartMetric, rng: &mut ChaCha8Rng) -> FieldSpec {
        FieldSpec::random(FieldKind::Symmetric, metric.dim, basis(metric), 1.0, rng)
    }

    #[test]
    fn first_variation_along_identity() {
        // g_t = (1 + tλ)g scales Ric by 1/(1 + tλ): d/dt Ric = −Eλ id.
        let m = ChartMetric::new(Fixture::Sphere3).unwrap();
        let lambda = 0.7;
        let hdot = FieldSpec::identity_multiple(3, lambda);
        let sp = JetSpace::get(3, 2, 1).unwrap();
        for x in m.random_points(3, 1) {
            let rd = m.deformed_geometry(sp, &x, None, &hdot, None).unwrap().ricci().unwrap().t_derivatives(1);
            let want: Vec<f64> = (0..9).map(|k| if k % 4 == 0 { -m.einstein * lambda } else { 0.0 }).collect();
            assert!(crate::report::rel_residual(&rd, &want) < 1e-12);
        }
        let rep = variation_first(&m, &hdot, &m.random_points(3, 2), 1e-8).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn second_variation_degenerate_inputs() {
        let m = torus();
        let grid = GridQuadrature::new(7, 3).unwrap();
        let pts = m.random_points(2, 3);
        let mut r = rng(4);
        let (hdd, h3) = (sym(&m, &mut r), sym(&m, &mut r));
        // ḣ = 0: only the linear term survives.
        let zero = FieldSpec::identity_multiple(3, 0.0);
        let sv = variation_second(&m, &zero, &hdd, &h3, &grid, &pts, 1e-6).unwrap();
        assert!(sv.report.all_pass(), "{:?}", sv.report.failures());
        assert_eq!((sv.v_term, sv.rest), (0.0, 0.0));
        assert!((sv.lhs - sv.tilde_term).abs() < 1e-12 * sv.lhs.abs().max(1.0));
        // H = id.
        let hd = sym(&m, &mut r);
        let id = FieldSpec::identity_multiple(3, 1.0);
        let sv = variation_second(&m, &hd, &hdd, &id, &grid, &pts, 1e-6).unwrap();
        assert!(sv.report.all_pass(), "{:?}", sv.report.failures());
    }

    #[test]
    fn second_variation_needs_fine_grid() {
        let m = torus();
        let mut r = rng(5);
        let (a, b, c) = (sym(&m, &mut r), sym(&m, &mut r), sym(&m, &mut r));
        let coarse = GridQuadrature::new(5, 3).unwrap();
        let err = variation_second(&m, &a, &b, &c, &coarse, &[], 1e-6).unwrap_err();
        assert!(err.is_usage(), "{err}");
    }

    #[test]
    fn integrated_checks_need_torus() {
        let m = ChartMetric::new(Fixture::Sphere3).unwrap();
        let mut r = rng(6);
        let h = sym(&m, &mut r);
        let grid = GridQuadrature::new(9, 3).unwrap();
        assert!(koiso_check(&m, &h, &grid, 1e-6).unwrap_err().is_usage());
        assert!(variation_second(&m, &h, &h, &h, &grid, &[], 1e-6).unwrap_err().is_usage());
    }

    #[test]
    fn polynomial_fields_have_no_band() {
        let m = torus();
        let mut r = rng(7);
        let h = FieldSpec::random(FieldKind::Symmetric, 3, Basis::Polynomial { degree: 2 }, 1.0, &mut r);
        let grid = GridQuadrature::new(9, 3).unwrap();
        assert!(koiso_check(&m, &h, &grid, 1e-6).unwrap_err().is_usage());
    }

    #[test]
    fn koiso_rejects_divergent_fields() {
        let m = torus();
        let h = sym(&m, &mut rng(8));
        let grid = GridQuadrature::new(9, 3).unwrap();
        let err = koiso_check(&m, &h, &grid, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)), "{err}");
    }

    #[test]
    fn koiso_terms_vanish_for_parallel_fields() {
        let m = torus();
        let h = FieldSpec::constant_symmetric(3, &[1.0, 0.2, -0.3, 0.2, 0.5, 0.1, -0.3, 0.1, -1.5]);
        let grid = GridQuadrature::new(3, 3).unwrap();
        let k = koiso_check(&m, &h, &grid, 1e-12).unwrap();
        assert_eq!((k.two_p, k.bracket, k.einstein), (0.0, 0.0, 0.0));
        assert!(k.report.all_pass());
    }

    #[test]
    fn koiso_identity_on_random_divergence_free_field() {
        let m = torus();
        let h = FieldSpec::divergence_free_torus(3, 1, 1.0, &mut rng(9));
        let k = koiso_check(&m, &h, &GridQuadrature::new(7, 3).unwrap(), 1e-6).unwrap();
        assert!(k.report.all_pass(), "{:?}", k.report.failures());
        assert!(k.two_p.abs() > 1e-3, "identity is not vacuous");
    }

    #[test]
    fn sphere_suite_passes() {
        let opts = ChartOptions { points: 5, ..ChartOptions::default() };
        let rep = chart_suite(Fixture::Sphere3, &opts).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
        assert!(rep.checks.iter().all(|c| c.check_name.starts_with("chart/sphere3/")));
    }

    #[test]
    fn kahler_checks_only_on_cp2() {
        let m = torus();
        let h = sym(&m, &mut rng(10));
        assert!(kahler_type_check(&m, &h, &m.random_points(1, 1), 1e-8).unwrap_err().is_usage());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(8))]

        #[test]
        fn pointwise_identities_hold_for_random_fields(seed in 0u64..1_000_000, fx in 0usize..3) {
            let m = ChartMetric::new(Fixture::ALL[fx]).unwrap();
            let mut r = rng(seed);
            let h = sym(&m, &mut r);
            let alpha = FieldSpec::random(FieldKind::OneForm, m.dim, basis(&m), 1.0, &mut r);
            let pts = m.random_points(2, seed);
            let w = weitzenboeck_check(&m, &h, &alpha, &pts, 1e-7).unwrap();
            proptest::prop_assert!(w.all_pass(), "{:?}", w.failures());
            let v = variation_first(&m, &h, &pts, 1e-8).unwrap();
            proptest::prop_assert!(v.all_pass(), "{:?}", v.failures());
        }
    }
}
