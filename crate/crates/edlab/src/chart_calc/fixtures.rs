//! Registry of chart metrics: flat torus, round sphere, Fubini–Study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::fields::{coordinates, FieldSpec};
use super::geometry::PointGeometry;
use super::jet::{Jet, JetSpace};
use super::tensor::{Slot, Tensor};
use crate::error::{Error, Result};
use crate::report::{rel_residual, CheckReport};
use crate::scalar::Real;

/// Coordinate domain of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Torus { period: f64 },
    Ball { radius: f64 },
}

/// Registered fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    /// Flat `ℝ³/(2πℤ)³`, `E = 0`.
    Torus3,
    /// Unit round `S³` in the stereographic chart `4δ/(1+|x|²)²`, `E = 2`.
    Sphere3,
    /// `ℂP²` with the Kähler metric of potential `log(1+|z|²)`; `E` computed.
    Cp2,
}

impl Fixture {
    /// Every registered fixture.
    pub const ALL: [Fixture; 3] = [Fixture::Torus3, Fixture::Sphere3, Fixture::Cp2];

    /// Registry name.
    pub fn name(self) -> &'static str {
        match self {
            Fixture::Torus3 => "torus3",
            Fixture::Sphere3 => "sphere3",
            Fixture::Cp2 => "cp2",
        }
    }

    /// Looks up a registry name.
    pub fn parse(name: &str) -> Result<Self> {
        Fixture::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::usage(format!("unknown fixture '{name}' (expected torus3, sphere3 or cp2)")))
    }
}

/// Tolerance for the Einstein condition at fixture validation.
pub const EINSTEIN_TOL: f64 = 1e-9;

/// A chart metric with its Einstein constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartMetric {
    pub fixture: Fixture,
    pub dim: usize,
    pub domain: Domain,
    /// Einstein constant; declared, or computed at the chart origin.
    pub einstein: f64,
    pub declared: bool,
}

impl ChartMetric {
    /// Builds a registered fixture.
    pub fn new(fixture: Fixture) -> Result<Self> {
        let (dim, domain, einstein) = match fixture {
            Fixture::Torus3 => (3, Domain::Torus { period: 2.0 * PI }, Some(0.0)),
            Fixture::Sphere3 => (3, Domain::Ball { radius: 1.0 }, Some(2.0)),
            Fixture::Cp2 => (4, Domain::Ball { radius: 1.0 }, None),
        };
        let mut m = ChartMetric { fixture, dim, domain, einstein: 0.0, declared: einstein.is_some() };
        m.einstein = match einstein {
            Some(e) => e,
            None => m.geometry_with(JetSpace::get(dim, 2, 0)?, &vec![0.0; dim], None)?.einstein(),
        };
        Ok(m)
    }

    /// Builds a fixture by registry name.
    pub fn by_name(name: &str) -> Result<Self> {
        Self::new(Fixture::parse(name)?)
    }

    /// Registry name.
    pub fn name(&self) -> &'static str {
        self.fixture.name()
    }

    /// True for the flat torus, where grid quadrature is exact.
    pub fn is_torus(&self) -> bool {
        matches!(self.domain, Domain::Torus { .. })
    }

    /// Metric components `g_ij` (row-major) at the coordinate jets `x`.
    pub fn components<T: Real>(&self, x: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
        if x.len() != self.dim {
            return Err(Error::usage(format!("{} needs {} coordinates", self.name(), self.dim)));
        }
        let sp = x[0].space();
        let d = self.dim;
        let one = Jet::constant(sp, T::one());
        Ok(match self.fixture {
            Fixture::Torus3 => (0..d * d)
                .map(|k| if k / d == k % d { one.clone() } else { Jet::zero(sp) })
                .collect(),
            Fixture::Sphere3 => {
                let mut q = one.clone();
                for xi in x {
                    q += &(xi * xi);
                }
                let c = (&q * &q).recip()?.scale(T::c(4.0));
                (0..d * d).map(|k| if k / d == k % d { c.clone() } else { Jet::zero(sp) }).collect()
            }
            Fixture::Cp2 => {
                // Real coordinates (x₁, y₁, x₂, y₂); h_{ab̄} = (qδ_ab − z̄_a z_b)/q²,
                // g(∂x_a,∂x_b) = g(∂y_a,∂y_b) = 2 Re h_{ab̄}, g(∂x_a,∂y_b) = 2 Im h_{ab̄}.
                let (xs, ys) = ([&x[0], &x[2]], [&x[1], &x[3]]);
                let mut q = one.clone();
                for xi in x {
                    q += &(xi * xi);
                }
                let iq2 = (&q * &q).recip()?.scale(T::c(2.0));
                let mut g = vec![Jet::zero(sp); 16];
                for a in 0..2 {
                    for b in 0..2 {
                        let mut re = -(&(xs[a] * xs[b]) + &(ys[a] * ys[b]));
                        if a == b {
                            re += &q;
                        }
                        let im = -(&(xs[a] * ys[b]) - &(ys[a] * xs[b]));
                        let re = &re * &iq2;
                        let im = &im * &iq2;
                        g[(2 * a) * 4 + 2 * b] = re.clone();
                        g[(2 * a + 1) * 4 + 2 * b + 1] = re;
                        g[(2 * a) * 4 + 2 * b + 1] = im.clone();
                        g[(2 * b + 1) * 4 + 2 * a] = im;
                    }
                }
                g
            }
        })
    }

    fn geometry_with(&self, sp: &'static JetSpace, x0: &[f64], einstein: Option<f64>) -> Result<PointGeometry<f64>> {
        let x = coordinates(sp, x0);
        PointGeometry::new(self.dim, self.components(&x)?, einstein)
    }

    /// Geometry at `x0` with jets of the given space order and no `t`.
    pub fn geometry(&self, x0: &[f64], order: usize) -> Result<PointGeometry<f64>> {
        self.geometry_with(JetSpace::get(self.dim, order, 0)?, x0, Some(self.einstein))
    }

    /// Geometry at `x0` in a given jet space (metric independent of `t`).
    pub fn geometry_in(&self, sp: &'static JetSpace, x0: &[f64]) -> Result<PointGeometry<f64>> {
        self.geometry_with(sp, x0, Some(self.einstein))
    }

    /// Components of `g_t = g(h_t·,·)` with `h_t = id + t·ḣ + (t²/2)·ḧ`,
    /// where `t` is any jet (the `t` variable or a constant).
    pub fn deformed_components<T: Real>(
        &self,
        x: &[Jet<T>],
        t: &Jet<T>,
        hdot: &FieldSpec,
        hddot: Option<&FieldSpec>,
    ) -> Result<Vec<Jet<T>>> {
        let g = self.components(x)?;
        let b1 = hdot.bilinear(x, &g)?;
        let b2 = hddot.map(|h| h.bilinear(x, &g)).transpose()?;
        let t2 = (t * t).scale(T::c(0.5));
        Ok(g
            .iter()
            .enumerate()
            .map(|(k, gij)| {
                let idx = [k / self.dim, k % self.dim];
                let mut v = gij + &(t * b1.at(&idx));
                if let Some(b2) = &b2 {
                    v += &(&t2 * b2.at(&idx));
                }
                v
            })
            .collect())
    }

    /// Geometry of `g_t` at `x0` in jet space `sp`; `t_value = None` uses
    /// the jet variable `t`. Loss of positive-definiteness is an error.
    pub fn deformed_geometry(
        &self,
        sp: &'static JetSpace,
        x0: &[f64],
        t_value: Option<f64>,
        hdot: &FieldSpec,
        hddot: Option<&FieldSpec>,
    ) -> Result<PointGeometry<f64>> {
        let x = coordinates(sp, x0);
        let t = match t_value {
            Some(v) => Jet::constant(sp, v),
            None => Jet::t_var(sp),
        };
        let comps = self.deformed_components(&x, &t, hdot, hddot)?;
        let vals: Vec<f64> = comps.iter().map(|j| j.value()).collect();
        if !positive_definite(self.dim, &vals) {
            return Err(Error::Numerical("deformed metric is not positive definite".into()));
        }
        PointGeometry::new(self.dim, comps, None)
    }

    /// `count` random points in the chart domain.
    pub fn random_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| match self.domain {
                Domain::Torus { period } => (0..self.dim).map(|_| rng.gen_range(0.0..period)).collect(),
                Domain::Ball { radius } => loop {
                    let p: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-radius..radius)).collect();
                    if p.iter().map(|v| v * v).sum::<f64>() < radius * radius {
                        break p;
                    }
                },
            })
            .collect()
    }

    /// Parallel complex structure of a Kähler fixture, `J∂x_a = ∂y_a`.
    pub fn complex_structure(&self, sp: &'static JetSpace) -> Option<Tensor<f64>> {
        (self.fixture == Fixture::Cp2).then(|| {
            Tensor::from_fn(self.dim, &[Slot::Up, Slot::Down], |ix| {
                let (i, j) = (ix[0], ix[1]);
                let v = if j % 2 == 0 && i == j + 1 {
                    1.0
                } else if j % 2 == 1 && i + 1 == j {
                    -1.0
                } else {
                    0.0
                };
                Jet::constant(sp, v)
            })
        })
    }

    /// Einstein condition `‖Ric − E·g‖_max` at each point (relative to
    /// `max(1, |E|)`); for a computed constant this certifies constancy.
    pub fn validate(&self, points: &[Vec<f64>], tol: f64) -> Result<CheckReport> {
        let mut rep = CheckReport::new();
        let mut worst = 0.0f64;
        for x in points {
            let geo = self.geometry(x, 2)?;
            let ric = geo.bilinear_from_endo(&geo.ricci()?).values();
            let eg: Vec<f64> = geo.metric().values().iter().map(|v| v * self.einstein).collect();
            worst = worst.max(rel_residual(&ric, &eg));
        }
        let name = format!("fixture/{}/einstein", self.name());
        let r = if self.declared { "Ric = E·g" } else { "Ric = E·g with E constant" };
        rep.residual(&name, r, worst, tol).samples = Some(points.len());
        Ok(rep)
    }
}

fn positive_definite(dim: usize, m: &[f64]) -> bool {
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = m[i * dim + j] - (0..j).map(|k| l[i * dim + k] * l[j * dim + k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn flat_torus_has_zero_curvature() {
        let m = ChartMetric::new(Fixture::Torus3).unwrap();
        assert_eq!(m.einstein, 0.0);
        for x in m.random_points(5, 1) {
            let geo = m.geometry(&x, 2).unwrap();
            assert_eq!(max_abs(&geo.riemann_std().unwrap().values()), 0.0);
        }
    }

    #[test]
    fn round_sphere_ricci_is_two() {
        let m = ChartMetric::new(Fixture::Sphere3).unwrap();
        assert_eq!(m.einstein, 2.0);
        for x in m.random_points(5, 2) {
            let geo = m.geometry(&x, 2).unwrap();
            let ric = geo.ricci().unwrap().values();
            let id: Vec<f64> = (0..9).map(|k| if k % 4 == 0 { 2.0 } else { 0.0 }).collect();
            assert!(max_abs(&ric.iter().zip(&id).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12);
        }
    }

    #[test]
    fn complex_projective_plane_is_einstein() {
        let m = ChartMetric::new(Fixture::Cp2).unwrap();
        // Computed at the chart origin for g = 2 Re h; frozen.
        assert!((m.einstein - 3.0).abs() < 1e-9, "{}", m.einstein);
        let pts = m.random_points(10, 3);
        let rep = m.validate(&pts, EINSTEIN_TOL).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn registry_lookup() {
        for f in Fixture::ALL {
            assert_eq!(Fixture::parse(f.name()).unwrap(), f);
            assert_eq!(ChartMetric::by_name(f.name()).unwrap().fixture, f);
        }
        assert!(Fixture::parse("klein").unwrap_err().is_usage());
    }

    #[test]
    fn points_lie_in_the_domain() {
        for f in Fixture::ALL {
            let m = ChartMetric::new(f).unwrap();
            for x in m.random_points(20, 4) {
                assert_eq!(x.len(), m.dim);
                if let Domain::Ball { radius } = m.domain {
                    assert!(x.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius);
                }
            }
        }
    }
}
