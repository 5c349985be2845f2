//! Uniform periodic quadrature on the flat torus `[0, 2π)^d`.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrate::pairwise_sum;

/// Uniform grid with `size` points per axis. Averages of trigonometric
/// polynomials of band `< size` are exact; every `L²` pairing reported by the
/// chart suites is this normalized average `∫ f / vol`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridQuadrature {
    size: usize,
    dim: usize,
}

impl GridQuadrature {
    /// Grid with `size ≥ 1` points per axis in dimension `dim`.
    pub fn new(size: usize, dim: usize) -> Result<Self> {
        if size == 0 || dim == 0 {
            return Err(Error::usage("grid size and dimension must be positive"));
        }
        Ok(GridQuadrature { size, dim })
    }

    /// Points per axis.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    /// Always false for a constructed grid.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Requires an integrand band strictly below the grid's Nyquist limit:
    /// `size ≥ 2·band + 1`.
    pub fn require_band(&self, band: u32) -> Result<()> {
        if self.size < 2 * band as usize + 1 {
            return Err(Error::usage(format!(
                "grid of {} points per axis cannot integrate band {band} exactly (needs ≥ {})",
                self.size,
                2 * band + 1
            )));
        }
        Ok(())
    }

    /// Node `i` in row-major order.
    pub fn node(&self, mut i: usize) -> Vec<f64> {
        let h = 2.0 * PI / self.size as f64;
        let mut x = vec![0.0; self.dim];
        for slot in (0..self.dim).rev() {
            x[slot] = h * (i % self.size) as f64;
            i /= self.size;
        }
        x
    }

    /// Normalized averages of the `k` outputs of `f` over the grid.
    ///
    /// Nodes are evaluated in parallel; sums are pairwise in node order, so
    /// the result does not depend on the worker count.
    pub fn mean<F>(&self, k: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let vals: Vec<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let v = f(&self.node(i))?;
                if v.len() != k {
                    return Err(Error::usage("integrand returned the wrong number of outputs"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite { index: i });
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let n = vals.len() as f64;
        Ok((0..k)
            .map(|c| {
                let col: Vec<f64> = vals.iter().map(|v| v[c]).collect();
                pairwise_sum(&col) / n
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_below_nyquist() {
        let q = GridQuadrature::new(7, 2).unwrap();
        let m = q.mean(2, |x| Ok(vec![(3.0 * x[0]).cos().powi(2), (x[0] + 2.0 * x[1]).sin() + 1.0])).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-14);
        assert!((m[1] - 1.0).abs() < 1e-14);
        assert!(q.require_band(3).is_ok());
        assert!(q.require_band(4).is_err());
    }

    #[test]
    fn refinement_is_stable_for_band_limited_integrands() {
        // Band 4 integrand: any grid with at least 9 points per axis is exact.
        let f = |x: &[f64]| Ok(vec![(x[0] - x[1] + 2.0 * x[2]).cos() * (x[1] + x[2]).sin().powi(2) + (2.0 * x[0]).sin().powi(2)]);
        let a = GridQuadrature::new(9, 3).unwrap().mean(1, f).unwrap()[0];
        let b = GridQuadrature::new(17, 3).unwrap().mean(1, f).unwrap()[0];
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_integrands_are_reported() {
        let q = GridQuadrature::new(3, 1).unwrap();
        assert!(q.mean(2, |_| Ok(vec![1.0])).unwrap_err().is_usage());
        assert!(matches!(q.mean(1, |x| Ok(vec![if x[0] > 0.0 { f64::NAN } else { 0.0 }])), Err(Error::NonFinite { index: 1 })));
        assert!(GridQuadrature::new(0, 3).is_err());
    }
}
