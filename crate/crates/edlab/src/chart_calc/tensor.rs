//! Coordinate tensors with jet-valued components.

use std::ops::{Add, Sub};

use super::jet::{Jet, JetSpace};
use crate::scalar::Real;

/// Index position of one tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// Dense coordinate tensor; components are stored row-major with the first
/// slot most significant.
#[derive(Clone, Debug)]
pub struct Tensor<T: Real> {
    dim: usize,
    slots: Vec<Slot>,
    data: Vec<Jet<T>>,
}

/// Row-major flat index.
fn flat(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Odometer over all multi-indices of the given rank.
pub(crate) fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..dim.pow(rank as u32)).map(move |mut k| {
        let mut idx = vec![0; rank];
        for s in (0..rank).rev() {
            idx[s] = k % dim;
            k /= dim;
        }
        idx
    })
}

impl<T: Real> Tensor<T> {
    /// Builds a tensor from a component function.
    pub fn from_fn(dim: usize, slots: &[Slot], mut f: impl FnMut(&[usize]) -> Jet<T>) -> Self {
        let data = multi_indices(dim, slots.len()).map(|idx| f(&idx)).collect();
        Tensor { dim, slots: slots.to_vec(), data }
    }

    /// Zero tensor.
    pub fn zeros(sp: &'static JetSpace, dim: usize, slots: &[Slot]) -> Self {
        Self::from_fn(dim, slots, |_| Jet::zero(sp))
    }

    /// Identity endomorphism.
    pub fn identity(sp: &'static JetSpace, dim: usize) -> Self {
        Self::from_fn(dim, &[Slot::Up, Slot::Down], |i| {
            Jet::constant(sp, if i[0] == i[1] { T::one() } else { T::zero() })
        })
    }

    /// Chart dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Slot layout.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of slots.
    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    /// Component at a multi-index.
    pub fn at(&self, idx: &[usize]) -> &Jet<T> {
        debug_assert_eq!(idx.len(), self.rank());
        &self.data[flat(self.dim, idx)]
    }

    /// Components in storage order.
    pub fn components(&self) -> &[Jet<T>] {
        &self.data
    }

    /// Componentwise map.
    pub fn map(&self, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        Tensor { dim: self.dim, slots: self.slots.clone(), data: self.data.iter().map(f).collect() }
    }

    /// Multiply by a constant.
    pub fn scale(&self, s: T) -> Self {
        self.map(|j| j.scale(s))
    }

    /// Multiply by a scalar field.
    pub fn scale_jet(&self, f: &Jet<T>) -> Self {
        self.map(|j| j * f)
    }

    /// Values at the base point and `t = 0`.
    pub fn values(&self) -> Vec<T> {
        self.data.iter().map(|j| j.value()).collect()
    }

    /// `k`-th `t` derivatives at the base point.
    pub fn t_derivatives(&self, k: usize) -> Vec<T> {
        self.data.iter().map(|j| j.t_derivative(k)).collect()
    }

    /// Smallest valid space order among the components.
    pub fn valid_order(&self) -> usize {
        self.data.iter().map(|j| j.valid_order()).min().unwrap_or(usize::MAX)
    }

    fn zip(&self, o: &Self, f: impl Fn(&Jet<T>, &Jet<T>) -> Jet<T>) -> Self {
        assert_eq!(self.slots, o.slots, "tensor slot layouts differ");
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl<'a, T: Real> Add for &'a Tensor<T> {
    type Output = Tensor<T>;
    fn add(self, o: Self) -> Tensor<T> {
        self.zip(o, |a, b| a + b)
    }
}

impl<'a, T: Real> Sub for &'a Tensor<T> {
    type Output = Tensor<T>;
    fn sub(self, o: Self) -> Tensor<T> {
        self.zip(o, |a, b| a - b)
    }
}

/// Sum of jets produced by `f(l)` for `l` in `0..n`.
pub(crate) fn jsum<T: Real>(sp: &'static JetSpace, n: usize, mut f: impl FnMut(usize) -> Jet<T>) -> Jet<T> {
    let mut acc = Jet::zero(sp);
    for l in 0..n {
        acc += &f(l);
    }
    acc
}
