use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Position of a tensor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Up,
    Down,
}

/// Dense tensor at a point, components stored row-major over its slots.
///
/// A `(1,1)` tensor with variance `[Up, Down]` stores `M^a_b` at `a*n + b`
/// and acts on vectors as `X ↦ M(X)^a = M^a_b X^b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorAtPoint<T> {
    dim: usize,
    variance: Vec<Slot>,
    components: Vec<T>,
}

impl<T: Real> TensorAtPoint<T> {
    pub fn new(dim: usize, variance: Vec<Slot>, components: Vec<T>) -> Self {
        assert_eq!(
            components.len(),
            dim.pow(variance.len() as u32),
            "component count does not match dim^rank"
        );
        TensorAtPoint {
            dim,
            variance,
            components,
        }
    }

    pub fn zeros(dim: usize, variance: Vec<Slot>) -> Self {
        let len = dim.pow(variance.len() as u32);
        TensorAtPoint {
            dim,
            variance,
            components: vec![T::zero(); len],
        }
    }

    pub fn scalar(dim: usize, v: T) -> Self {
        TensorAtPoint {
            dim,
            variance: vec![],
            components: vec![v],
        }
    }

    pub fn vector(components: Vec<T>) -> Self {
        TensorAtPoint {
            dim: components.len(),
            variance: vec![Slot::Up],
            components,
        }
    }

    pub fn covector(components: Vec<T>) -> Self {
        TensorAtPoint {
            dim: components.len(),
            variance: vec![Slot::Down],
            components,
        }
    }

    /// The identity endomorphism `δ^a_b`.
    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim, vec![Slot::Up, Slot::Down]);
        for i in 0..dim {
            t.components[i * dim + i] = T::one();
        }
        t
    }

    /// Endomorphism `X ↦ α(X)·v`, i.e. components `v^a α_b`.
    pub fn outer_endomorphism(alpha: &[T], v: &[T]) -> Self {
        let n = v.len();
        let mut t = Self::zeros(n, vec![Slot::Up, Slot::Down]);
        for a in 0..n {
            for b in 0..n {
                t.components[a * n + b] = v[a] * alpha[b];
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Slot] {
        &self.variance
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [T] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<T> {
        self.components
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.components[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = self.flat_index(idx);
        self.components[k] = v;
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "tensor dimensions differ");
        assert_eq!(self.variance, other.variance, "tensor variances differ");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a + b)
            .collect();
        TensorAtPoint {
            dim: self.dim,
            variance: self.variance.clone(),
            components,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a - b)
            .collect();
        TensorAtPoint {
            dim: self.dim,
            variance: self.variance.clone(),
            components,
        }
    }

    pub fn scale(&self, c: T) -> Self {
        TensorAtPoint {
            dim: self.dim,
            variance: self.variance.clone(),
            components: self.components.iter().map(|&a| a * c).collect(),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: T, other: &Self) -> Self {
        self.check_compatible(other);
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a + c * b)
            .collect();
        TensorAtPoint {
            dim: self.dim,
            variance: self.variance.clone(),
            components,
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Euclidean norm of the component array (metric-free).
    pub fn frobenius(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |s, &v| s + v * v)
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.check_compatible(other);
        self.components
            .iter()
            .zip(&other.components)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Applies a `(1,1)` tensor to a vector.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(
            self.variance,
            [Slot::Up, Slot::Down],
            "apply needs a (1,1) tensor"
        );
        let n = self.dim;
        (0..n)
            .map(|a| (0..n).fold(T::zero(), |s, b| s + self.components[a * n + b] * x[b]))
            .collect()
    }

    /// Swaps two slots (components and variance).
    pub fn swap_slots(&self, s: usize, t: usize) -> Result<Self> {
        let r = self.rank();
        if s >= r || t >= r {
            return Err(Error::InvalidSlot {
                slot: s.max(t),
                rank: r,
            });
        }
        let mut variance = self.variance.clone();
        variance.swap(s, t);
        let mut out = Self::zeros(self.dim, variance);
        let mut idx = vec![0usize; r];
        for k in 0..self.components.len() {
            decompose(k, self.dim, &mut idx);
            idx.swap(s, t);
            let dst = out.flat_index(&idx);
            out.components[dst] = self.components[k];
        }
        Ok(out)
    }

    /// Trace of a `(1,1)` tensor.
    pub fn trace(&self) -> T {
        assert_eq!(
            self.variance,
            [Slot::Up, Slot::Down],
            "trace needs a (1,1) tensor"
        );
        (0..self.dim).fold(T::zero(), |s, i| s + self.components[i * self.dim + i])
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> TensorAtPoint<U> {
        TensorAtPoint {
            dim: self.dim,
            variance: self.variance.clone(),
            components: self.components.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Splits a flat row-major index into per-slot indices.
pub(crate) fn decompose(mut k: usize, n: usize, idx: &mut [usize]) {
    for s in (0..idx.len()).rev() {
        idx[s] = k % n;
        k /= n;
    }
}
