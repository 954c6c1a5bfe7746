use std::fmt;
use std::sync::Arc;

use super::eval::ScalarField;
use super::expr::Expr;
use super::jet::{Jet3, MAX_ORDER};
use crate::error::{Error, Result};
use crate::pointwise::{Slot, TensorAtPoint};
use crate::scalar::Real;

/// Jet-valued evaluator: `(point, order) ↦ component jets`, row-major over slots.
pub type JetFn<T> = dyn Fn(&[T], u8) -> Result<Vec<Jet3<T>>> + Send + Sync;

/// A tensor field on a chart, evaluable to component jets at any point.
///
/// Fields are cheap to clone and immutable; derived fields (gradients,
/// index-raised forms, ...) are closures over their inputs.
#[derive(Clone)]
pub struct TensorField<T> {
    dim: usize,
    variance: Vec<Slot>,
    max_order: u8,
    eval: Arc<JetFn<T>>,
}

impl<T> fmt::Debug for TensorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("dim", &self.dim)
            .field("variance", &self.variance)
            .field("max_order", &self.max_order)
            .finish_non_exhaustive()
    }
}

impl<T: Real> TensorField<T> {
    pub fn from_fn(
        dim: usize,
        variance: Vec<Slot>,
        max_order: u8,
        f: impl Fn(&[T], u8) -> Result<Vec<Jet3<T>>> + Send + Sync + 'static,
    ) -> Self {
        TensorField {
            dim,
            variance,
            max_order: max_order.min(MAX_ORDER),
            eval: Arc::new(f),
        }
    }

    /// Field whose components are the given expressions over the chart coordinates.
    pub fn from_exprs(dim: usize, variance: Vec<Slot>, exprs: Vec<Expr>) -> Self {
        assert_eq!(
            exprs.len(),
            dim.pow(variance.len() as u32),
            "wrong number of components"
        );
        let exprs = Arc::new(exprs);
        Self::from_fn(dim, variance, MAX_ORDER, move |p, order| {
            exprs
                .iter()
                .map(|e| e.eval_jet(p, order).map_err(Error::from))
                .collect()
        })
    }

    pub fn from_scalar_fields(variance: Vec<Slot>, fields: Vec<ScalarField>) -> Self {
        let dim = fields.first().map(|f| f.dim()).unwrap_or(0);
        let exprs = fields.iter().map(|f| f.expr().clone()).collect();
        Self::from_exprs(dim, variance, exprs)
    }

    /// Rank-0 field wrapping a scalar expression.
    pub fn scalar(field: &ScalarField) -> Self {
        Self::from_exprs(field.dim(), Vec::new(), vec![field.expr().clone()])
    }

    pub fn constant(dim: usize, variance: Vec<Slot>, values: Vec<T>) -> Self {
        assert_eq!(values.len(), dim.pow(variance.len() as u32));
        Self::from_fn(dim, variance, MAX_ORDER, move |_p, order| {
            Ok(values
                .iter()
                .map(|&v| Jet3::constant(dim, order, v))
                .collect())
        })
    }

    pub fn zero(dim: usize, variance: Vec<Slot>) -> Self {
        let len = dim.pow(variance.len() as u32);
        Self::constant(dim, variance, vec![T::zero(); len])
    }

    /// The identity endomorphism field.
    pub fn identity(dim: usize) -> Self {
        let values = (0..dim * dim)
            .map(|k| {
                if k / dim == k % dim {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        Self::constant(dim, vec![Slot::Up, Slot::Down], values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variance(&self) -> &[Slot] {
        &self.variance
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    /// Highest derivative order this field can supply.
    pub fn max_order(&self) -> u8 {
        self.max_order
    }

    /// True when both handles share the same underlying evaluator.
    pub fn same_field(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.eval, &other.eval)
    }

    /// Component jets at `p`, truncated to `order`.
    pub fn jets(&self, p: &[T], order: u8) -> Result<Vec<Jet3<T>>> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if order > self.max_order {
            return Err(Error::OrderUnavailable {
                requested: order,
                available: self.max_order,
            });
        }
        let out = (self.eval)(p, order)?;
        debug_assert_eq!(out.len(), self.dim.pow(self.variance.len() as u32));
        Ok(out)
    }

    /// Component values at `p`.
    pub fn at(&self, p: &[T]) -> Result<TensorAtPoint<T>> {
        let jets = self.jets(p, 0)?;
        Ok(TensorAtPoint::new(
            self.dim,
            self.variance.clone(),
            jets.iter().map(|j| j.value()).collect(),
        ))
    }

    /// `df` for a rank-0 field.
    pub fn differential(&self) -> Self {
        assert_eq!(self.rank(), 0, "differential is defined for scalar fields");
        assert!(self.max_order >= 1);
        let inner = self.clone();
        let n = self.dim;
        Self::from_fn(n, vec![Slot::Down], self.max_order - 1, move |p, order| {
            let f = &inner.jets(p, order + 1)?[0];
            Ok((0..n).map(|i| f.partial(i)).collect())
        })
    }

    /// Fails with `ChartMismatch` unless `other` lives on a chart of the same dimension.
    pub fn check_chart(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ChartMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// Fails unless the field has exactly the given variance.
    pub fn expect_variance(&self, variance: &[Slot], what: &str) -> Result<()> {
        if self.variance != variance {
            return Err(Error::Invalid(format!(
                "{what} must have variance {variance:?}"
            )));
        }
        Ok(())
    }

    /// `c · self`.
    pub fn scaled(&self, c: T) -> Self {
        let inner = self.clone();
        Self::from_fn(
            self.dim,
            self.variance.clone(),
            self.max_order,
            move |p, order| Ok(inner.jets(p, order)?.iter().map(|j| j.scale(c)).collect()),
        )
    }
}

/// Values of a list of jets.
pub fn values<T: Real>(jets: &[Jet3<T>]) -> Vec<T> {
    jets.iter().map(|j| j.value()).collect()
}
