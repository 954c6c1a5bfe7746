use crate::error::{Error, Result};
use crate::fields::{invert_jet_matrix, Expr, Jet3, TensorField};
use crate::scalar::Real;

use super::linalg::{cholesky, solve_lower_transpose, spd_inverse};
use super::tensor::{decompose, Slot, TensorAtPoint};

/// Absolute asymmetry (relative to component scale) tolerated in `g`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A Riemannian metric field: a `(0,2)` tensor field expected to be SPD.
#[derive(Clone, Debug)]
pub struct MetricField<T>(TensorField<T>);

impl<T: Real> MetricField<T> {
    pub fn new(field: TensorField<T>) -> Result<Self> {
        if field.variance() != [Slot::Down, Slot::Down] {
            return Err(Error::Invalid("metric must be a (0,2) tensor field".into()));
        }
        Ok(MetricField(field))
    }

    /// Metric from `n × n` row-major component expressions.
    pub fn from_exprs(dim: usize, exprs: Vec<Expr>) -> Self {
        MetricField(TensorField::from_exprs(
            dim,
            vec![Slot::Down, Slot::Down],
            exprs,
        ))
    }

    /// The constant Euclidean metric `δ_ij`.
    pub fn euclidean(dim: usize) -> Self {
        let values = (0..dim * dim)
            .map(|k| {
                if k / dim == k % dim {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        MetricField(TensorField::constant(
            dim,
            vec![Slot::Down, Slot::Down],
            values,
        ))
    }

    pub fn field(&self) -> &TensorField<T> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn max_order(&self) -> u8 {
        self.0.max_order()
    }

    pub fn at(&self, p: &[T], order: u8) -> Result<MetricAtPoint<T>> {
        metric_at(self, p, order)
    }

    /// Jets of `g^ij` at `p`.
    pub fn inverse_jets(&self, p: &[T], order: u8) -> Result<Vec<Jet3<T>>> {
        metric_at(self, p, order)?.inverse_jets()
    }

    /// The vector field `α♯`.
    pub fn sharp(&self, alpha: &TensorField<T>) -> Result<TensorField<T>> {
        self.0.check_chart(alpha)?;
        alpha.expect_variance(&[Slot::Down], "covector")?;
        let (g, a) = (self.clone(), alpha.clone());
        let n = self.dim();
        let top = self.max_order().min(alpha.max_order());
        Ok(TensorField::from_fn(
            n,
            vec![Slot::Up],
            top,
            move |p, order| {
                let gi = g.inverse_jets(p, order)?;
                let aj = a.jets(p, order)?;
                Ok(contract_matrix(&gi, &aj, n))
            },
        ))
    }

    /// The covector field `X♭`.
    pub fn flat(&self, v: &TensorField<T>) -> Result<TensorField<T>> {
        self.0.check_chart(v)?;
        v.expect_variance(&[Slot::Up], "vector")?;
        let (g, x) = (self.clone(), v.clone());
        let n = self.dim();
        let top = self.max_order().min(v.max_order());
        Ok(TensorField::from_fn(
            n,
            vec![Slot::Down],
            top,
            move |p, order| {
                let gj = g.field().jets(p, order)?;
                let xj = x.jets(p, order)?;
                Ok(contract_matrix(&gj, &xj, n))
            },
        ))
    }

    /// `grad f = (df)♯` for a rank-0 field `f`.
    pub fn gradient(&self, f: &TensorField<T>) -> Result<TensorField<T>> {
        self.sharp(&f.differential())
    }
}

/// `(M v)_i = Σ_j M_ij v_j` over jets.
fn contract_matrix<T: Real>(m: &[Jet3<T>], v: &[Jet3<T>], n: usize) -> Vec<Jet3<T>> {
    (0..n)
        .map(|i| {
            let mut s = &m[i * n] * &v[0];
            for j in 1..n {
                s = s + &m[i * n + j] * &v[j];
            }
            s
        })
        .collect()
}

/// Metric data at a point: `g`, its inverse, its Cholesky factor and the
/// component jets up to the requested order.
#[derive(Debug, Clone)]
pub struct MetricAtPoint<T> {
    dim: usize,
    g: Vec<T>,
    g_inv: Vec<T>,
    chol: Vec<T>,
    jets: Vec<Jet3<T>>,
}

/// Evaluates the metric at `p`, validating symmetry and positive definiteness.
pub fn metric_at<T: Real>(
    g_field: &MetricField<T>,
    p: &[T],
    order: u8,
) -> Result<MetricAtPoint<T>> {
    let n = g_field.dim();
    let jets = g_field.field().jets(p, order)?;
    let raw: Vec<T> = jets.iter().map(|j| j.value()).collect();
    let mut g = raw.clone();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (raw[i * n + j], raw[j * n + i]);
            let scale = T::one().max(a.abs()).max(b.abs());
            let gap = (a - b).abs();
            if gap > T::lit(SYMMETRY_TOL) * scale {
                return Err(Error::Asymmetric {
                    i,
                    j,
                    gap: gap.as_f64(),
                });
            }
            let m = (a + b) * T::lit(0.5);
            g[i * n + j] = m;
            g[j * n + i] = m;
        }
    }
    let chol = cholesky(&g, n)?;
    let g_inv = spd_inverse(&chol, n);
    Ok(MetricAtPoint {
        dim: n,
        g,
        g_inv,
        chol,
        jets,
    })
}

impl<T: Real> MetricAtPoint<T> {
    /// Metric from plain components (no derivative information).
    pub fn from_components(dim: usize, g: Vec<T>) -> Result<Self> {
        let field = TensorField::constant(dim, vec![Slot::Down, Slot::Down], g);
        metric_at(&MetricField(field), &vec![T::zero(); dim], 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    pub fn g_inv(&self) -> &[T] {
        &self.g_inv
    }

    pub fn chol(&self) -> &[T] {
        &self.chol
    }

    /// Component jets of `g_ij` as evaluated.
    pub fn jets(&self) -> &[Jet3<T>] {
        &self.jets
    }

    /// Jets of `g^ij`, same order as [`Self::jets`].
    pub fn inverse_jets(&self) -> Result<Vec<Jet3<T>>> {
        invert_jet_matrix(&self.jets, self.dim).ok_or(Error::Singular)
    }

    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.g[i * n + j] * u[i] * v[j];
            }
        }
        s
    }

    /// `X ↦ X♭`.
    pub fn lower(&self, v: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).fold(T::zero(), |s, j| s + self.g[i * n + j] * v[j]))
            .collect()
    }

    /// `α ↦ α♯`.
    pub fn raise(&self, alpha: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).fold(T::zero(), |s, j| s + self.g_inv[i * n + j] * alpha[j]))
            .collect()
    }

    /// The g-orthonormal Cholesky frame `e_k = L⁻ᵀ ∂_k`; `frame[k]` holds the components of `e_k`.
    pub fn orthonormal_frame(&self) -> Vec<Vec<T>> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut unit = vec![T::zero(); n];
                unit[k] = T::one();
                solve_lower_transpose(&self.chol, n, &unit)
            })
            .collect()
    }

    pub fn metric_tensor(&self) -> TensorAtPoint<T> {
        TensorAtPoint::new(self.dim, vec![Slot::Down, Slot::Down], self.g.clone())
    }
}

fn contract_slot<T: Real>(
    t: &TensorAtPoint<T>,
    slot: usize,
    m: &[T],
    to: Slot,
) -> TensorAtPoint<T> {
    let n = t.dim();
    let r = t.rank();
    let stride = n.pow((r - 1 - slot) as u32);
    let mut variance = t.variance().to_vec();
    variance[slot] = to;
    let src = t.components();
    let mut out = vec![T::zero(); src.len()];
    let mut idx = vec![0usize; r];
    for (k, o) in out.iter_mut().enumerate() {
        decompose(k, n, &mut idx);
        let a = idx[slot];
        let base = k - a * stride;
        let mut s = T::zero();
        for b in 0..n {
            s += m[a * n + b] * src[base + b * stride];
        }
        *o = s;
    }
    TensorAtPoint::new(n, variance, out)
}

/// Raises (`to = Up`) or lowers (`to = Down`) one slot of `t`.
pub fn raise_lower<T: Real>(
    t: &TensorAtPoint<T>,
    m: &MetricAtPoint<T>,
    slot: usize,
    to: Slot,
) -> Result<TensorAtPoint<T>> {
    if slot >= t.rank() || t.variance()[slot] == to {
        return Err(Error::InvalidSlot {
            slot,
            rank: t.rank(),
        });
    }
    if t.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    let matrix = match to {
        Slot::Up => m.g_inv(),
        Slot::Down => m.g(),
    };
    Ok(contract_slot(t, slot, matrix, to))
}

/// Full metric contraction `⟨T, T⟩_g` for tensors of rank at most 4.
pub fn norm2<T: Real>(t: &TensorAtPoint<T>, m: &MetricAtPoint<T>) -> Result<T> {
    if t.rank() > 4 {
        return Err(Error::RankOverflow { rank: t.rank() });
    }
    if t.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: t.dim(),
        });
    }
    let mut dual = t.clone();
    for (s, &v) in t.variance().iter().enumerate() {
        dual = match v {
            Slot::Up => contract_slot(&dual, s, m.g(), Slot::Down),
            Slot::Down => contract_slot(&dual, s, m.g_inv(), Slot::Up),
        };
    }
    Ok(t.components()
        .iter()
        .zip(dual.components())
        .fold(T::zero(), |s, (&a, &b)| s + a * b))
}
