//! Linear connections given by their coefficient fields.
//!
//! Coefficients are stored as `Γ^k_{ij}` at flat index `k·n² + i·n + j`, with
//! `∇_{∂_i} ∂_j = Γ^k_{ij} ∂_k`. Covariant derivatives append the derivative
//! slot last: `(∇T)^{…}_{… m} = (∇_{∂_m} T)^{…}_{…}`.

use std::fmt;

use crate::error::{Error, Result};
use crate::fields::{values, Expr, Jet3, TensorField};
use crate::pointwise::{decompose, linalg, MetricField, Slot, TensorAtPoint};
use crate::scalar::Real;

/// Relative residual below which `∇̃g` is accepted as `η ⊗ g`.
pub const RECURRENCE_TOL: f64 = 1e-8;

/// A linear connection on a chart. No symmetry of the lower indices is assumed.
#[derive(Clone)]
pub struct ConnectionField<T> {
    coeffs: TensorField<T>,
    symmetric: bool,
}

impl<T> fmt::Debug for ConnectionField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionField")
            .field("coefficients", &self.coeffs)
            .field("symmetric", &self.symmetric)
            .finish_non_exhaustive()
    }
}

fn coeff_variance() -> Vec<Slot> {
    vec![Slot::Up, Slot::Down, Slot::Down]
}

impl<T: Real> ConnectionField<T> {
    /// Connection from a jet-valued coefficient evaluator.
    ///
    /// `symmetric` asserts `Γ^k_{ij} = Γ^k_{ji}`; pass `false` when unsure.
    pub fn from_fn(
        dim: usize,
        max_order: u8,
        symmetric: bool,
        f: impl Fn(&[T], u8) -> Result<Vec<Jet3<T>>> + Send + Sync + 'static,
    ) -> Self {
        ConnectionField {
            coeffs: TensorField::from_fn(dim, coeff_variance(), max_order, f),
            symmetric,
        }
    }

    /// Connection with explicit coefficient expressions, `n³` of them in
    /// `[k][i][j]` order. The symmetric flag is set when the expressions for
    /// `Γ^k_{ij}` and `Γ^k_{ji}` are structurally identical.
    pub fn explicit(dim: usize, exprs: Vec<Expr>) -> Self {
        let n = dim;
        let symmetric = (0..n).all(|k| {
            (0..n).all(|i| {
                (0..n).all(|j| exprs[k * n * n + i * n + j] == exprs[k * n * n + j * n + i])
            })
        });
        ConnectionField {
            coeffs: TensorField::from_exprs(dim, coeff_variance(), exprs),
            symmetric,
        }
    }

    /// The flat connection of the chart (all coefficients zero).
    pub fn flat(dim: usize) -> Self {
        ConnectionField {
            coeffs: TensorField::zero(dim, coeff_variance()),
            symmetric: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn max_order(&self) -> u8 {
        self.coeffs.max_order()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// The coefficients viewed as a field with layout `[k][i][j]`.
    pub fn coefficient_field(&self) -> &TensorField<T> {
        &self.coeffs
    }

    /// Coefficient jets at `p`.
    pub fn jets(&self, p: &[T], order: u8) -> Result<Vec<Jet3<T>>> {
        self.coeffs.jets(p, order)
    }

    /// Coefficient values at `p` as a `(1,2)` array.
    pub fn coefficients_at(&self, p: &[T]) -> Result<TensorAtPoint<T>> {
        self.coeffs.at(p)
    }

    /// `Γ + δ` for a coefficient-shaped field `δ`.
    pub fn offset(&self, delta: &TensorField<T>, delta_symmetric: bool) -> Result<Self> {
        self.coeffs.check_chart(delta)?;
        delta.expect_variance(&coeff_variance(), "connection offset")?;
        let (base, d) = (self.coeffs.clone(), delta.clone());
        let top = base.max_order().min(d.max_order());
        Ok(Self::from_fn(
            self.dim(),
            top,
            self.symmetric && delta_symmetric,
            move |p, order| {
                let a = base.jets(p, order)?;
                let b = d.jets(p, order)?;
                Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
            },
        ))
    }

    /// `½(self + other)`.
    pub fn mean(&self, other: &Self) -> Result<Self> {
        self.coeffs.check_chart(&other.coeffs)?;
        let (a, b) = (self.coeffs.clone(), other.coeffs.clone());
        let half = T::lit(0.5);
        let top = a.max_order().min(b.max_order());
        Ok(Self::from_fn(
            self.dim(),
            top,
            self.symmetric && other.symmetric,
            move |p, order| {
                let x = a.jets(p, order)?;
                let y = b.jets(p, order)?;
                Ok(x.iter().zip(&y).map(|(u, v)| (u + v).scale(half)).collect())
            },
        ))
    }
}

/// The Levi-Civita connection of `g`:
/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn levi_civita<T: Real>(g: &MetricField<T>) -> ConnectionField<T> {
    let n = g.dim();
    let top = g.max_order().saturating_sub(1);
    let g = g.clone();
    ConnectionField::from_fn(n, top, true, move |p, order| {
        let m = g.at(p, order + 1)?;
        let gj = m.jets();
        let gi: Vec<Jet3<T>> = m
            .inverse_jets()?
            .iter()
            .map(|j| j.truncated(order))
            .collect();
        // dg[l][i][j] = ∂_l g_ij
        let mut dg = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for ij in 0..n * n {
                dg.push(gj[ij].partial(l));
            }
        }
        let d = |l: usize, i: usize, j: usize| &dg[l * n * n + i * n + j];
        let half = T::lit(0.5);
        let mut out = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = Jet3::constant(n, order, T::zero());
                    for l in 0..n {
                        let first = d(i, j, l) + d(j, i, l) - d(l, i, j);
                        s = s + &gi[k * n + l] * &first;
                    }
                    out.push(s.scale(half));
                }
            }
        }
        Ok(out)
    })
}

/// One algebraic deformation term `c · term(X, Y)` added to `∇_X Y`.
#[derive(Clone, Debug)]
pub enum DeformTerm<T> {
    /// `α(X) F(Y)`; `F = None` means the identity.
    AlphaTensorF {
        coeff: T,
        alpha: TensorField<T>,
        f: Option<TensorField<T>>,
    },
    /// `α(Y) X`.
    IdTensorAlpha { coeff: T, alpha: TensorField<T> },
    /// `g(X, Y) ξ`.
    GTensorXi {
        coeff: T,
        metric: MetricField<T>,
        xi: TensorField<T>,
    },
}

impl<T: Real> DeformTerm<T> {
    fn coeff(&self) -> T {
        match self {
            DeformTerm::AlphaTensorF { coeff, .. }
            | DeformTerm::IdTensorAlpha { coeff, .. }
            | DeformTerm::GTensorXi { coeff, .. } => *coeff,
        }
    }

    fn fields(&self) -> Vec<&TensorField<T>> {
        match self {
            DeformTerm::AlphaTensorF { alpha, f, .. } => {
                std::iter::once(alpha).chain(f.as_ref()).collect()
            }
            DeformTerm::IdTensorAlpha { alpha, .. } => vec![alpha],
            DeformTerm::GTensorXi { metric, xi, .. } => vec![metric.field(), xi],
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        for f in self.fields() {
            if f.dim() != dim {
                return Err(Error::ChartMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
        }
        match self {
            DeformTerm::AlphaTensorF { alpha, f, .. } => {
                alpha.expect_variance(&[Slot::Down], "alpha")?;
                if let Some(f) = f {
                    f.expect_variance(&[Slot::Up, Slot::Down], "F")?;
                }
            }
            DeformTerm::IdTensorAlpha { alpha, .. } => {
                alpha.expect_variance(&[Slot::Down], "alpha")?
            }
            DeformTerm::GTensorXi { xi, .. } => xi.expect_variance(&[Slot::Up], "xi")?,
        }
        Ok(())
    }

    fn max_order(&self) -> u8 {
        self.fields()
            .iter()
            .map(|f| f.max_order())
            .min()
            .unwrap_or(0)
    }

    /// Contribution to `Γ^k_{ij}` (layout `[k][i][j]`), already scaled by the coefficient.
    fn jets(&self, p: &[T], order: u8, n: usize) -> Result<Vec<Jet3<T>>> {
        let c = self.coeff();
        let zero = Jet3::constant(n, order, T::zero());
        let mut out = vec![zero; n * n * n];
        match self {
            DeformTerm::AlphaTensorF { alpha, f, .. } => {
                let a = alpha.jets(p, order)?;
                let fj = f.as_ref().map(|f| f.jets(p, order)).transpose()?;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let v = match &fj {
                                Some(fj) => &a[i] * &fj[k * n + j],
                                None if k == j => a[i].clone(),
                                None => continue,
                            };
                            out[k * n * n + i * n + j] = v.scale(c);
                        }
                    }
                }
            }
            DeformTerm::IdTensorAlpha { alpha, .. } => {
                let a = alpha.jets(p, order)?;
                for k in 0..n {
                    for j in 0..n {
                        out[k * n * n + k * n + j] = a[j].scale(c);
                    }
                }
            }
            DeformTerm::GTensorXi { metric, xi, .. } => {
                let g = metric.field().jets(p, order)?;
                let x = xi.jets(p, order)?;
                for k in 0..n {
                    for ij in 0..n * n {
                        out[k * n * n + ij] = (&g[ij] * &x[k]).scale(c);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Whether a term list is structurally symmetric under `X ↔ Y`: every
/// `α ⊗ I` term must be matched by an `I ⊗ α` term with the same field and
/// coefficient, and no `α ⊗ F` term with explicit `F` may appear.
fn terms_symmetric<T: Real>(terms: &[DeformTerm<T>]) -> bool {
    let mut left: Vec<(T, &TensorField<T>)> = Vec::new();
    let mut right: Vec<(T, &TensorField<T>)> = Vec::new();
    for t in terms {
        match t {
            DeformTerm::AlphaTensorF { f: Some(_), .. } => return false,
            DeformTerm::AlphaTensorF {
                coeff,
                alpha,
                f: None,
            } => left.push((*coeff, alpha)),
            DeformTerm::IdTensorAlpha { coeff, alpha } => right.push((*coeff, alpha)),
            DeformTerm::GTensorXi { .. } => {}
        }
    }
    if left.len() != right.len() {
        return false;
    }
    for (c, a) in left {
        match right.iter().position(|(d, b)| *d == c && a.same_field(b)) {
            Some(pos) => {
                right.swap_remove(pos);
            }
            None => return false,
        }
    }
    true
}

/// `∇̃_X Y = ∇_X Y + Σ c·term(X, Y)`.
pub fn deform_connection<T: Real>(
    base: &ConnectionField<T>,
    terms: Vec<DeformTerm<T>>,
) -> Result<ConnectionField<T>> {
    let n = base.dim();
    for t in &terms {
        t.validate(n)?;
    }
    if terms.is_empty() {
        return Ok(base.clone());
    }
    let symmetric = base.is_symmetric() && terms_symmetric(&terms);
    let top = terms
        .iter()
        .map(|t| t.max_order())
        .fold(base.max_order(), u8::min);
    let base = base.clone();
    Ok(ConnectionField::from_fn(
        n,
        top,
        symmetric,
        move |p, order| {
            let mut out = base.jets(p, order)?;
            for t in &terms {
                for (o, d) in out.iter_mut().zip(t.jets(p, order, n)?) {
                    *o = &*o + &d;
                }
            }
            Ok(out)
        },
    ))
}

/// The Weyl connection of `(g, η)`:
/// `∇̃ = ∇ − ½ η⊗I − ½ I⊗η + ½ g⊗η♯`, torsion-free with `∇̃g = η⊗g`.
pub fn weyl_connection<T: Real>(
    g: &MetricField<T>,
    eta: &TensorField<T>,
) -> Result<ConnectionField<T>> {
    let xi = g.sharp(eta)?;
    let half = T::lit(0.5);
    deform_connection(
        &levi_civita(g),
        vec![
            DeformTerm::AlphaTensorF {
                coeff: -half,
                alpha: eta.clone(),
                f: None,
            },
            DeformTerm::IdTensorAlpha {
                coeff: -half,
                alpha: eta.clone(),
            },
            DeformTerm::GTensorXi {
                coeff: half,
                metric: g.clone(),
                xi,
            },
        ],
    )
}

/// Torsion `T^k_{ij} = Γ^k_{ij} − Γ^k_{ji}` at `p`.
pub fn torsion_at<T: Real>(conn: &ConnectionField<T>, p: &[T]) -> Result<TensorAtPoint<T>> {
    let n = conn.dim();
    let gamma = conn.coefficients_at(p)?;
    let c = gamma.components();
    let mut out = TensorAtPoint::zeros(n, coeff_variance());
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out.set(
                    &[k, i, j],
                    c[k * n * n + i * n + j] - c[k * n * n + j * n + i],
                );
            }
        }
    }
    Ok(out)
}

/// Jets of the covariant derivative `∇T` at `p`; the derivative slot is appended last.
pub fn cov_deriv_jets<T: Real>(
    conn: &ConnectionField<T>,
    t: &TensorField<T>,
    p: &[T],
    order: u8,
) -> Result<Vec<Jet3<T>>> {
    conn.coefficient_field().check_chart(t)?;
    let n = conn.dim();
    let r = t.rank();
    let tj = t.jets(p, order + 1)?;
    let tlo: Vec<Jet3<T>> = tj.iter().map(|j| j.truncated(order)).collect();
    let gamma = conn.jets(p, order)?;
    let variance = t.variance();
    let mut idx = vec![0usize; r];
    let mut out = Vec::with_capacity(tj.len() * n);
    for (b, jet) in tj.iter().enumerate() {
        decompose(b, n, &mut idx);
        for m in 0..n {
            let mut acc = jet.partial(m);
            for (s, &v) in variance.iter().enumerate() {
                let stride = n.pow((r - 1 - s) as u32);
                let a = idx[s];
                let rest = b - a * stride;
                for c in 0..n {
                    let other = &tlo[rest + c * stride];
                    acc = match v {
                        Slot::Up => acc + &gamma[a * n * n + m * n + c] * other,
                        Slot::Down => acc - &gamma[c * n * n + m * n + a] * other,
                    };
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// The covariant derivative as a field (one extra lower slot, last).
pub fn cov_deriv_field<T: Real>(
    conn: &ConnectionField<T>,
    t: &TensorField<T>,
) -> Result<TensorField<T>> {
    conn.coefficient_field().check_chart(t)?;
    let mut variance = t.variance().to_vec();
    variance.push(Slot::Down);
    let top = conn.max_order().min(t.max_order().saturating_sub(1));
    let (c, f) = (conn.clone(), t.clone());
    Ok(TensorField::from_fn(
        conn.dim(),
        variance,
        top,
        move |p, order| cov_deriv_jets(&c, &f, p, order),
    ))
}

/// `∇T` at `p`.
pub fn cov_deriv_at<T: Real>(
    conn: &ConnectionField<T>,
    t: &TensorField<T>,
    p: &[T],
) -> Result<TensorAtPoint<T>> {
    let jets = cov_deriv_jets(conn, t, p, 0)?;
    let mut variance = t.variance().to_vec();
    variance.push(Slot::Down);
    Ok(TensorAtPoint::new(conn.dim(), variance, values(&jets)))
}

/// Outcome of testing `∇̃g = η ⊗ g`.
#[derive(Clone, Debug, PartialEq)]
pub enum Recurrence<T> {
    Recurrent { eta: Vec<T>, residual: T },
    NotRecurrent { residual: T },
}

impl<T: Real> Recurrence<T> {
    pub fn eta(&self) -> Option<&[T]> {
        match self {
            Recurrence::Recurrent { eta, .. } => Some(eta),
            Recurrence::NotRecurrent { .. } => None,
        }
    }

    pub fn residual(&self) -> T {
        match self {
            Recurrence::Recurrent { residual, .. } | Recurrence::NotRecurrent { residual } => {
                *residual
            }
        }
    }
}

/// Fits `(∇̃_k g)_{ij} = η_k g_{ij}` direction by direction.
///
/// The residual is `‖C − η⊗g‖ / max(‖C‖, ‖g‖)` in the Frobenius norm.
pub fn recurrence_factor<T: Real>(
    conn: &ConnectionField<T>,
    g: &MetricField<T>,
    p: &[T],
) -> Result<Recurrence<T>> {
    let n = g.dim();
    let c = cov_deriv_at(conn, g.field(), p)?;
    let gv = g.at(p, 0)?.g().to_vec();
    let gg = gv.iter().fold(T::zero(), |s, &v| s + v * v);
    let mut eta = vec![T::zero(); n];
    let mut res2 = T::zero();
    for (k, e) in eta.iter_mut().enumerate() {
        let ck: Vec<T> = (0..n * n).map(|ij| c.get(&[ij / n, ij % n, k])).collect();
        *e = ck.iter().zip(&gv).fold(T::zero(), |s, (&a, &b)| s + a * b) / gg;
        res2 += ck
            .iter()
            .zip(&gv)
            .fold(T::zero(), |s, (&a, &b)| s + (a - *e * b).powi(2));
    }
    let scale = c.frobenius().max(gg.sqrt());
    let residual = res2.sqrt() / scale;
    Ok(if residual <= T::tol(RECURRENCE_TOL) {
        Recurrence::Recurrent { eta, residual }
    } else {
        Recurrence::NotRecurrent { residual }
    })
}

/// The g-dual connection:
/// `∂_k g_{ij} = Γ^l_{ki} g_{lj} + g_{il} Γ*^l_{kj}`.
pub fn dual_connection<T: Real>(
    g: &MetricField<T>,
    conn: &ConnectionField<T>,
) -> Result<ConnectionField<T>> {
    g.field().check_chart(conn.coefficient_field())?;
    let n = g.dim();
    let top = conn.max_order().min(g.max_order().saturating_sub(1));
    let (g, conn) = (g.clone(), conn.clone());
    Ok(ConnectionField::from_fn(n, top, false, move |p, order| {
        let m = g.at(p, order + 1)?;
        let gj = m.jets();
        let glo: Vec<Jet3<T>> = gj.iter().map(|j| j.truncated(order)).collect();
        let gi: Vec<Jet3<T>> = m
            .inverse_jets()?
            .iter()
            .map(|j| j.truncated(order))
            .collect();
        let gamma = conn.jets(p, order)?;
        // b[k][i][j] = ∂_k g_ij − Γ^l_{ki} g_lj
        let mut b = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = gj[i * n + j].partial(k);
                    for l in 0..n {
                        s = s - &gamma[l * n * n + k * n + i] * &glo[l * n + j];
                    }
                    b.push(s);
                }
            }
        }
        let mut out = Vec::with_capacity(n * n * n);
        for mm in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let mut s = Jet3::constant(n, order, T::zero());
                    for i in 0..n {
                        s = s + &gi[mm * n + i] * &b[k * n * n + i * n + j];
                    }
                    out.push(s);
                }
            }
        }
        Ok(out)
    }))
}

/// Largest violation of the duality relation between `conn` and `dual` at `p`.
pub fn duality_residual<T: Real>(
    g: &MetricField<T>,
    conn: &ConnectionField<T>,
    dual: &ConnectionField<T>,
    p: &[T],
) -> Result<T> {
    let n = g.dim();
    let gj = g.field().jets(p, 1)?;
    let a = conn.coefficients_at(p)?;
    let b = dual.coefficients_at(p)?;
    let (a, b) = (a.components(), b.components());
    let mut worst = T::zero();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut r = gj[i * n + j].d1(k);
                for l in 0..n {
                    r -= a[l * n * n + k * n + i] * gj[l * n + j].value();
                    r -= gj[i * n + l].value() * b[l * n * n + k * n + j];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Least-squares helper shared with the soliton fits: solves `A x ≈ b`
/// (row-major `rows × cols`) and returns `(x, ‖Ax − b‖)`.
pub(crate) fn fit<T: Real>(a: &[T], rows: usize, cols: usize, b: &[T]) -> Option<(Vec<T>, T)> {
    let x = linalg::least_squares(a, rows, cols, b)?;
    let mut r2 = T::zero();
    for row in 0..rows {
        let mut s = -b[row];
        for c in 0..cols {
            s += a[row * cols + c] * x[c];
        }
        r2 += s * s;
    }
    Some((x, r2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;

    fn exprs(src: &[&str], coords: &[&str]) -> Vec<Expr> {
        src.iter()
            .map(|s| ScalarField::parse(s, coords).unwrap().expr().clone())
            .collect()
    }

    fn metric(src: &[&str], coords: &[&str]) -> MetricField<f64> {
        MetricField::from_exprs(coords.len(), exprs(src, coords))
    }

    fn covector(src: &[&str], coords: &[&str]) -> TensorField<f64> {
        TensorField::from_exprs(coords.len(), vec![Slot::Down], exprs(src, coords))
    }

    #[test]
    fn flat_metric_has_zero_christoffels() {
        let lc = levi_civita(&MetricField::<f64>::euclidean(3));
        assert!(lc.coefficients_at(&[0.3, -1.0, 2.0]).unwrap().max_abs() == 0.0);
        assert!(lc.is_symmetric());
    }

    #[test]
    fn sphere_christoffel() {
        let g = metric(&["1", "0", "0", "sin(t)^2"], &["t", "p"]);
        let lc = levi_civita(&g);
        let t = std::f64::consts::FRAC_PI_3;
        let c = lc.coefficients_at(&[t, 0.4]).unwrap();
        assert!((c.get(&[0, 1, 1]) + 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert!((c.get(&[1, 0, 1]) - t.cos() / t.sin()).abs() < 1e-14);
    }

    #[test]
    fn weyl_components_flat_dx() {
        let g = MetricField::<f64>::euclidean(2);
        let eta = covector(&["1", "0"], &["x", "y"]);
        let w = weyl_connection(&g, &eta).unwrap();
        assert!(w.is_symmetric());
        let c = w.coefficients_at(&[0.2, 0.7]).unwrap();
        let expect = [[[-0.5, 0.0], [0.0, 0.5]], [[0.0, -0.5], [-0.5, 0.0]]];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(c.get(&[k, i, j]), expect[k][i][j], "Γ^{k}_{i}{j}");
                }
            }
        }
        let rec = recurrence_factor(&w, &g, &[0.2, 0.7]).unwrap();
        assert_eq!(rec.eta().unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn non_recurrent_perturbation() {
        let g = MetricField::<f64>::euclidean(2);
        let mut e = vec![Expr::num(0.0); 8];
        e[0] = Expr::num(1.0);
        let conn = ConnectionField::explicit(2, e);
        assert!(conn.is_symmetric());
        match recurrence_factor(&conn, &g, &[0.0, 0.0]).unwrap() {
            Recurrence::NotRecurrent { residual } => assert!(residual > 0.1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn position_field_derivative_is_identity() {
        let x = TensorField::from_exprs(2, vec![Slot::Up], exprs(&["x", "y"], &["x", "y"]));
        let d = cov_deriv_at(&ConnectionField::flat(2), &x, &[0.4, -2.0]).unwrap();
        assert_eq!(d.components(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn dual_of_perturbed_flat() {
        let g = MetricField::<f64>::euclidean(2);
        let mut e = vec![Expr::num(0.0); 8];
        e[0] = Expr::num(0.75);
        let conn = ConnectionField::explicit(2, e);
        let dual = dual_connection(&g, &conn).unwrap();
        let c = dual.coefficients_at(&[0.1, 0.1]).unwrap();
        assert_eq!(c.get(&[0, 0, 0]), -0.75);
        assert_eq!(c.max_abs(), 0.75);
        assert_eq!(
            duality_residual(&g, &conn, &dual, &[0.1, 0.1]).unwrap(),
            0.0
        );
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let base = ConnectionField::<f64>::flat(2);
        let alpha = covector(&["1", "0", "0"], &["x", "y", "z"]);
        let err = deform_connection(&base, vec![DeformTerm::IdTensorAlpha { coeff: 1.0, alpha }]);
        assert!(matches!(
            err,
            Err(Error::ChartMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn one_sided_term_clears_symmetry() {
        let base = ConnectionField::<f64>::flat(2);
        let alpha = covector(&["1", "0"], &["x", "y"]);
        let d = deform_connection(
            &base,
            vec![DeformTerm::AlphaTensorF {
                coeff: 1.0,
                alpha,
                f: None,
            }],
        )
        .unwrap();
        assert!(!d.is_symmetric());
        assert!(torsion_at(&d, &[0.0, 0.0]).unwrap().max_abs() > 0.5);
    }
}
