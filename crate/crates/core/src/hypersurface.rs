//! Hypersurfaces of Euclidean space given by a chart immersion.
//!
//! The unit normal is the normalized generalized cross product of the
//! coordinate tangents, so that `det[∂_1X … ∂_nX ν] > 0` before the
//! orientation flip. The shape operator is `A(X) = −∇̃_X ν`, which makes the
//! outward normal of the unit sphere give `A = −I`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::connection::{cov_deriv_at, levi_civita};
use crate::error::{Error, Result};
use crate::fields::{Expr, Jet3, TensorField, MAX_ORDER};
use crate::pointwise::{
    generalized_eigen, linalg, norm2, MetricAtPoint, MetricField, Slot, TensorAtPoint,
};
use crate::scalar::Real;

/// Smallest singular value of the Jacobian accepted as regular.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues closer than this (relative to `max(1, |λ|)`) form one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Tolerance for self-adjointness of `A` and for its reconstruction.
pub const SHAPE_TOL: f64 = 1e-9;

/// A chart map into Euclidean `(n+1)`-space.
#[derive(Clone, Debug, PartialEq)]
pub struct Immersion {
    dim: usize,
    components: Arc<Vec<Expr>>,
    orientation: i8,
}

impl Immersion {
    /// `components` holds `n + 1` expressions over `dim` coordinates;
    /// `orientation` is `+1` or `−1`.
    pub fn new(dim: usize, components: Vec<Expr>, orientation: i8) -> Result<Self> {
        if components.len() != dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                got: components.len(),
            });
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::Invalid("orientation must be +1 or -1".into()));
        }
        if let Some(i) = components.iter().filter_map(Expr::max_var_index).max() {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i + 1,
                });
            }
        }
        Ok(Immersion {
            dim,
            components: Arc::new(components),
            orientation,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    fn jets<T: Real>(&self, p: &[T], order: u8) -> Result<Vec<Jet3<T>>> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.components
            .iter()
            .map(|e| e.eval_jet(p, order).map_err(Error::from))
            .collect()
    }

    /// Ambient position `X(p)`.
    pub fn position<T: Real>(&self, p: &[T]) -> Result<Vec<T>> {
        Ok(self.jets(p, 0)?.iter().map(|j| j.value()).collect())
    }
}

/// Smallest singular value of the Jacobian, from the Gram matrix.
fn sigma_min<T: Real>(gram: &[T], n: usize) -> Result<T> {
    let (vals, _) = linalg::jacobi_eigen(gram, n)?;
    Ok(vals
        .into_iter()
        .fold(T::infinity(), T::min)
        .max(T::zero())
        .sqrt())
}

fn check_rank<T: Real>(gram: &[T], n: usize) -> Result<()> {
    let s = sigma_min(gram, n)?;
    if !(s >= T::lit(RANK_TOL)) {
        return Err(Error::RankDeficient {
            sigma_min: s.as_f64(),
        });
    }
    Ok(())
}

/// The induced metric `g_ij = ⟨∂_i X, ∂_j X⟩`; each order of `g` uses one more order of `X`.
pub fn induced_metric<T: Real>(imm: &Immersion) -> MetricField<T> {
    let n = imm.dim;
    let imm = imm.clone();
    let field = TensorField::from_fn(
        n,
        vec![Slot::Down, Slot::Down],
        MAX_ORDER - 1,
        move |p, order| {
            let x = imm.jets(p, order + 1)?;
            let dx: Vec<Vec<Jet3<T>>> = (0..n)
                .map(|i| x.iter().map(|c| c.partial(i)).collect())
                .collect();
            let mut g = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = &dx[i][0] * &dx[j][0];
                    for a in 1..=n {
                        s = s + &dx[i][a] * &dx[j][a];
                    }
                    g.push(s);
                }
            }
            let values: Vec<T> = g.iter().map(|j| j.value()).collect();
            check_rank(&values, n)?;
            Ok(g)
        },
    );
    MetricField::new(field).expect("induced metric is a (0,2) field")
}

/// Geometry of the immersion at one point.
#[derive(Clone, Debug)]
pub struct ShapeAtPoint<T> {
    pub metric: MetricAtPoint<T>,
    /// Unit normal in ambient coordinates.
    pub normal: Vec<T>,
    /// Coordinate tangents `∂_i X`, one per row.
    pub tangents: Vec<Vec<T>>,
    /// Second fundamental form `II_ij = ⟨∂_i∂_j X, ν⟩`.
    pub second_form: TensorAtPoint<T>,
    /// Shape operator `A = g⁻¹ II`.
    pub shape: TensorAtPoint<T>,
}

/// Normal, second fundamental form and shape operator at `p`.
pub fn shape_at<T: Real>(imm: &Immersion, p: &[T]) -> Result<ShapeAtPoint<T>> {
    let n = imm.dim;
    let x = imm.jets(p, 2)?;
    let tangents: Vec<Vec<T>> = (0..n)
        .map(|i| x.iter().map(|c| c.d1(i)).collect())
        .collect();
    let mut gram = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..=n).fold(T::zero(), |s, a| s + tangents[i][a] * tangents[j][a]);
        }
    }
    check_rank(&gram, n)?;
    let metric = MetricAtPoint::from_components(n, gram)?;

    // ν_a = det[∂_1X … ∂_nX e_a], expanded along the last column
    let mut normal = Vec::with_capacity(n + 1);
    for a in 0..=n {
        let mut minor = Vec::with_capacity(n * n);
        for row in (0..=n).filter(|&r| r != a) {
            for t in &tangents {
                minor.push(t[row]);
            }
        }
        let sign = if (a + n).is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        normal.push(sign * linalg::det(&minor, n));
    }
    let len = normal.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
    let o = if imm.orientation > 0 {
        T::one()
    } else {
        -T::one()
    };
    for v in &mut normal {
        *v = o * *v / len;
    }

    let mut second_form = TensorAtPoint::zeros(n, vec![Slot::Down, Slot::Down]);
    for i in 0..n {
        for j in 0..n {
            let s = x
                .iter()
                .zip(&normal)
                .fold(T::zero(), |s, (c, &v)| s + c.d2(i, j) * v);
            second_form.set(&[i, j], s);
        }
    }
    let gi = metric.g_inv();
    let mut shape = TensorAtPoint::zeros(n, vec![Slot::Up, Slot::Down]);
    for a in 0..n {
        for b in 0..n {
            let s = (0..n).fold(T::zero(), |s, c| {
                s + gi[a * n + c] * second_form.get(&[c, b])
            });
            shape.set(&[a, b], s);
        }
    }
    Ok(ShapeAtPoint {
        metric,
        normal,
        tangents,
        second_form,
        shape,
    })
}

/// The shape operator `A` at `p`.
pub fn shape_operator_at<T: Real>(imm: &Immersion, p: &[T]) -> Result<TensorAtPoint<T>> {
    Ok(shape_at(imm, p)?.shape)
}

/// `max |(gA)_ij − (gA)_ji|`.
pub fn self_adjoint_gap<T: Real>(a: &TensorAtPoint<T>, m: &MetricAtPoint<T>) -> T {
    let n = a.dim();
    let g = m.g();
    let ga = |i: usize, j: usize| (0..n).fold(T::zero(), |s, c| s + g[i * n + c] * a.get(&[c, j]));
    let mut worst = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((ga(i, j) - ga(j, i)).abs());
        }
    }
    worst
}

/// `∇ξ + A + λI` with `∇` the Levi-Civita connection of the induced metric.
pub fn shape_soliton_residual<T: Real>(
    imm: &Immersion,
    xi: &TensorField<T>,
    lambda: T,
    p: &[T],
) -> Result<(TensorAtPoint<T>, T)> {
    let n = imm.dim;
    let g = induced_metric(imm);
    let s = shape_at(imm, p)?;
    let r = cov_deriv_at(&levi_civita(&g), xi, p)?
        .add(&s.shape)
        .add_scaled(lambda, &TensorAtPoint::identity(n));
    let n2 = norm2(&r, &s.metric)?;
    Ok((r, n2))
}

/// `A = σI + (ρ − σ) η⊗ξ` with `ξ` a unit eigenvector (zero when umbilical).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaUmbilical<T> {
    pub sigma: T,
    pub rho: T,
    pub xi: Vec<T>,
    /// `max |A − (σI + (ρ − σ)η⊗ξ)|`.
    pub reconstruction_error: T,
}

/// Splits a g-self-adjoint `A` into eta-umbilical form.
///
/// In dimension two both eigenvalues are simple; `ρ` is then taken to be the larger one.
pub fn eta_umbilical_decompose<T: Real>(
    a: &TensorAtPoint<T>,
    m: &MetricAtPoint<T>,
) -> Result<EtaUmbilical<T>> {
    let n = a.dim();
    if a.variance() != [Slot::Up, Slot::Down] {
        return Err(Error::Invalid(
            "shape operator must be a (1,1) tensor".into(),
        ));
    }
    let gap = self_adjoint_gap(a, m);
    if gap > T::lit(SHAPE_TOL) {
        return Err(Error::Asymmetric {
            i: 0,
            j: 1,
            gap: gap.as_f64(),
        });
    }
    let g = m.g();
    let mut ga = TensorAtPoint::zeros(n, vec![Slot::Down, Slot::Down]);
    for i in 0..n {
        for j in 0..n {
            let s = (0..n).fold(T::zero(), |s, c| s + g[i * n + c] * a.get(&[c, j]));
            ga.set(&[i, j], s);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = (ga.get(&[i, j]) + ga.get(&[j, i])) * T::lit(0.5);
            ga.set(&[i, j], v);
            ga.set(&[j, i], v);
        }
    }
    let spec = generalized_eigen(&ga, m)?;
    // clusters of the ascending spectrum: (first index, length)
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for (k, &l) in spec.eigenvalues.iter().enumerate() {
        match clusters.last_mut() {
            Some((start, len))
                if (l - spec.eigenvalues[*start]).abs()
                    <= T::lit(CLUSTER_TOL) * T::one().max(l.abs()) =>
            {
                *len += 1
            }
            _ => clusters.push((k, 1)),
        }
    }
    let mean = |(start, len): (usize, usize)| {
        spec.eigenvalues[start..start + len]
            .iter()
            .fold(T::zero(), |s, &v| s + v)
            / T::lit(len as f64)
    };
    let (sigma, rho, xi) = match clusters.as_slice() {
        [c] => {
            let s = mean(*c);
            (s, s, vec![T::zero(); n])
        }
        [lo, hi] if hi.1 == 1 => (mean(*lo), mean(*hi), spec.frame[hi.0].clone()),
        [lo, hi] if lo.1 == 1 => (mean(*hi), mean(*lo), spec.frame[lo.0].clone()),
        cs => return Err(Error::NotEtaUmbilical { clusters: cs.len() }),
    };
    let rebuilt = eta_type(m, sigma, rho, &xi);
    Ok(EtaUmbilical {
        sigma,
        rho,
        reconstruction_error: rebuilt.max_abs_diff(a),
        xi,
    })
}

/// `σI + (ρ − σ) η⊗ξ` with `η = ξ♭`.
pub fn eta_type<T: Real>(m: &MetricAtPoint<T>, sigma: T, rho: T, xi: &[T]) -> TensorAtPoint<T> {
    let n = m.dim();
    TensorAtPoint::identity(n).scale(sigma).add_scaled(
        rho - sigma,
        &TensorAtPoint::outer_endomorphism(&m.lower(xi), xi),
    )
}

/// Right side of the torse-forming consequence: `−(λ + σ)I + (σ − ρ) η⊗ξ`.
pub fn torse_forming_rhs<T: Real>(
    m: &MetricAtPoint<T>,
    d: &EtaUmbilical<T>,
    lambda: T,
) -> TensorAtPoint<T> {
    let n = m.dim();
    TensorAtPoint::identity(n)
        .scale(-(lambda + d.sigma))
        .add_scaled(
            d.sigma - d.rho,
            &TensorAtPoint::outer_endomorphism(&m.lower(&d.xi), &d.xi),
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;

    fn imm(src: &[&str], coords: &[&str]) -> Immersion {
        let e = src
            .iter()
            .map(|s| ScalarField::parse(s, coords).unwrap().expr().clone())
            .collect();
        Immersion::new(coords.len(), e, 1).unwrap()
    }

    fn sphere() -> Immersion {
        imm(&["sin(t)*cos(p)", "sin(t)*sin(p)", "cos(t)"], &["t", "p"])
    }

    #[test]
    fn sphere_metric_and_shape() {
        let s = sphere();
        let g = induced_metric::<f64>(&s).at(&[0.7, 1.2], 0).unwrap();
        assert!((g.g()[3] - 0.7f64.sin().powi(2)).abs() < 1e-15);
        let sh = shape_at(&s, &[0.7f64, 1.2]).unwrap();
        let x = s.position(&[0.7f64, 1.2]).unwrap();
        for a in 0..3 {
            assert!((sh.normal[a] - x[a]).abs() < 1e-14, "outward normal");
        }
        assert!(
            sh.shape
                .max_abs_diff(&TensorAtPoint::identity(2).scale(-1.0))
                < 1e-14
        );
    }

    #[test]
    fn cylinder_principal_curvatures() {
        let c = imm(&["cos(u)", "sin(u)", "v"], &["u", "v"]);
        let sh = shape_at(&c, &[0.3f64, -1.0]).unwrap();
        let d = eta_umbilical_decompose(&sh.shape, &sh.metric).unwrap();
        assert!((d.sigma + 1.0).abs() < 1e-14 && d.rho.abs() < 1e-14);
        assert!(d.xi[0].abs() < 1e-14 && (d.xi[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_distinct_eigenvalues() {
        let m =
            MetricAtPoint::from_components(3, vec![1.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
                .unwrap();
        let mut a = TensorAtPoint::zeros(3, vec![Slot::Up, Slot::Down]);
        for k in 0..3 {
            a.set(&[k, k], (k + 1) as f64);
        }
        assert_eq!(
            eta_umbilical_decompose(&a, &m),
            Err(Error::NotEtaUmbilical { clusters: 3 })
        );
    }

    #[test]
    fn degenerate_chart_is_rank_deficient() {
        let c = imm(&["u*v", "u*v", "u*v"], &["u", "v"]);
        assert!(matches!(
            shape_at(&c, &[1.0f64, 1.0]),
            Err(Error::RankDeficient { .. })
        ));
    }
}
