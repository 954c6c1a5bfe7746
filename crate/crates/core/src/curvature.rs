//! Curvature of a connection field.
//!
//! `R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}`,
//! stored at `[l][k][i][j]`, so that `R(∂_i, ∂_j) ∂_k = R^l_{kij} ∂_l`.
//! Ricci is `ricci_{ij} = R^l_{ilj}`.

use serde::{Deserialize, Serialize};

use crate::connection::{cov_deriv_field, cov_deriv_jets, ConnectionField};
use crate::error::{Error, Result};
use crate::fields::{values, Jet3, TensorField};
use crate::pointwise::{MetricField, Slot, TensorAtPoint};
use crate::scalar::Real;

fn riemann_variance() -> Vec<Slot> {
    vec![Slot::Up, Slot::Down, Slot::Down, Slot::Down]
}

fn form_variance() -> Vec<Slot> {
    vec![Slot::Up, Slot::Down, Slot::Down]
}

/// Riemann component jets at `p` (needs coefficient jets one order higher).
pub fn riemann_jets<T: Real>(
    conn: &ConnectionField<T>,
    p: &[T],
    order: u8,
) -> Result<Vec<Jet3<T>>> {
    let n = conn.dim();
    let gj = conn.jets(p, order + 1)?;
    let g: Vec<Jet3<T>> = gj.iter().map(|j| j.truncated(order)).collect();
    let at = |k: usize, i: usize, j: usize| k * n * n + i * n + j;
    let mut out = Vec::with_capacity(n.pow(4));
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = gj[at(l, j, k)].partial(i) - gj[at(l, i, k)].partial(j);
                    for m in 0..n {
                        r = r + &g[at(l, i, m)] * &g[at(m, j, k)]
                            - &g[at(l, j, m)] * &g[at(m, i, k)];
                    }
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

/// The `(1,3)` Riemann tensor as a field.
pub fn riemann_field<T: Real>(conn: &ConnectionField<T>) -> TensorField<T> {
    let c = conn.clone();
    let top = conn.max_order().saturating_sub(1);
    TensorField::from_fn(conn.dim(), riemann_variance(), top, move |p, order| {
        riemann_jets(&c, p, order)
    })
}

pub fn riemann_at<T: Real>(conn: &ConnectionField<T>, p: &[T]) -> Result<TensorAtPoint<T>> {
    Ok(TensorAtPoint::new(
        conn.dim(),
        riemann_variance(),
        values(&riemann_jets(conn, p, 0)?),
    ))
}

fn contract_ricci<T: Real>(r: &[Jet3<T>], n: usize) -> Vec<Jet3<T>> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut s = r[i * n * n].clone().scale(T::zero());
            for l in 0..n {
                s = s + &r[((l * n + i) * n + l) * n + j];
            }
            out.push(s);
        }
    }
    out
}

/// The `(0,2)` Ricci tensor `R^l_{ilj}` as a field.
pub fn ricci_field<T: Real>(conn: &ConnectionField<T>) -> TensorField<T> {
    let c = conn.clone();
    let n = conn.dim();
    let top = conn.max_order().saturating_sub(1);
    TensorField::from_fn(n, vec![Slot::Down, Slot::Down], top, move |p, order| {
        Ok(contract_ricci(&riemann_jets(&c, p, order)?, n))
    })
}

/// The Ricci endomorphism `Q^a_b = g^{ac} ricci_{bc}`, so that `Ric(X, Y) = g(QX, Y)`.
pub fn ricci_endomorphism_field<T: Real>(
    conn: &ConnectionField<T>,
    g: &MetricField<T>,
) -> Result<TensorField<T>> {
    g.field().check_chart(conn.coefficient_field())?;
    let ric = ricci_field(conn);
    let g = g.clone();
    let n = conn.dim();
    let top = ric.max_order().min(g.max_order());
    Ok(TensorField::from_fn(
        n,
        vec![Slot::Up, Slot::Down],
        top,
        move |p, order| {
            let gi = g.inverse_jets(p, order)?;
            let r = ric.jets(p, order)?;
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let mut s = &gi[a * n] * &r[b * n];
                    for c in 1..n {
                        s = s + &gi[a * n + c] * &r[b * n + c];
                    }
                    out.push(s);
                }
            }
            Ok(out)
        },
    ))
}

/// Curvature data at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureAtPoint<T> {
    pub riemann: TensorAtPoint<T>,
    pub ricci: TensorAtPoint<T>,
    pub q: TensorAtPoint<T>,
    pub scalar: T,
    /// Gauss curvature `R/2`, present in dimension two.
    pub gauss: Option<T>,
}

/// Riemann, Ricci, `Q`, scalar and (in dimension two) Gauss curvature at `p`.
pub fn ricci_at<T: Real>(
    conn: &ConnectionField<T>,
    g: &MetricField<T>,
    p: &[T],
) -> Result<CurvatureAtPoint<T>> {
    g.field().check_chart(conn.coefficient_field())?;
    let n = conn.dim();
    let rj = riemann_jets(conn, p, 0)?;
    let ricci = values(&contract_ricci(&rj, n));
    let m = g.at(p, 0)?;
    let gi = m.g_inv();
    let mut q = vec![T::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                q[a * n + b] += gi[a * n + c] * ricci[b * n + c];
            }
        }
    }
    let scalar = (0..n).fold(T::zero(), |s, a| s + q[a * n + a]);
    Ok(CurvatureAtPoint {
        riemann: TensorAtPoint::new(n, riemann_variance(), values(&rj)),
        ricci: TensorAtPoint::new(n, vec![Slot::Down, Slot::Down], ricci),
        q: TensorAtPoint::new(n, vec![Slot::Up, Slot::Down], q),
        scalar,
        gauss: (n == 2).then(|| scalar * T::lit(0.5)),
    })
}

/// `(d₂∘δ∇Riem)(X, Y) = Σ_k (∇_{e_k} Riem)(X, Y, e_k)` contracted against the
/// Cholesky orthonormal frame. Components `D^l_{ij}` with `X = ∂_i`, `Y = ∂_j`.
pub fn div_riemann_at<T: Real>(
    conn: &ConnectionField<T>,
    g: &MetricField<T>,
    p: &[T],
) -> Result<TensorAtPoint<T>> {
    let frame = g.at(p, 0)?.orthonormal_frame();
    div_riemann_with_frame(conn, p, &frame)
}

/// As [`div_riemann_at`], with a caller-supplied g-orthonormal frame (`frame[k]` = `e_k`).
pub fn div_riemann_with_frame<T: Real>(
    conn: &ConnectionField<T>,
    p: &[T],
    frame: &[Vec<T>],
) -> Result<TensorAtPoint<T>> {
    let n = conn.dim();
    if frame.len() != n || frame.iter().any(|e| e.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: frame.len(),
        });
    }
    // layout [l][c][i][j][m] with m the derivative slot
    let nabla = values(&cov_deriv_jets(conn, &riemann_field(conn), p, 0)?);
    let mut out = TensorAtPoint::zeros(n, form_variance());
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for e in frame {
                    for m in 0..n {
                        for c in 0..n {
                            s += e[m] * e[c] * nabla[(((l * n + c) * n + i) * n + j) * n + m];
                        }
                    }
                }
                out.set(&[l, i, j], s);
            }
        }
    }
    Ok(out)
}

/// Exterior covariant derivative as a field.
///
/// For an endomorphism `F`: `(d∇F)(X, Y) = (∇_X F)Y − (∇_Y F)X + F(T(X, Y))`,
/// components `[a][i][j]` for `X = ∂_i`, `Y = ∂_j`. For a vector field `ξ`:
/// the endomorphism `X ↦ ∇_X ξ`.
pub fn ext_cov_deriv_field<T: Real>(
    conn: &ConnectionField<T>,
    f: &TensorField<T>,
) -> Result<TensorField<T>> {
    conn.coefficient_field().check_chart(f)?;
    match f.variance() {
        [Slot::Up] => cov_deriv_field(conn, f),
        [Slot::Up, Slot::Down] => {
            let n = conn.dim();
            let top = conn.max_order().min(f.max_order().saturating_sub(1));
            let (c, ff) = (conn.clone(), f.clone());
            Ok(TensorField::from_fn(
                n,
                form_variance(),
                top,
                move |p, order| {
                    // d[a][b][m] = (∇_m F)^a_b
                    let d = cov_deriv_jets(&c, &ff, p, order)?;
                    let fj = ff.jets(p, order)?;
                    let gamma = c.jets(p, order)?;
                    let mut out = Vec::with_capacity(n * n * n);
                    for a in 0..n {
                        for i in 0..n {
                            for j in 0..n {
                                let mut s = &d[(a * n + j) * n + i] - &d[(a * n + i) * n + j];
                                for k in 0..n {
                                    let t =
                                        &gamma[(k * n + i) * n + j] - &gamma[(k * n + j) * n + i];
                                    s = s + &fj[a * n + k] * &t;
                                }
                                out.push(s);
                            }
                        }
                    }
                    Ok(out)
                },
            ))
        }
        other => Err(Error::Invalid(format!(
            "exterior covariant derivative of a {other:?} field is not supported"
        ))),
    }
}

pub fn ext_cov_deriv_at<T: Real>(
    conn: &ConnectionField<T>,
    f: &TensorField<T>,
    p: &[T],
) -> Result<TensorAtPoint<T>> {
    ext_cov_deriv_field(conn, f)?.at(p)
}

/// `Riem(·,·)ξ`: components `R^l_{kij} ξ^k` at `[l][i][j]`.
pub fn riemann_apply<T: Real>(riemann: &TensorAtPoint<T>, xi: &[T]) -> TensorAtPoint<T> {
    let n = riemann.dim();
    let mut out = TensorAtPoint::zeros(n, form_variance());
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let s = (0..n).fold(T::zero(), |s, k| s + riemann.get(&[l, k, i, j]) * xi[k]);
                out.set(&[l, i, j], s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::levi_civita;
    use crate::fields::{Expr, ScalarField};

    fn metric(src: &[&str], coords: &[&str]) -> MetricField<f64> {
        let e: Vec<Expr> = src
            .iter()
            .map(|s| ScalarField::parse(s, coords).unwrap().expr().clone())
            .collect();
        MetricField::from_exprs(coords.len(), e)
    }

    #[test]
    fn unit_sphere_is_positively_curved() {
        let g = metric(&["1", "0", "0", "sin(t)^2"], &["t", "p"]);
        let c = ricci_at(&levi_civita(&g), &g, &[1.1, 0.3]).unwrap();
        assert!((c.scalar - 2.0).abs() < 1e-12);
        assert!((c.gauss.unwrap() - 1.0).abs() < 1e-12);
        assert!(c.q.max_abs_diff(&TensorAtPoint::identity(2)) < 1e-12);
    }

    #[test]
    fn cigar_gauss_curvature_at_origin() {
        let g = metric(&["1/(1+x^2+y^2)", "0", "0", "1/(1+x^2+y^2)"], &["x", "y"]);
        let c = ricci_at(&levi_civita(&g), &g, &[0.0, 0.0]).unwrap();
        assert!((c.gauss.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_endomorphism_is_closed() {
        let g = metric(&["1", "0", "0", "sin(t)^2"], &["t", "p"]);
        let d = ext_cov_deriv_at(&levi_civita(&g), &TensorField::identity(2), &[0.9, 0.1]).unwrap();
        assert!(d.max_abs() < 1e-14);
    }

    #[test]
    fn round_sphere_riemann_is_parallel() {
        let g = metric(&["1", "0", "0", "sin(t)^2"], &["t", "p"]);
        let d = div_riemann_at(&levi_civita(&g), &g, &[0.8, 2.0]).unwrap();
        assert!(d.max_abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn scalar_field_has_no_exterior_derivative_here() {
        let g = MetricField::<f64>::euclidean(2);
        let f = TensorField::scalar(&ScalarField::parse("x", &["x", "y"]).unwrap());
        assert!(matches!(
            ext_cov_deriv_field(&levi_civita(&g), &f),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn double_exterior_derivative_is_curvature() {
        let g = metric(&["1/(1+x^2+y^2)", "0", "0", "1/(1+x^2+y^2)"], &["x", "y"]);
        let lc = levi_civita(&g);
        let xi = TensorField::from_exprs(
            2,
            vec![Slot::Up],
            vec![
                ScalarField::parse("x*y^2", &["x", "y"])
                    .unwrap()
                    .expr()
                    .clone(),
                Expr::num(1.0),
            ],
        );
        let p = [0.4, -0.7];
        let dd = ext_cov_deriv_at(&lc, &ext_cov_deriv_field(&lc, &xi).unwrap(), &p).unwrap();
        let r = riemann_apply(
            &riemann_at(&lc, &p).unwrap(),
            xi.at(&p).unwrap().components(),
        );
        assert!(dd.max_abs_diff(&r) < 1e-12, "{dd:?} {r:?}");
        assert!(r.max_abs() > 0.1);
    }

    #[test]
    fn ricci_exterior_derivative_against_riemann_divergence() {
        let g = metric(&["1/(1+x^2+y^2)", "0", "0", "1/(1+x^2+y^2)"], &["x", "y"]);
        let lc = levi_civita(&g);
        let q = ricci_endomorphism_field(&lc, &g).unwrap();
        let p = [0.5, 0.0];
        let dq = ext_cov_deriv_at(&lc, &q, &p).unwrap();
        let div = div_riemann_at(&lc, &g, &p).unwrap();
        assert!(div.max_abs() > 0.1);
        assert!(dq.add(&div).max_abs() < 1e-10, "{dq:?} {div:?}");
    }
}
