use proptest::prelude::*;
use solab_core::connection::levi_civita;
use solab_core::curvature::{ricci_at, riemann_at};
use solab_core::fields::{finite_diff_oracle, Expr, ScalarField};
use solab_core::{Metric, Tensor};

const XYZ: [&str; 3] = ["x", "y", "z"];

fn metric(dim: usize, coords: &[&str], rows: &[&str]) -> Metric {
    let exprs = rows
        .iter()
        .map(|t| Expr::parse(t, coords).unwrap())
        .collect();
    Metric::from_exprs(dim, exprs)
}

/// `δ_ij` plus a small smooth symmetric perturbation, positive definite on `[-1, 1]^3`.
fn perturbed() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::collection::vec(-0.03f64..0.03, 10), 6).prop_map(|cs| {
        let comp: Vec<String> = cs
            .iter()
            .map(|c| {
                format!(
                    "{:?} + {:?}*x + {:?}*y + {:?}*z + {:?}*x^2 + {:?}*x*y + {:?}*y*z + {:?}*z^2 + {:?}*sin(x + z) + {:?}*exp(0.5*y)",
                    c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9]
                )
            })
            .collect();
        let slot = |i: usize, j: usize| {
            let (a, b) = (i.min(j), i.max(j));
            a * 3 - a * (a + 1) / 2 + b
        };
        let mut rows = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { "1" } else { "0" };
                rows.push(format!("{delta} + ({})", comp[slot(i, j)]));
            }
        }
        rows
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

/// `R_{lkij} = g_{lm} R^m_{kij}`.
fn lowered(r: &Tensor, g: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n.pow(4)];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[((l * n + k) * n + i) * n + j] =
                        (0..n).map(|m| g[l * n + m] * r.get(&[m, k, i, j])).sum();
                }
            }
        }
    }
    out
}

/// `R^l_{kij} = K (δ^l_i g_{jk} − δ^l_j g_{ik})`.
fn constant_curvature(k: f64, g: &[f64], n: usize) -> Vec<f64> {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = Vec::with_capacity(n.pow(4));
    for l in 0..n {
        for kk in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.push(k * (d(l, i) * g[j * n + kk] - d(l, j) * g[i * n + kk]));
                }
            }
        }
    }
    out
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn riemann_symmetries(rows in perturbed(), p in point()) {
        let g = metric(3, &XYZ, &rows.iter().map(String::as_str).collect::<Vec<_>>());
        let r = riemann_at(&levi_civita(&g), &p).unwrap();
        let gp = g.at(&p, 0).unwrap().g().to_vec();
        let low = lowered(&r, &gp, 3);
        let at = |l: usize, k: usize, i: usize, j: usize| low[((l * 3 + k) * 3 + i) * 3 + j];
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!((r.get(&[l, k, i, j]) + r.get(&[l, k, j, i])).abs() < 1e-12);
                        prop_assert!((at(l, k, i, j) + at(k, l, i, j)).abs() < 1e-11);
                        prop_assert!((at(l, k, i, j) - at(i, j, l, k)).abs() < 1e-11);
                        let bianchi = r.get(&[l, k, i, j]) + r.get(&[l, i, j, k]) + r.get(&[l, j, k, i]);
                        prop_assert!(bianchi.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn christoffels_match_differences_of_the_metric(rows in perturbed(), p in point()) {
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let g = metric(3, &XYZ, &refs);
        let gamma = levi_civita(&g).coefficients_at(&p).unwrap();
        let fields: Vec<ScalarField> = refs.iter().map(|t| ScalarField::parse(t, &XYZ).unwrap()).collect();
        // dg[c][a][b] = ∂_c g_ab
        let dg: Vec<f64> = (0..27)
            .map(|idx| finite_diff_oracle(&fields[idx % 9], &p, &[idx / 9]).unwrap())
            .collect();
        let gi = g.at(&p, 0).unwrap().g_inv().to_vec();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let want: f64 = (0..3)
                        .map(|l| 0.5 * gi[k * 3 + l] * (dg[i * 9 + l * 3 + j] + dg[j * 9 + l * 3 + i] - dg[l * 9 + i * 3 + j]))
                        .sum();
                    let got = gamma.get(&[k, i, j]);
                    prop_assert!((got - want).abs() < 1e-8, "Γ^{k}_{i}{j}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn round_sphere_has_unit_curvature() {
    let g = metric(2, &["t", "p"], &["1", "0", "0", "sin(t)^2"]);
    let lc = levi_civita(&g);
    for p in [[0.4, 1.0], [1.2, -2.0], [2.5, 0.3]] {
        let c = ricci_at(&lc, &g, &p).unwrap();
        let gp = g.at(&p, 0).unwrap().g().to_vec();
        assert!(max_diff(c.riemann.components(), &constant_curvature(1.0, &gp, 2)) < 1e-12);
        assert!(max_diff(c.ricci.components(), &gp) < 1e-12);
        assert!((c.scalar - 2.0).abs() < 1e-12);
        assert!((c.gauss.unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn three_sphere_of_radius_two() {
    let coords = ["a", "b", "c"];
    let g = metric(
        3,
        &coords,
        &[
            "4",
            "0",
            "0",
            "0",
            "4*sin(a)^2",
            "0",
            "0",
            "0",
            "4*sin(a)^2*sin(b)^2",
        ],
    );
    let lc = levi_civita(&g);
    let p = [0.9, 1.3, -0.4];
    let c = ricci_at(&lc, &g, &p).unwrap();
    let gp = g.at(&p, 0).unwrap().g().to_vec();
    assert!(max_diff(c.riemann.components(), &constant_curvature(0.25, &gp, 3)) < 1e-12);
    let half_g: Vec<f64> = gp.iter().map(|v| 0.5 * v).collect();
    assert!(max_diff(c.ricci.components(), &half_g) < 1e-12);
    assert!((c.scalar - 1.5).abs() < 1e-12);
    assert!(c.gauss.is_none());
}

#[test]
fn hyperbolic_half_plane() {
    let g = metric(2, &["x", "y"], &["1/y^2", "0", "0", "1/y^2"]);
    let lc = levi_civita(&g);
    for p in [[0.0, 1.0], [3.0, 0.25], [-1.5, 4.0]] {
        let c = ricci_at(&lc, &g, &p).unwrap();
        let gp = g.at(&p, 0).unwrap().g().to_vec();
        assert!(max_diff(c.riemann.components(), &constant_curvature(-1.0, &gp, 2)) < 1e-10);
        assert!((c.gauss.unwrap() + 1.0).abs() < 1e-12);
    }
}

#[test]
fn flat_metric_in_polar_coordinates() {
    let g = metric(
        3,
        &["r", "t", "z"],
        &["1", "0", "0", "0", "r^2", "0", "0", "0", "1"],
    );
    let r = riemann_at(&levi_civita(&g), &[1.7, 0.4, -2.0]).unwrap();
    assert!(r.max_abs() < 1e-14);
}
