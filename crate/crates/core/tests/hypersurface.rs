use proptest::prelude::*;
use solab_core::fields::Expr;
use solab_core::hypersurface::{
    eta_type, eta_umbilical_decompose, induced_metric, self_adjoint_gap, shape_at, Immersion,
};
use solab_core::pointwise::generalized_eigen;
use solab_core::{PointMetric, Tensor};

fn immersion(coords: &[&str], comps: &[String]) -> Immersion {
    let exprs = comps
        .iter()
        .map(|t| Expr::parse(t, coords).unwrap())
        .collect();
    Immersion::new(coords.len(), exprs, 1).unwrap()
}

fn sphere(r: f64) -> Immersion {
    immersion(
        &["th", "ph"],
        &[
            format!("{r:?}*sin(th)*cos(ph)"),
            format!("{r:?}*sin(th)*sin(ph)"),
            format!("{r:?}*cos(th)"),
        ],
    )
}

fn spd(n: usize, b: &[f64]) -> PointMetric {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum::<f64>()
                + if i == j { 1.0 } else { 0.0 };
        }
    }
    PointMetric::from_components(n, g).unwrap()
}

fn unit(m: &PointMetric, v: &[f64]) -> Vec<f64> {
    let norm = m.inner(v, v).sqrt();
    v.iter().map(|x| x / norm).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sphere_shape_operator_is_minus_identity_over_r(
        r in 0.2f64..20.0,
        th in 0.2f64..2.9,
        ph in -3.0f64..3.0,
    ) {
        let s = shape_at(&sphere(r), &[th, ph]).unwrap();
        let want = Tensor::identity(2).scale(-1.0 / r);
        prop_assert!(s.shape.max_abs_diff(&want) < 1e-12 / r.min(1.0));
        let out: f64 = s.normal.iter().zip([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]).map(|(a, b)| a * b).sum();
        prop_assert!((out - 1.0).abs() < 1e-12, "normal should point outward");
    }

    #[test]
    fn eta_umbilical_recovery(
        n in 3usize..6,
        b in prop::collection::vec(-1.0f64..1.0, 25),
        v in prop::collection::vec(-1.0f64..1.0, 5),
        sigma in -3.0f64..3.0,
        gap in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
    ) {
        let m = spd(n, &b[..n * n]);
        prop_assume!(v[..n].iter().map(|x| x * x).sum::<f64>() > 0.05);
        let xi = unit(&m, &v[..n]);
        let rho = sigma + gap;
        let a = eta_type(&m, sigma, rho, &xi);
        prop_assert!(self_adjoint_gap(&a, &m) < 1e-12);
        let d = eta_umbilical_decompose(&a, &m).unwrap();
        prop_assert!((d.sigma - sigma).abs() < 1e-9, "{} vs {sigma}", d.sigma);
        prop_assert!((d.rho - rho).abs() < 1e-9, "{} vs {rho}", d.rho);
        let align = m.inner(&d.xi, &xi).abs();
        prop_assert!((align - 1.0).abs() < 1e-9);
        prop_assert!(d.reconstruction_error < 1e-9);
    }

    #[test]
    fn two_dimensional_split_takes_the_larger_eigenvalue(
        b in prop::collection::vec(-1.0f64..1.0, 4),
        v in prop::collection::vec(-1.0f64..1.0, 2),
        lo in -3.0f64..3.0,
        gap in 0.2f64..3.0,
    ) {
        let m = spd(2, &b);
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 0.05);
        let xi = unit(&m, &v);
        // ρ is placed on the smaller eigenvalue; the decomposition swaps roles
        let a = eta_type(&m, lo + gap, lo, &xi);
        let d = eta_umbilical_decompose(&a, &m).unwrap();
        prop_assert!((d.rho - (lo + gap)).abs() < 1e-9);
        prop_assert!((d.sigma - lo).abs() < 1e-9);
        prop_assert!(d.reconstruction_error < 1e-9);
    }
}

#[test]
fn cylinder_principal_curvatures() {
    for r in [0.5f64, 1.0, 3.0] {
        let imm = immersion(
            &["u", "v"],
            &[format!("{r:?}*cos(u)"), format!("{r:?}*sin(u)"), "v".into()],
        );
        let s = shape_at(&imm, &[0.7, -0.2]).unwrap();
        let spec = generalized_eigen(&s.second_form, &s.metric).unwrap();
        assert!((spec.eigenvalues[0] + 1.0 / r).abs() < 1e-12);
        assert!(spec.eigenvalues[1].abs() < 1e-12);
        let d = eta_umbilical_decompose(&s.shape, &s.metric).unwrap();
        assert!((d.sigma + 1.0 / r).abs() < 1e-12 && d.rho.abs() < 1e-12);
    }
}

#[test]
fn graph_of_a_paraboloid_at_its_vertex() {
    // z = (x² + 3y²)/2 has II = diag(1, 3) at the origin with the upward normal
    let imm = immersion(
        &["x", "y"],
        &["x".into(), "y".into(), "(x^2 + 3*y^2)/2".into()],
    );
    let s = shape_at(&imm, &[0.0f64, 0.0]).unwrap();
    let sign = s.normal[2].signum();
    let want = Tensor::new(
        2,
        s.shape.variance().to_vec(),
        vec![sign, 0.0, 0.0, 3.0 * sign],
    );
    assert!(s.shape.max_abs_diff(&want) < 1e-14);
}

#[test]
fn induced_metric_of_the_sphere() {
    let g = induced_metric::<f64>(&sphere(2.0));
    let m = g.at(&[0.8, 0.1], 0).unwrap();
    let s2 = 0.8f64.sin().powi(2);
    let want = [4.0, 0.0, 0.0, 4.0 * s2];
    assert!(m.g().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-14));
}
