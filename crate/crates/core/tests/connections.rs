use proptest::prelude::*;
use solab_core::connection::{
    cov_deriv_at, deform_connection, dual_connection, duality_residual, levi_civita,
    recurrence_factor, torsion_at, weyl_connection, DeformTerm,
};
use solab_core::fields::{Expr, TensorField};
use solab_core::pointwise::Slot;
use solab_core::{Field, Metric};

const XYZ: [&str; 3] = ["x", "y", "z"];

fn exprs(texts: &[String]) -> Vec<Expr> {
    texts
        .iter()
        .map(|t| Expr::parse(t, &XYZ).unwrap())
        .collect()
}

/// A diagonal-dominant metric with smooth coefficients.
fn metric() -> impl Strategy<Value = Metric> {
    prop::collection::vec(-0.1f64..0.1, 9).prop_map(|c| {
        let rows = vec![
            format!("2 + {:?}*sin(x) + {:?}*y^2", c[0], c[1]),
            format!("{:?}*z", c[2]),
            format!("{:?}*x*y", c[3]),
            format!("{:?}*z", c[2]),
            format!("1.5 + {:?}*cos(y + z)", c[4]),
            format!("{:?}*exp(0.3*x)", c[5]),
            format!("{:?}*x*y", c[3]),
            format!("{:?}*exp(0.3*x)", c[5]),
            format!("1 + {:?}*x^2 + {:?}*y*z + {:?}*z", c[6], c[7], c[8]),
        ];
        Metric::from_exprs(3, exprs(&rows))
    })
}

fn covector() -> impl Strategy<Value = (Vec<String>, Field)> {
    prop::collection::vec(-1.0f64..1.0, 6).prop_map(|c| {
        let texts = vec![
            format!("{:?} + {:?}*y", c[0], c[1]),
            format!("{:?}*sin(x*z)", c[2]),
            format!("{:?} + {:?}*x^2 + {:?}*y", c[3], c[4], c[5]),
        ];
        let f = TensorField::from_exprs(3, vec![Slot::Down], exprs(&texts));
        (texts, f)
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn levi_civita_is_torsion_free_and_metric(g in metric(), p in point()) {
        let lc = levi_civita(&g);
        prop_assert!(torsion_at(&lc, &p).unwrap().max_abs() < 1e-14);
        prop_assert!(cov_deriv_at(&lc, g.field(), &p).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn weyl_connection_recovers_its_one_form(g in metric(), (_, eta) in covector(), p in point()) {
        let w = weyl_connection(&g, &eta).unwrap();
        prop_assert!(torsion_at(&w, &p).unwrap().max_abs() < 1e-12);
        let rec = recurrence_factor(&w, &g, &p).unwrap();
        let want = eta.at(&p).unwrap();
        let got = rec.eta().expect("Weyl connections are recurrent");
        for (a, b) in got.iter().zip(want.components()) {
            prop_assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
        prop_assert!(rec.residual() < 1e-12);
    }

    #[test]
    fn duality_is_an_involution(g in metric(), (_, alpha) in covector(), k in -2.0f64..2.0, p in point()) {
        let conn = deform_connection(
            &levi_civita(&g),
            vec![DeformTerm::AlphaTensorF { coeff: k, alpha, f: None }],
        )
        .unwrap();
        let dual = dual_connection(&g, &conn).unwrap();
        prop_assert!(duality_residual(&g, &conn, &dual, &p).unwrap() < 1e-12);
        let back = dual_connection(&g, &dual).unwrap();
        let diff = back.coefficients_at(&p).unwrap().max_abs_diff(&conn.coefficients_at(&p).unwrap());
        prop_assert!(diff < 1e-11);
        let mean = conn.mean(&dual).unwrap();
        prop_assert!(cov_deriv_at(&mean, g.field(), &p).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn levi_civita_is_self_dual(g in metric(), p in point()) {
        let lc = levi_civita(&g);
        let dual = dual_connection(&g, &lc).unwrap();
        let diff = dual.coefficients_at(&p).unwrap().max_abs_diff(&lc.coefficients_at(&p).unwrap());
        prop_assert!(diff < 1e-12);
    }
}

#[test]
fn metric_connection_has_zero_recurrence_form() {
    let g = Metric::from_exprs(
        2,
        ["exp(2*x)", "0", "0", "exp(2*x)"]
            .iter()
            .map(|t| Expr::parse(t, &["x", "y"]).unwrap())
            .collect(),
    );
    let rec = recurrence_factor(&levi_civita(&g), &g, &[0.3, -0.8]).unwrap();
    assert!(rec.eta().unwrap().iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn flat_weyl_connection_coefficients() {
    // g = δ on the plane with η = dx: Γ^x_xx = −½, Γ^y_xy = Γ^y_yx = −½, Γ^x_yy = ½
    let xy = ["x", "y"];
    let g = Metric::euclidean(2);
    let eta = TensorField::from_exprs(
        2,
        vec![Slot::Down],
        vec![
            Expr::parse("1", &xy).unwrap(),
            Expr::parse("0", &xy).unwrap(),
        ],
    );
    let w = weyl_connection(&g, &eta).unwrap();
    let c = w.coefficients_at(&[0.1, 0.2]).unwrap();
    let want = [
        ([0, 0, 0], -0.5),
        ([0, 0, 1], 0.0),
        ([0, 1, 0], 0.0),
        ([0, 1, 1], 0.5),
        ([1, 0, 0], 0.0),
        ([1, 0, 1], -0.5),
        ([1, 1, 0], -0.5),
        ([1, 1, 1], 0.0),
    ];
    for (idx, v) in want {
        assert!((c.get(&idx) - v).abs() < 1e-15, "{idx:?}");
    }
}
