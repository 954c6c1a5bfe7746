use proptest::prelude::*;
use solab_core::catalog::get_call;
use solab_core::fields::{Expr, ScalarField, TensorField};
use solab_core::geometry::GeometrySpec;
use solab_core::pointwise::norm2;
use solab_core::soliton::{gradient_residual, hessian_at, soliton_report, Classification};
use solab_core::{Metric, Soliton, Tensor};

const XY: [&str; 2] = ["x", "y"];

fn cigar() -> Soliton {
    let g = Metric::from_exprs(
        2,
        ["1/(1+x^2+y^2)", "0", "0", "1/(1+x^2+y^2)"]
            .iter()
            .map(|t| Expr::parse(t, &XY).unwrap())
            .collect(),
    );
    let f = TensorField::scalar(&ScalarField::parse("-log(1+x^2+y^2)", &XY).unwrap());
    Soliton::gradient(g, f, 0.0)
}

fn catalog_soliton(call: &str) -> (Soliton, GeometrySpec) {
    let inst = get_call(call).unwrap();
    let spec = GeometrySpec::from_file(inst.geometry).unwrap();
    let m = spec.build::<f64>().unwrap();
    let d = Soliton::gradient(m.metric, m.potential.unwrap(), m.lambda.unwrap());
    (d, spec)
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn cigar_closed_forms(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let d = cigar();
        let p = [x, y];
        let q = 1.0 + x * x + y * y;
        let h = hessian_at(&d.metric, d.potential().unwrap(), &p).unwrap();
        let want = Tensor::new(2, h.variance().to_vec(), vec![-2.0 / (q * q), 0.0, 0.0, -2.0 / (q * q)]);
        prop_assert!(h.max_abs_diff(&want) < 1e-13);
        let r = soliton_report(&d, &p).unwrap();
        let tol = 1e-12;
        prop_assert!((r.laplacian + 4.0 / q).abs() < tol);
        prop_assert!((r.norm_h2 - 8.0 / (q * q)).abs() < tol);
        prop_assert!((r.norm_ric2 - 8.0 / (q * q)).abs() < tol);
        prop_assert!((r.scalar_r - 4.0 / q).abs() < tol);
        prop_assert!((r.gauss.unwrap() - 2.0 / q).abs() < tol);
        prop_assert!(r.residual6_norm2 < 1e-24);
        prop_assert_eq!(r.classification, Classification::Steady);
    }

    #[test]
    fn first_quadratic_is_a_norm_difference(
        c in prop::collection::vec(-1.0f64..1.0, 6),
        lambda in -2.0f64..2.0,
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        // for arbitrary (g, f): n λ² + 2Δf λ + ‖H‖² − ‖Ric‖² = ‖H + λg‖² − ‖Ric‖²
        let rows = [
            format!("2 + {:?}*sin(x*y)", c[0]),
            format!("{:?}*x", c[1] * 0.3),
            format!("{:?}*x", c[1] * 0.3),
            format!("2 + {:?}*cos(x + {:?}*y)", c[2], c[3]),
        ];
        let g = Metric::from_exprs(2, rows.iter().map(|t| Expr::parse(t, &XY).unwrap()).collect());
        let f = TensorField::scalar(
            &ScalarField::parse(&format!("{:?}*x^2 + {:?}*exp(y) + x*y", c[4], c[5]), &XY).unwrap(),
        );
        let d = Soliton::gradient(g.clone(), f.clone(), lambda);
        let p = [x, y];
        let r = soliton_report(&d, &p).unwrap();
        let m = g.at(&p, 0).unwrap();
        let shifted = hessian_at(&g, &f, &p).unwrap().add_scaled(lambda, &m.metric_tensor());
        let want = norm2(&shifted, &m).unwrap() - r.norm_ric2;
        let got = r.lambda_analysis.eval11(lambda);
        prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
        let (_, res) = gradient_residual(&d, &p).unwrap();
        prop_assert!((r.residual6_norm2 - res).abs() <= 1e-12 * (1.0 + res));
    }

    #[test]
    fn round_cylinder_is_a_shrinking_soliton(u in -3.0f64..3.0, v in 0.3f64..2.8, t in -2.0f64..2.0) {
        let (d, spec) = catalog_soliton("cylinder(4)");
        prop_assert_eq!(spec.coords.len(), 4);
        let p = [t, v, u, 0.4];
        let r = soliton_report(&d, &p).unwrap();
        prop_assert!(r.residual6_norm2 < 1e-20);
        prop_assert!(r.identity10_residual.abs() < 1e-10);
        prop_assert!(r.lambda_analysis.trace16_residual.abs() < 1e-10);
        prop_assert_eq!(r.classification, Classification::Shrinking);
    }
}

#[test]
fn gaussian_solitons_have_a_double_root_at_lambda() {
    for lambda in [-1.0, 0.5, 2.0] {
        let coords = ["a", "b", "c"];
        let f = format!("{:?}*(a^2 + b^2 + c^2)/2", -lambda);
        let d = Soliton::gradient(
            Metric::euclidean(3),
            TensorField::scalar(&ScalarField::parse(&f, &coords).unwrap()),
            lambda,
        );
        let r = soliton_report(&d, &[0.3, -0.1, 0.9]).unwrap();
        assert!(r.residual6_norm2 < 1e-28);
        assert!(r.lambda_analysis.disc12.abs() < 1e-12);
        let roots = r.lambda_analysis.roots11.values();
        assert!(roots.iter().all(|x| (x - lambda).abs() < 1e-6), "{roots:?}");
        assert!((r.laplacian + 3.0 * lambda).abs() < 1e-13);
    }
}

#[test]
fn wrong_lambda_leaves_a_residual() {
    let mut d = cigar();
    d.lambda = 0.25;
    let (_, n2) = gradient_residual(&d, &[0.2, 0.1]).unwrap();
    // ‖λg‖² = 2λ²
    assert!((n2 - 0.125).abs() < 1e-12);
}
