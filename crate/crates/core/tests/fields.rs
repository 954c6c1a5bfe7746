use proptest::prelude::*;
use solab_core::fields::{finite_diff_oracle, Expr, ScalarField};

const COORDS: [&str; 3] = ["x", "y", "z"];

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(COORDS.to_vec()).prop_map(str::to_string),
        (0.5f64..2.0).prop_map(|c| format!("{c:.3}")),
    ]
}

/// Expressions that stay smooth and bounded on `[-1, 1]^3`.
fn mild_expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + {b}^2))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3*{a})")),
            inner.clone().prop_map(|a| format!("atan({a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + {a}^2)")),
            inner.prop_map(|a| format!("(-{a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn field(text: &str) -> ScalarField {
    ScalarField::parse(text, &COORDS).expect("generated expression parses")
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn display_reparses_to_the_same_tree(text in mild_expr()) {
        let e = Expr::parse(&text, &COORDS).unwrap();
        let again = Expr::parse(&e.to_string(), &COORDS).unwrap();
        prop_assert_eq!(e, again);
    }

    #[test]
    fn jets_agree_with_central_differences(text in mild_expr(), p in point()) {
        let f = field(&text);
        let jet = f.eval_jet(&p, 2).unwrap();
        for i in 0..3 {
            let fd = finite_diff_oracle(&f, &p, &[i]).unwrap();
            prop_assert!(close(jet.d1(i), fd, 1e-6, 1e-7), "d{i}: {} vs {fd}", jet.d1(i));
            for j in i..3 {
                let fd = finite_diff_oracle(&f, &p, &[i, j]).unwrap();
                prop_assert!(close(jet.d2(i, j), fd, 1e-4, 1e-5), "d{i}{j}: {} vs {fd}", jet.d2(i, j));
            }
        }
    }

    #[test]
    fn product_rule_holds_to_third_order(a in mild_expr(), b in mild_expr(), p in point()) {
        let (fa, fb) = (field(&a), field(&b));
        let fab = field(&format!("({a}) * ({b})"));
        let (ja, jb, jab) = (
            fa.eval_jet(&p, 3).unwrap(),
            fb.eval_jet(&p, 3).unwrap(),
            fab.eval_jet(&p, 3).unwrap(),
        );
        let scale = 1.0 + ja.value().abs().max(jb.value().abs());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    // Leibniz: ∂ijk(fg) summed over the 8 splittings of {i,j,k}
                    let idx = [i, j, k];
                    let mut want = 0.0;
                    for mask in 0..8u8 {
                        let left: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 1).map(|b| idx[b]).collect();
                        let right: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 0).map(|b| idx[b]).collect();
                        want += ja.partial_value(&left) * jb.partial_value(&right);
                    }
                    let got = jab.d3(i, j, k);
                    prop_assert!(close(got, want, 1e-10, 1e-10 * scale * scale), "d{i}{j}{k}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn exponential_of_linear_form(a in prop::collection::vec(-1.0f64..1.0, 3), p in point()) {
        let text = format!("exp({:?}*x + {:?}*y + {:?}*z)", a[0], a[1], a[2]);
        let jet = field(&text).eval_jet(&p, 3).unwrap();
        let v = (a[0] * p[0] + a[1] * p[1] + a[2] * p[2]).exp();
        prop_assert!(close(jet.value(), v, 1e-14, 0.0));
        for i in 0..3 {
            prop_assert!(close(jet.d1(i), a[i] * v, 1e-13, 1e-15));
            for j in 0..3 {
                prop_assert!(close(jet.d2(i, j), a[i] * a[j] * v, 1e-13, 1e-15));
                for k in 0..3 {
                    prop_assert!(close(jet.d3(i, j, k), a[i] * a[j] * a[k] * v, 1e-13, 1e-15));
                }
            }
        }
    }
}

#[test]
fn cubic_has_constant_third_derivatives() {
    let f = field("(2*x - y + 0.5*z)^3");
    let c = [2.0, -1.0, 0.5];
    for p in [[0.0f64, 0.0, 0.0], [0.3, -0.7, 1.1]] {
        let jet = f.eval_jet(&p, 3).unwrap();
        let s = c[0] * p[0] + c[1] * p[1] + c[2] * p[2];
        for i in 0..3 {
            assert!((jet.d1(i) - 3.0 * c[i] * s * s).abs() < 1e-13);
            for j in 0..3 {
                assert!((jet.d2(i, j) - 6.0 * c[i] * c[j] * s).abs() < 1e-13);
                for k in 0..3 {
                    assert!((jet.d3(i, j, k) - 6.0 * c[i] * c[j] * c[k]).abs() < 1e-13);
                }
            }
        }
    }
}

#[test]
fn trig_identity_holds_through_third_order() {
    let f = field("sin(x*y)^2 + cos(x*y)^2");
    let jet = f.eval_jet(&[0.4f64, -1.3, 0.2], 3).unwrap();
    assert!((jet.value() - 1.0).abs() < 1e-15);
    for i in 0..3 {
        assert!(jet.d1(i).abs() < 1e-14);
        for j in 0..3 {
            assert!(jet.d2(i, j).abs() < 1e-13);
            for k in 0..3 {
                assert!(jet.d3(i, j, k).abs() < 1e-12);
            }
        }
    }
}
