use std::sync::Arc;

use thiserror::Error;

use super::expr::{BinOp, Expr, Func, ParseError};
use super::jet::{Jet3, MAX_ORDER};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
    #[error("point has {got} coordinates, chart dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point has a non-finite coordinate")]
    NonFinite,
    #[error("derivative order {requested} exceeds the maximum of {max}")]
    Order { requested: u8, max: u8 },
}

fn domain(e: &Expr, reason: &str) -> EvalError {
    EvalError::Domain {
        expr: e.to_string(),
        reason: reason.to_string(),
    }
}

impl Expr {
    /// Evaluates the expression and its partial derivatives up to `order` at `point`.
    pub fn eval_jet<T: Real>(&self, point: &[T], order: u8) -> Result<Jet3<T>, EvalError> {
        if order > MAX_ORDER {
            return Err(EvalError::Order {
                requested: order,
                max: MAX_ORDER,
            });
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        if let Some(i) = self.max_var_index() {
            if i >= point.len() {
                return Err(EvalError::Dimension {
                    expected: i + 1,
                    got: point.len(),
                });
            }
        }
        let out = self.jet(point, order)?;
        if !out.is_finite() {
            return Err(domain(self, "non-finite result"));
        }
        Ok(out)
    }

    pub fn eval_value<T: Real>(&self, point: &[T]) -> Result<T, EvalError> {
        self.eval_jet(point, 0).map(|j| j.value())
    }

    fn jet<T: Real>(&self, p: &[T], order: u8) -> Result<Jet3<T>, EvalError> {
        let n = p.len();
        Ok(match self {
            Expr::Num(v) => Jet3::constant(n, order, T::lit(*v)),
            Expr::Const(c) => Jet3::constant(n, order, T::lit(c.value())),
            Expr::Var { index, .. } => Jet3::variable(n, order, *index, p[*index]),
            Expr::Neg(a) => -a.jet(p, order)?,
            Expr::Binary { op, lhs, rhs } => match op {
                BinOp::Add => lhs.jet(p, order)? + rhs.jet(p, order)?,
                BinOp::Sub => lhs.jet(p, order)? - rhs.jet(p, order)?,
                BinOp::Mul => lhs.jet(p, order)? * rhs.jet(p, order)?,
                BinOp::Div => {
                    let den = rhs.jet(p, order)?;
                    if den.value() == T::zero() {
                        return Err(domain(self, "division by zero"));
                    }
                    lhs.jet(p, order)? * den.recip()
                }
                BinOp::Pow => {
                    let base = lhs.jet(p, order)?;
                    match rhs.integer_literal() {
                        Some(k) => {
                            if k < 0 && base.value() == T::zero() {
                                return Err(domain(self, "zero raised to a negative power"));
                            }
                            base.powi(k)
                        }
                        None => {
                            if base.value() <= T::zero() {
                                return Err(domain(
                                    self,
                                    "non-integer power of a non-positive base",
                                ));
                            }
                            (rhs.jet(p, order)? * base.ln()).exp()
                        }
                    }
                }
            },
            Expr::Call { func, arg } => {
                let a = arg.jet(p, order)?;
                let v = a.value();
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => {
                        if v.cos() == T::zero() {
                            return Err(domain(self, "tangent pole"));
                        }
                        a.tan()
                    }
                    Func::Atan => a.atan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if v <= T::zero() {
                            return Err(domain(self, "logarithm of a non-positive value"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if v < T::zero() || (v == T::zero() && order > 0) {
                            return Err(domain(self, "square root of a non-positive value"));
                        }
                        a.sqrt()
                    }
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Tanh => a.tanh(),
                }
            }
        })
    }
}

/// A smooth function on a chart, given by an expression over its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    coords: Arc<Vec<String>>,
    body: Arc<Expr>,
}

impl ScalarField {
    pub fn new(coords: Arc<Vec<String>>, body: Expr) -> Self {
        if let Some(i) = body.max_var_index() {
            assert!(
                i < coords.len(),
                "expression references coordinate {i} outside the chart"
            );
        }
        ScalarField {
            coords,
            body: Arc::new(body),
        }
    }

    pub fn parse<S: AsRef<str>>(text: &str, coords: &[S]) -> Result<Self, ParseError> {
        let names: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        let body = Expr::parse(text, &names)?;
        Ok(ScalarField {
            coords: Arc::new(names),
            body: Arc::new(body),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn expr(&self) -> &Expr {
        &self.body
    }

    pub fn eval_jet<T: Real>(&self, p: &[T], order: u8) -> Result<Jet3<T>, EvalError> {
        if p.len() != self.dim() {
            return Err(EvalError::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        self.body.eval_jet(p, order)
    }
}

/// Free-function form of [`ScalarField::eval_jet`].
pub fn eval_jet<T: Real>(field: &ScalarField, p: &[T], order: u8) -> Result<Jet3<T>, EvalError> {
    field.eval_jet(p, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(text: &str) -> ScalarField {
        ScalarField::parse(text, &["x", "y"]).unwrap()
    }

    #[test]
    fn polynomial_jet() {
        let j = field("x^2*y").eval_jet(&[1.0, 2.0], 3).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.gradient(), vec![4.0, 1.0]);
        assert_eq!((j.d2(0, 0), j.d2(0, 1), j.d2(1, 1)), (4.0, 2.0, 0.0));
        assert_eq!(j.d3(0, 0, 1), 2.0);
        for (a, b, c) in [(0, 0, 0), (0, 1, 1), (1, 1, 1)] {
            assert_eq!(j.d3(a, b, c), 0.0);
        }
    }

    #[test]
    fn cigar_potential_at_origin() {
        let j = field("-log(1+x^2+y^2)").eval_jet(&[0.0, 0.0], 2).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.gradient(), vec![0.0, 0.0]);
        assert_eq!(j.d2(0, 0), -2.0);
        assert_eq!(j.d2(1, 1), -2.0);
        assert_eq!(j.d2(0, 1), 0.0);
    }

    #[test]
    fn constants_and_functions() {
        let v = field("sin(pi/2)")
            .eval_jet(&[0.3f64, -0.1], 0)
            .unwrap()
            .value();
        assert!((v - 1.0).abs() < 1e-15);
        let v = field("log(e)").eval_jet(&[0.0f64, 0.0], 0).unwrap().value();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let err = ScalarField::parse("log(x)", &["x"])
            .unwrap()
            .eval_jet(&[0.0], 2)
            .unwrap_err();
        assert!(
            matches!(&err, EvalError::Domain { expr, .. } if expr == "log(x)"),
            "{err}"
        );
        assert!(field("1/(x-y)").eval_jet(&[1.0, 1.0], 0).is_err());
        assert!(field("sqrt(x)").eval_jet(&[-1.0, 0.0], 0).is_err());
        assert!(field("sqrt(x)").eval_jet(&[0.0, 0.0], 1).is_err());
        assert_eq!(
            field("sqrt(x)").eval_jet(&[0.0, 0.0], 0).unwrap().value(),
            0.0
        );
        assert!(field("x^0.5").eval_jet(&[-1.0, 0.0], 0).is_err());
    }

    #[test]
    fn non_integer_power_matches_sqrt() {
        let a = field("x^0.5").eval_jet(&[2.0f64, 0.0], 3).unwrap();
        let b = field("sqrt(x)").eval_jet(&[2.0f64, 0.0], 3).unwrap();
        for m in [vec![], vec![0], vec![0, 0], vec![0, 0, 0]] {
            assert!((a.partial_value(&m) - b.partial_value(&m)).abs() < 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            field("x").eval_jet(&[1.0], 0),
            Err(EvalError::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn f32_evaluation() {
        let j = field("x^2*y").eval_jet(&[1.0f32, 2.0], 3).unwrap();
        assert_eq!(j.d2(0, 1), 2.0f32);
    }
}
