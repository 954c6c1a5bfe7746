//! Expressions, jets and fields: the derivative engine every geometric
//! quantity is computed with.

mod eval;
mod expr;
mod fd;
mod jet;
mod tensor_field;

pub use eval::{eval_jet, EvalError, ScalarField};
pub use expr::{BinOp, Constant, Expr, Func, ParseError};
pub use fd::{finite_diff_oracle, FD_STEP_LOW, FD_STEP_THIRD};
pub use jet::{invert_jet_matrix, Jet3, MAX_ORDER};
pub use tensor_field::{values, JetFn, TensorField};

/// Parses `text` against the coordinate names of a chart.
pub fn parse_expr<S: AsRef<str>>(text: &str, coords: &[S]) -> Result<Expr, ParseError> {
    Expr::parse(text, coords)
}
