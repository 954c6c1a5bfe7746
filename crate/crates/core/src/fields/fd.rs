//! Central finite differences, kept independent of the jet path so it can
//! serve as a test oracle.

use super::eval::{EvalError, ScalarField};
use crate::scalar::Real;

/// Step used for first and second derivatives.
pub const FD_STEP_LOW: f64 = 1e-4;
/// Step used for third derivatives.
pub const FD_STEP_THIRD: f64 = 1e-3;

fn stencil(multiplicity: usize) -> &'static [(i32, f64)] {
    match multiplicity {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!(),
    }
}

/// Central-difference estimate of the partial derivative named by `multi_index`
/// (a list of coordinate indices, length `0..=3`).
pub fn finite_diff_oracle<T: Real>(
    field: &ScalarField,
    p: &[T],
    multi_index: &[usize],
) -> Result<T, EvalError> {
    assert!(
        multi_index.len() <= 3,
        "finite differences support orders up to 3"
    );
    let n = field.dim();
    if p.len() != n {
        return Err(EvalError::Dimension {
            expected: n,
            got: p.len(),
        });
    }
    let order = multi_index.len();
    if order == 0 {
        return field.expr().eval_value(p);
    }
    let h = T::lit(if order == 3 {
        FD_STEP_THIRD
    } else {
        FD_STEP_LOW
    });
    let mut mult = vec![0usize; n];
    for &i in multi_index {
        mult[i] += 1;
    }
    let active: Vec<usize> = (0..n).filter(|&i| mult[i] > 0).collect();

    // tensor product of one-dimensional stencils over the active coordinates
    let mut acc = T::zero();
    let mut cursor = vec![0usize; active.len()];
    'outer: loop {
        let mut q = p.to_vec();
        let mut w = T::one();
        for (slot, &var) in active.iter().enumerate() {
            let (shift, weight) = stencil(mult[var])[cursor[slot]];
            q[var] += T::lit(shift as f64) * h;
            w *= T::lit(weight);
        }
        acc += w * field.expr().eval_value(&q)?;
        for slot in 0..active.len() {
            cursor[slot] += 1;
            if cursor[slot] < stencil(mult[active[slot]]).len() {
                continue 'outer;
            }
            cursor[slot] = 0;
        }
        break;
    }
    Ok(acc / h.powi(order as i32))
}
