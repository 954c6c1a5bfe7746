use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::linalg::{jacobi_eigen, solve_lower, solve_lower_transpose};
use super::metric::{MetricAtPoint, SYMMETRY_TOL};
use super::tensor::{Slot, TensorAtPoint};

/// Eigenvalues (ascending) and a g-orthonormal eigenframe of `g⁻¹H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpectrum<T> {
    pub eigenvalues: Vec<T>,
    /// `frame[i]` holds the coordinate components of `E_i`.
    pub frame: Vec<Vec<T>>,
}

impl<T: Real> FrameSpectrum<T> {
    /// Rebuilds the endomorphism `Σ λ_i E_i ⊗ E_i♭`.
    pub fn reconstruct(&self, m: &MetricAtPoint<T>) -> TensorAtPoint<T> {
        let n = self.eigenvalues.len();
        let mut out = TensorAtPoint::zeros(n, vec![Slot::Up, Slot::Down]);
        for (lam, e) in self.eigenvalues.iter().zip(&self.frame) {
            let flat = m.lower(e);
            out = out.add_scaled(*lam, &TensorAtPoint::outer_endomorphism(&flat, e));
        }
        out
    }

    pub fn sum(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |s, &v| s + v)
    }
}

/// Solves `H·v = λ·g·v` for a symmetric `(0,2)` tensor `H`.
///
/// Reduces to `L⁻¹·H·L⁻ᵀ` with the Cholesky factor of `g` and diagonalises by
/// cyclic Jacobi.
pub fn generalized_eigen<T: Real>(
    h: &TensorAtPoint<T>,
    m: &MetricAtPoint<T>,
) -> Result<FrameSpectrum<T>> {
    let n = m.dim();
    if h.variance() != [Slot::Down, Slot::Down] || h.dim() != n {
        return Err(Error::Invalid(
            "generalized_eigen needs a (0,2) tensor of matching dimension".into(),
        ));
    }
    let hc = h.components();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (hc[i * n + j] - hc[j * n + i]).abs();
            let scale = T::one().max(hc[i * n + j].abs());
            if gap > T::lit(SYMMETRY_TOL) * scale {
                return Err(Error::Asymmetric {
                    i,
                    j,
                    gap: gap.as_f64(),
                });
            }
        }
    }
    let l = m.chol();
    // X = L⁻¹ H, column by column
    let mut x = vec![T::zero(); n * n];
    for c in 0..n {
        let col: Vec<T> = (0..n).map(|r| hc[r * n + c]).collect();
        let y = solve_lower(l, n, &col);
        for r in 0..n {
            x[r * n + c] = y[r];
        }
    }
    // C = X L⁻ᵀ = (L⁻¹ Xᵀ)ᵀ
    let mut c = vec![T::zero(); n * n];
    for r in 0..n {
        let row: Vec<T> = (0..n).map(|k| x[r * n + k]).collect();
        let y = solve_lower(l, n, &row);
        for k in 0..n {
            c[r * n + k] = y[k];
        }
    }
    for r in 0..n {
        for k in r + 1..n {
            let avg = (c[r * n + k] + c[k * n + r]) * T::lit(0.5);
            c[r * n + k] = avg;
            c[k * n + r] = avg;
        }
    }
    let (vals, vecs) = jacobi_eigen(&c, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .partial_cmp(&vals[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&k| vals[k]).collect();
    let frame = order
        .iter()
        .map(|&k| {
            let y: Vec<T> = (0..n).map(|r| vecs[r * n + k]).collect();
            solve_lower_transpose(l, n, &y)
        })
        .collect();
    Ok(FrameSpectrum { eigenvalues, frame })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let m = MetricAtPoint::<f64>::from_components(
            3,
            vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        // H_f = ½ dt² on the n = 3 cylinder chart
        let h = TensorAtPoint::new(
            3,
            vec![Slot::Down, Slot::Down],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
        );
        let s = generalized_eigen(&h, &m).unwrap();
        let want = [0.0, 0.0, 0.5];
        for (a, b) in s.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_pencil() {
        let g: Vec<f64> = vec![2.0, 0.4, 0.4, 1.0];
        let m = MetricAtPoint::from_components(2, g.clone()).unwrap();
        let s =
            generalized_eigen(&TensorAtPoint::new(2, vec![Slot::Down, Slot::Down], g), &m).unwrap();
        for v in &s.eigenvalues {
            assert!((v - 1.0).abs() < 1e-13);
        }
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m.inner(&s.frame[i], &s.frame[j]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let m = MetricAtPoint::from_components(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let h = TensorAtPoint::new(2, vec![Slot::Down, Slot::Down], vec![1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            generalized_eigen(&h, &m),
            Err(Error::Asymmetric { .. })
        ));
    }
}
