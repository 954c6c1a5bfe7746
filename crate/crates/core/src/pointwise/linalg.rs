//! Small dense kernels on row-major `n × n` slices.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivot threshold below which a matrix is rejected as not positive definite.
pub const CHOLESKY_PIVOT_MIN: f64 = 1e-13;

/// Lower-triangular `L` with `a = L·Lᵀ`.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > T::lit(CHOLESKY_PIVOT_MIN)) {
            return Err(Error::NotPositiveDefinite { pivot: d.as_f64() });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L·x = b` for lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[i * n + k] * x[k];
            x[i] -= t;
        }
        x[i] /= l[i * n + i];
    }
    x
}

/// Solves `Lᵀ·x = b` for lower-triangular `L`.
pub fn solve_lower_transpose<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = l[k * n + i] * x[k];
            x[i] -= t;
        }
        x[i] /= l[i * n + i];
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor; the result is symmetrised.
pub fn spd_inverse<T: Real>(l: &[T], n: usize) -> Vec<T> {
    let mut inv = vec![T::zero(); n * n];
    for c in 0..n {
        let mut e = vec![T::zero(); n];
        e[c] = T::one();
        let y = solve_lower(l, n, &e);
        let x = solve_lower_transpose(l, n, &y);
        for r in 0..n {
            inv[r * n + c] = x[r];
        }
    }
    for r in 0..n {
        for c in r + 1..n {
            let m = (inv[r * n + c] + inv[c * n + r]) * T::lit(0.5);
            inv[r * n + c] = m;
            inv[c * n + r] = m;
        }
    }
    inv
}

pub fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub const JACOBI_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues (unsorted) and the eigenvector matrix `V` whose
/// columns are the orthonormal eigenvectors.
pub fn jacobi_eigen<T: Real>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let total: T = m.iter().fold(T::zero(), |s, &x| s + x * x);
    let tol = T::tol(JACOBI_TOL);
    let threshold = tol * tol * total;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= threshold || off == T::zero() {
            return Ok(((0..n).map(|i| m[i * n + i]).collect(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let sign = if theta >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Least-squares solution of the overdetermined system `A·x ≈ b`
/// (`A` is `rows × cols`, row-major) through the normal equations.
///
/// Returns `None` when the normal matrix is numerically singular.
pub fn least_squares<T: Real>(a: &[T], rows: usize, cols: usize, b: &[T]) -> Option<Vec<T>> {
    let mut ata = vec![T::zero(); cols * cols];
    let mut atb = vec![T::zero(); cols];
    for r in 0..rows {
        for i in 0..cols {
            let ari = a[r * cols + i];
            atb[i] += ari * b[r];
            for j in 0..cols {
                ata[i * cols + j] += ari * a[r * cols + j];
            }
        }
    }
    let scale = (0..cols).fold(T::zero(), |m, i| m.max(ata[i * cols + i]));
    if scale == T::zero() {
        return None;
    }
    // relative conditioning guard
    let scaled: Vec<T> = ata.iter().map(|&x| x / scale).collect();
    let l = cholesky(&scaled, cols).ok()?;
    let rhs: Vec<T> = atb.iter().map(|&x| x / scale).collect();
    let y = solve_lower(&l, cols, &rhs);
    Some(solve_lower_transpose(&l, cols, &y))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut d = T::one();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&r, &s| m[r * n + c].abs().partial_cmp(&m[s * n + c].abs()).unwrap())
            .unwrap();
        if m[piv * n + c] == T::zero() {
            return T::zero();
        }
        if piv != c {
            for k in 0..n {
                m.swap(piv * n + k, c * n + k);
            }
            d = -d;
        }
        let p = m[c * n + c];
        d *= p;
        for r in c + 1..n {
            let f = m[r * n + c] / p;
            for k in c..n {
                let v = m[c * n + k];
                m[r * n + k] -= f * v;
            }
        }
    }
    d
}
