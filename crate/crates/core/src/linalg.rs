//! Dense square solves for the small KKT systems of the reduced-set method.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n x n` and is destroyed; `b` is overwritten with `x`.
pub fn solve_in_place<S: Scalar>(a: &mut [S], b: &mut [S]) -> Result<()> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::shape(format!("matrix has {} entries, expected {}", a.len(), n * n)));
    }
    let scale = a.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * S::epsilon() * S::from_usize_lossy(n.max(1));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if !(a[pivot * n + col].abs() > tiny) {
            return Err(Error::Numerical(format!("singular system at column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor == S::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= factor * v;
            }
            let bc = b[col];
            b[row] -= factor * bc;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}
