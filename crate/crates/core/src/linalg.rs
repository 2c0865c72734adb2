//! Small dense/banded solvers: Thomas, cyclic Thomas, LU with partial
//! pivoting. Desk-scale sizes only, no external linear algebra stack.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves a tridiagonal system in place. `sub[0]` and `sup[n-1]` are unused.
/// Returns the solution in `rhs`.
pub fn solve_tridiag<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &mut [T]) -> Result<()> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    if diag[0] == T::zero() {
        return Err(Error::SingularJacobian);
    }
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        if denom == T::zero() {
            return Err(Error::SingularJacobian);
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    rhs[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = d[i] - c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Solves a cyclic tridiagonal system (corner entries `corner_lo` at
/// `(0, n-1)` and `corner_hi` at `(n-1, 0)`) by the Sherman-Morrison
/// correction of two Thomas solves.
pub fn solve_cyclic_tridiag<T: Scalar>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    corner_lo: T,
    corner_hi: T,
    rhs: &mut [T],
) -> Result<()> {
    let n = diag.len();
    assert!(n >= 3, "cyclic solve needs n >= 3");
    // Rank-one split A = A' + u v^T with u = (gamma, 0, .., corner_hi),
    // v = (1, 0, .., corner_lo / gamma).
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] = diag[0] - gamma;
    dmod[n - 1] = diag[n - 1] - corner_lo * corner_hi / gamma;

    let mut x = rhs.to_vec();
    solve_tridiag(sub, &dmod, sup, &mut x)?;

    let mut z = vec![T::zero(); n];
    z[0] = gamma;
    z[n - 1] = corner_hi;
    solve_tridiag(sub, &dmod, sup, &mut z)?;

    let factor = (x[0] + corner_lo * x[n - 1] / gamma)
        / (T::one() + z[0] + corner_lo * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] = x[i] - factor * z[i];
    }
    Ok(())
}

/// Solves `A x = b` for a dense row-major `n x n` matrix by LU with partial
/// pivoting. `a` is overwritten; the solution lands in `b`.
pub fn lu_solve<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> Result<()> {
    assert!(a.len() == n * n && b.len() == n);
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        // Pivot search.
        let mut best = col;
        let mut best_val = a[piv[col] * n + col].abs();
        for row in col + 1..n {
            let v = a[piv[row] * n + col].abs();
            if v > best_val {
                best = row;
                best_val = v;
            }
        }
        if best_val == T::zero() || !best_val.is_finite() {
            return Err(Error::SingularJacobian);
        }
        piv.swap(col, best);
        let prow = piv[col] * n;
        let pivot = a[prow + col];
        for row in col + 1..n {
            let r = piv[row] * n;
            let factor = a[r + col] / pivot;
            a[r + col] = factor;
            if factor != T::zero() {
                for k in col + 1..n {
                    let v = a[prow + k];
                    a[r + k] = a[r + k] - factor * v;
                }
            }
        }
    }
    // Forward substitution on the permuted rows.
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let r = piv[i] * n;
        let mut s = b[piv[i]];
        for k in 0..i {
            s = s - a[r + k] * y[k];
        }
        y[i] = s;
    }
    // Back substitution.
    for i in (0..n).rev() {
        let r = piv[i] * n;
        let mut s = y[i];
        for k in i + 1..n {
            s = s - a[r + k] * b[k];
        }
        b[i] = s / a[r + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiag_solves_poisson_row() {
        let n = 6;
        let sub = vec![-1.0f64; n];
        let diag = vec![2.5f64; n];
        let sup = vec![-1.0f64; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 2.5 * x_true[i]
                - if i > 0 { x_true[i - 1] } else { 0.0 }
                - if i + 1 < n { x_true[i + 1] } else { 0.0 };
        }
        solve_tridiag(&sub, &diag, &sup, &mut rhs).unwrap();
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cyclic_tridiag_round_trip() {
        let n = 8;
        let sub = vec![-0.4f64; n];
        let diag = vec![2.0f64; n];
        let sup = vec![-0.6f64; n];
        let (cl, ch) = (-0.6, -0.4);
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x_true[i]
                + sub[i] * x_true[(i + n - 1) % n]
                + sup[i] * x_true[(i + 1) % n];
            if i == 0 {
                rhs[i] += (cl - sub[i]) * x_true[n - 1];
            }
            if i == n - 1 {
                rhs[i] += (ch - sup[i]) * x_true[0];
            }
        }
        // Build rhs consistent with the cyclic matrix directly instead.
        for i in 0..n {
            let prev = x_true[(i + n - 1) % n];
            let next = x_true[(i + 1) % n];
            rhs[i] = diag[i] * x_true[i]
                + if i == 0 { cl * x_true[n - 1] } else { sub[i] * prev }
                + if i == n - 1 { ch * x_true[0] } else { sup[i] * next };
        }
        solve_cyclic_tridiag(&sub, &diag, &sup, cl, ch, &mut rhs).unwrap();
        for i in 0..n {
            assert!((rhs[i] - x_true[i]).abs() < 1e-11, "i = {i}: {} vs {}", rhs[i], x_true[i]);
        }
    }

    #[test]
    fn lu_solves_random_system() {
        let n = 12;
        let mut state = 0xabcdef12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a: Vec<f64> = (0..n * n).map(|_| next()).collect();
        for i in 0..n {
            a[i * n + i] += 3.0;
        }
        let x_true: Vec<f64> = (0..n).map(|_| next()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = (0..n).map(|j| a[i * n + j] * x_true[j]).sum();
        }
        lu_solve(&mut a, n, &mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let mut a = vec![1.0f64, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(matches!(lu_solve(&mut a, 2, &mut b), Err(Error::SingularJacobian)));
    }
}
