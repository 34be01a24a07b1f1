//! Cyclic Jacobi eigendecomposition for dense symmetric matrices.
//!
//! Rotation choice follows Golub & Van Loan §8.4. The sweep visits every
//! off-diagonal pair in row order and annihilates it; sweeps repeat until the
//! off-diagonal Frobenius norm drops below `tol_rel` times the Frobenius norm
//! of the input.

use super::frobenius_norm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

/// Output of [`jacobi_eigen`]: unsorted eigenvalues on the diagonal and, when
/// requested, the accumulated rotation matrix whose column `j` is the
/// eigenvector of `values[j]`.
pub struct JacobiResult<T> {
    pub values: Vec<T>,
    /// Row-major `n x n`; column `j` pairs with `values[j]`.
    pub vectors: Option<Vec<T>>,
    pub sweeps: usize,
    /// Final off-diagonal Frobenius norm.
    pub off_norm: T,
}

fn off_diagonal_norm<T: Scalar>(a: &[T], n: usize) -> T {
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a[i * n + j];
                acc = acc + v * v;
            }
        }
    }
    acc.sqrt()
}

/// Diagonalize the row-major symmetric matrix `a` (destroyed) of order `n`.
pub fn jacobi_eigen<T: Scalar>(
    a: &mut [T],
    n: usize,
    want_vectors: bool,
    tol_rel: T,
) -> Result<JacobiResult<T>> {
    assert_eq!(a.len(), n * n);
    let norm = frobenius_norm(a);
    let mut v = if want_vectors {
        let mut id = vec![T::zero(); n * n];
        for i in 0..n {
            id[i * n + i] = T::one();
        }
        Some(id)
    } else {
        None
    };
    if n <= 1 {
        return Ok(JacobiResult {
            values: a.iter().step_by(n.max(1)).copied().collect(),
            vectors: v,
            sweeps: 0,
            off_norm: T::zero(),
        });
    }
    let target = tol_rel * norm;
    let mut sweeps = 0;
    let mut off = off_diagonal_norm(a, n);
    while off > target && sweeps < MAX_SWEEPS {
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::cast(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (theta * theta + T::one()).sqrt();
                    if theta >= T::zero() {
                        T::one() / denom
                    } else {
                        -T::one() / denom
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    let new_p = c * aip - s * aiq;
                    let new_q = s * aip + c * aiq;
                    a[i * n + p] = new_p;
                    a[p * n + i] = new_p;
                    a[i * n + q] = new_q;
                    a[q * n + i] = new_q;
                }
                if let Some(vm) = v.as_mut() {
                    for i in 0..n {
                        let vip = vm[i * n + p];
                        let viq = vm[i * n + q];
                        vm[i * n + p] = c * vip - s * viq;
                        vm[i * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(a, n);
    }
    if off > target {
        return Err(Error::EigenNotConverged {
            converged: 0,
            requested: n,
            iterations: sweeps,
            worst_residual: off.as_f64(),
        });
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    Ok(JacobiResult {
        values,
        vectors: v,
        sweeps,
        off_norm: off,
    })
}
