//! Dense symmetric eigensolvers.
//!
//! Two deliberately independent routes live here:
//! * [`jacobi`] — cyclic Jacobi rotations, used as the validation oracle for
//!   the sparse eigensolver;
//! * [`tridiag`] — Householder reduction plus implicit-shift QL, used inside
//!   the sparse solver's Rayleigh–Ritz step and by the finite-difference
//!   reference spectrum.
//!
//! Keeping the oracle on a separate code path from the production solver is
//! what makes the cross-checks in the test suite meaningful.

pub mod jacobi;
pub mod tridiag;

use crate::scalar::Scalar;

/// Multiply a dense row-major `n x n` symmetric matrix by a vector.
pub fn dense_matvec<T: Scalar>(a: &[T], n: usize, x: &[T], y: &mut [T]) {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(y.len(), n);
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let mut acc = T::zero();
        for (aij, xj) in row.iter().zip(x.iter()) {
            acc = acc + *aij * *xj;
        }
        y[i] = acc;
    }
}

/// Frobenius norm of a dense row-major matrix.
pub fn frobenius_norm<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|v| *v * *v).sum::<T>().sqrt()
}
