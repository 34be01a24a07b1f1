//! Smallest eigenpairs of the Dirichlet operator.
//!
//! [`smallest_eigenpairs`] is the production path: a blocked inverse-free
//! Rayleigh-quotient minimization (LOBPCG) with an incomplete-Cholesky
//! preconditioner. [`dense_eigendecomposition`] is the independent validation
//! oracle: cyclic Jacobi on the densified operator. They share no solver
//! code.

mod ic;
mod lobpcg;
mod twolevel;

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg::jacobi::jacobi_eigen;
use crate::operator::DirichletOperator;
use crate::scalar::Scalar;

/// Default size cap for the dense oracle.
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Ascending eigenvalues with avsum-orthonormal interior eigenvectors and
/// per-pair residual certificates `||A v - lambda v|| / (lambda ||v||)`.
#[derive(Clone, Debug)]
pub struct EigenSet<T: Scalar> {
    pub eigenvalues: Vec<T>,
    /// Interior vectors normalized to unit avsum-L2 norm over the cluster.
    pub eigenvectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
}

impl<T: Scalar> EigenSet<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `{"eigenvalues": [...], "residuals": [...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eigenvalues": self.eigenvalues.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
            "residuals": self.residuals.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
        })
    }

    /// Eigenvectors in the flat binary value format, concatenated.
    pub fn write_eigenvectors<W: Write>(&self, w: &mut W) -> Result<()> {
        for v in &self.eigenvectors {
            geometry::write_values(v, w)?;
        }
        Ok(())
    }

    pub fn read_eigenvectors<R: Read>(r: &mut R, count: usize) -> Result<Vec<Vec<T>>> {
        (0..count).map(|_| geometry::read_values(r)).collect()
    }
}

/// Rescale an l2-normalized interior vector to unit avsum-L2 norm over the
/// cluster and make the entry of largest magnitude positive.
fn finalize_vector<T: Scalar>(v: &mut [T], cluster_len: usize) {
    let scale = T::cast((cluster_len as f64).sqrt());
    let mut lead = 0usize;
    let mut lead_abs = T::zero();
    for (i, x) in v.iter().enumerate() {
        if x.abs() > lead_abs {
            lead_abs = x.abs();
            lead = i;
        }
    }
    let sign = if v[lead] < T::zero() { -T::one() } else { T::one() };
    for x in v.iter_mut() {
        *x = *x * scale * sign;
    }
}

/// The `k` smallest eigenpairs by blocked Rayleigh-quotient minimization with
/// residual certificates. Deterministic: the starting block is derived from a
/// fixed constant seed XOR the operator's structural hash.
pub fn smallest_eigenpairs<T: Scalar>(
    op: &DirichletOperator<T>,
    k: usize,
    tol: T,
) -> Result<EigenSet<T>> {
    let n = op.interior_count();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k <= interior_count ({n}), got {k}"
        )));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let out = lobpcg::lobpcg(op, k, tol)?;
    log::debug!(
        "eigensolver converged {} pairs on n={} in {} iterations",
        k,
        n,
        out.iterations
    );
    let cluster_len = op.cluster().len();
    let mut eigenvectors = out.eigenvectors;
    for v in &mut eigenvectors {
        finalize_vector(v, cluster_len);
    }
    Ok(EigenSet {
        eigenvalues: out.eigenvalues,
        eigenvectors,
        residuals: out.residuals,
    })
}

/// Full spectrum by cyclic Jacobi on the densified operator; the validation
/// oracle for the sparse path.
pub fn dense_eigendecomposition<T: Scalar>(op: &DirichletOperator<T>) -> Result<EigenSet<T>> {
    dense_eigendecomposition_capped(op, DEFAULT_DENSE_CAP)
}

pub fn dense_eigendecomposition_capped<T: Scalar>(
    op: &DirichletOperator<T>,
    cap: usize,
) -> Result<EigenSet<T>> {
    let n = op.interior_count();
    if n > cap {
        return Err(Error::DenseCapExceeded { size: n, cap });
    }
    let mut dense = vec![T::zero(); n * n];
    for i in 0..n {
        let (cols, vals) = op.row(i);
        for (c, v) in cols.iter().zip(vals.iter()) {
            dense[i * n + *c as usize] = *v;
        }
    }
    let reference = dense.clone();
    // Converge well below the contractual 1e-12 * ||A|| so the oracle's own
    // error stays negligible in cross-solver comparisons.
    let tol_rel = T::cast(1e-14).max(T::epsilon() * T::cast(8.0));
    let jr = jacobi_eigen(&mut dense, n, true, tol_rel)?;
    let vmat = jr.vectors.expect("vectors requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| jr.values[a].partial_cmp(&jr.values[b]).unwrap());

    let cluster_len = op.cluster().len();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut av = vec![T::zero(); n];
    for &j in &order {
        let lambda = jr.values[j];
        let mut v: Vec<T> = (0..n).map(|i| vmat[i * n + j]).collect();
        // Columns of the rotation matrix are unit l2; residual first, on the
        // untouched dense copy.
        crate::linalg::dense_matvec(&reference, n, &v, &mut av);
        let mut r2 = T::zero();
        let mut v2 = T::zero();
        for i in 0..n {
            let d = av[i] - lambda * v[i];
            r2 = r2 + d * d;
            v2 = v2 + v[i] * v[i];
        }
        let residual = r2.sqrt() / (lambda.abs().max(T::min_positive_value()) * v2.sqrt());
        finalize_vector(&mut v, cluster_len);
        eigenvalues.push(lambda);
        eigenvectors.push(v);
        residuals.push(residual);
    }
    Ok(EigenSet {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}
