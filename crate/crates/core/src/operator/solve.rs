//! Conjugate-gradient solves against the Dirichlet operator and the duality
//! norm built on them.

use super::{avsum_dot_slices, DirichletOperator};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Preconditioner choice for the CG solve. The operator is well conditioned
/// at supercritical densities, so the default is none.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preconditioner {
    #[default]
    None,
    /// Jacobi scaling by the inverse diagonal.
    Diagonal,
}

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Relative residual target `||A u - f|| / ||f||`.
    pub tol: f64,
    /// Defaults to `10 * interior_count` when `None`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_iterations: None,
            preconditioner: Preconditioner::None,
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + *x * *y;
    }
    acc
}

fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solve `A u = f` by conjugate gradients to a relative residual `tol`.
pub fn solve_dirichlet<T: Scalar>(op: &DirichletOperator<T>, f: &[T], tol: T) -> Result<Vec<T>> {
    solve_dirichlet_opts(op, f, CgOptions::with_tol(tol.as_f64()))
}

pub fn solve_dirichlet_opts<T: Scalar>(
    op: &DirichletOperator<T>,
    f: &[T],
    opts: CgOptions,
) -> Result<Vec<T>> {
    let n = op.interior_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    let tol = T::cast(opts.tol);
    let f_norm = norm2(f);
    if f_norm == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let max_iterations = opts.max_iterations.unwrap_or(10 * n.max(1));

    let inv_diag: Option<Vec<T>> = match opts.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Diagonal => Some((0..n).map(|i| T::one() / op.diagonal(i)).collect()),
    };
    let precondition = |r: &[T], z: &mut Vec<T>| match &inv_diag {
        None => z.copy_from_slice(r),
        Some(d) => {
            for i in 0..r.len() {
                z[i] = r[i] * d[i];
            }
        }
    };

    let mut u = vec![T::zero(); n];
    let mut r = f.to_vec();
    let mut z = vec![T::zero(); n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let target = tol * f_norm;

    let mut res_norm = norm2(&r);
    for _iter in 0..max_iterations {
        if res_norm <= target {
            return Ok(u);
        }
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            // Operator SPD by construction; a non-positive curvature means
            // breakdown to round-off.
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            u[i] = u[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res_norm = norm2(&r);
    }
    if res_norm <= target {
        return Ok(u);
    }
    Err(Error::SolverDiverged {
        residual: (res_norm / f_norm).as_f64(),
        iterations: max_iterations,
        tol: opts.tol,
    })
}

/// Duality norm of an interior datum `f`:
///
/// `sup over Dirichlet g of (avsum f g) / ||g||_H1 = sqrt(avsum f w)` with
/// `w = A^{-1} f / 2`; the factor 2 converts the ordered-pair H1 sum to the
/// quadratic form of `A`.
pub fn dual_norm<T: Scalar>(op: &DirichletOperator<T>, f: &[T], tol: T) -> Result<T> {
    let n = op.interior_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    if f.iter().all(|v| *v == T::zero()) {
        return Ok(T::zero());
    }
    let w = solve_dirichlet(op, f, tol)?;
    let half = avsum_dot_slices(f, &w, op.cluster().len()) / T::cast(2.0);
    // Negative values only arise from round-off on nearly singular data.
    Ok(half.max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_graph, extract_cluster, PointCloud};
    use crate::operator::assemble;
    use std::sync::Arc;

    fn star_op() -> DirichletOperator<f64> {
        let pts = [2.5, 2.5, 1.9, 2.5, 2.5, 1.9, 3.2, 1.8];
        let graph = Arc::new(build_graph(PointCloud::from_parts(2, 5.0, 1.0, 0, pts.to_vec())));
        assemble(Arc::new(extract_cluster(graph).unwrap())).unwrap()
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let op = star_op();
        let u = solve_dirichlet(&op, &[0.0], 1e-10).unwrap();
        assert_eq!(u, vec![0.0]);
    }

    #[test]
    fn star_solution_is_exact() {
        let op = star_op();
        let u = solve_dirichlet(&op, &[6.0], 1e-12).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exhausted_iteration_budget_reports_nonconvergence() {
        let op = star_op();
        let err = solve_dirichlet_opts(
            &op,
            &[6.0],
            CgOptions {
                tol: 1e-30,
                max_iterations: Some(0),
                preconditioner: Preconditioner::None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, crate::error::Error::SolverDiverged { .. }));
    }

    #[test]
    fn diagonal_preconditioner_reaches_the_same_solution() {
        let op = star_op();
        let u = solve_dirichlet_opts(
            &op,
            &[6.0],
            CgOptions {
                tol: 1e-12,
                max_iterations: None,
                preconditioner: Preconditioner::Diagonal,
            },
        )
        .unwrap();
        assert!((u[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dual_norm_of_zero_is_zero_and_star_value_matches_hand_computation() {
        let op = star_op();
        assert_eq!(dual_norm(&op, &[0.0], 1e-10).unwrap(), 0.0);
        // f = [1] on the 1x1 star with cluster size 4:
        //   w_raw = 1/3, value = sqrt((1/4) * 1 * (1/3) / 2) = 1/(2 sqrt 6).
        let v = dual_norm(&op, &[1.0], 1e-12).unwrap();
        let expect = 1.0 / (2.0 * 6.0_f64.sqrt());
        assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
        // Sup form on the 1-dimensional space: any g gives the same ratio.
        let g = 0.7;
        let avsum_fg = (1.0 * g) / 4.0;
        let h1 = ((2.0 * 3.0 * g * g) / 4.0_f64).sqrt();
        assert!((avsum_fg / h1 - expect).abs() < 1e-12);
    }
}
