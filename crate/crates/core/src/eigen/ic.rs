//! Zero-fill incomplete Cholesky preconditioner for the Dirichlet operator.
//!
//! The operator is a symmetric M-matrix (positive diagonal, nonpositive
//! off-diagonal, SPD), for which IC(0) cannot break down in exact
//! arithmetic; a round-off breakdown falls back to Jacobi scaling.

use super::twolevel::TwoLevel;
use crate::operator::DirichletOperator;
use crate::scalar::Scalar;

/// Coarse correction pays off once the box is large enough for IC(0) alone
/// to struggle with long-wavelength error.
const TWO_LEVEL_THRESHOLD: usize = 4096;

pub(crate) enum Precond<T: Scalar> {
    TwoLevel(Box<TwoLevel<T>>),
    Ic(IncompleteCholesky<T>),
    Diagonal(Vec<T>),
}

impl<T: Scalar> Precond<T> {
    pub fn build(op: &DirichletOperator<T>) -> Self {
        match IncompleteCholesky::factor(op) {
            Some(ic) => {
                if op.interior_count() >= TWO_LEVEL_THRESHOLD {
                    match TwoLevel::build(op, ic) {
                        Some(tl) => Precond::TwoLevel(Box::new(tl)),
                        None => match IncompleteCholesky::factor(op) {
                            Some(ic) => Precond::Ic(ic),
                            None => Self::diagonal(op),
                        },
                    }
                } else {
                    Precond::Ic(ic)
                }
            }
            None => Self::diagonal(op),
        }
    }

    fn diagonal(op: &DirichletOperator<T>) -> Self {
        Precond::Diagonal(
            (0..op.interior_count())
                .map(|i| T::one() / op.diagonal(i))
                .collect(),
        )
    }

    pub fn apply(&self, op: &DirichletOperator<T>, r: &[T], out: &mut [T], scratch: &mut [T]) {
        match self {
            Precond::TwoLevel(tl) => tl.apply(op, r, out),
            Precond::Ic(ic) => ic.apply(r, out, scratch),
            Precond::Diagonal(d) => {
                for i in 0..r.len() {
                    out[i] = r[i] * d[i];
                }
            }
        }
    }
}

/// L is stored without its diagonal; `diag` holds the Cholesky diagonal.
pub(crate) struct IncompleteCholesky<T> {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
    diag: Vec<T>,
    // Transpose of L for the backward sweep.
    t_row_start: Vec<usize>,
    t_cols: Vec<u32>,
    t_vals: Vec<T>,
}

impl<T: Scalar> IncompleteCholesky<T> {
    pub fn factor(op: &DirichletOperator<T>) -> Option<Self> {
        let n = op.interior_count();
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0usize);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<T> = Vec::new();
        let mut diag = vec![T::zero(); n];

        for i in 0..n {
            let (a_cols, a_vals) = op.row(i);
            // Sorted row: strictly-lower entries are the prefix before i.
            let lower_len = a_cols.partition_point(|&c| (c as usize) < i);
            let start_i = *row_start.last().unwrap();
            for idx in 0..lower_len {
                let j = a_cols[idx] as usize;
                // dot of built L rows i and j over columns < j
                let mut s = a_vals[idx];
                {
                    let (ri, rj) = (
                        start_i..cols.len(),
                        row_start[j]..row_start[j + 1],
                    );
                    let (mut p, mut q) = (ri.start, rj.start);
                    while p < ri.end && q < rj.end {
                        let (cp, cq) = (cols[p], cols[q]);
                        match cp.cmp(&cq) {
                            std::cmp::Ordering::Less => p += 1,
                            std::cmp::Ordering::Greater => q += 1,
                            std::cmp::Ordering::Equal => {
                                s = s - vals[p] * vals[q];
                                p += 1;
                                q += 1;
                            }
                        }
                    }
                }
                cols.push(j as u32);
                vals.push(s / diag[j]);
            }
            let mut d = a_vals[lower_len]; // diagonal of A
            debug_assert_eq!(a_cols[lower_len] as usize, i);
            for idx in start_i..cols.len() {
                d = d - vals[idx] * vals[idx];
            }
            if !(d > T::zero()) {
                return None;
            }
            diag[i] = d.sqrt();
            row_start.push(cols.len());
        }

        // Build the transpose (rows of L^T = columns of L).
        let nnz = cols.len();
        let mut t_row_start = vec![0usize; n + 1];
        for &c in &cols {
            t_row_start[c as usize + 1] += 1;
        }
        for i in 0..n {
            t_row_start[i + 1] += t_row_start[i];
        }
        let mut t_cols = vec![0u32; nnz];
        let mut t_vals = vec![T::zero(); nnz];
        let mut cursor = t_row_start.clone();
        for i in 0..n {
            for idx in row_start[i]..row_start[i + 1] {
                let c = cols[idx] as usize;
                t_cols[cursor[c]] = i as u32;
                t_vals[cursor[c]] = vals[idx];
                cursor[c] += 1;
            }
        }

        Some(Self {
            n,
            row_start,
            cols,
            vals,
            diag,
            t_row_start,
            t_cols,
            t_vals,
        })
    }

    /// out = (L L^T)^{-1} r via forward and backward substitution.
    pub fn apply(&self, r: &[T], out: &mut [T], z: &mut [T]) {
        let n = self.n;
        // Forward: L z = r (L has unit-free diagonal `diag`).
        for i in 0..n {
            let mut s = r[i];
            for idx in self.row_start[i]..self.row_start[i + 1] {
                s = s - self.vals[idx] * z[self.cols[idx] as usize];
            }
            z[i] = s / self.diag[i];
        }
        // Backward: L^T out = z; row i of L^T holds entries (i, j > i).
        for i in (0..n).rev() {
            let mut s = z[i];
            for idx in self.t_row_start[i]..self.t_row_start[i + 1] {
                s = s - self.t_vals[idx] * out[self.t_cols[idx] as usize];
            }
            out[i] = s / self.diag[i];
        }
    }
}
