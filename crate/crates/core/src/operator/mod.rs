//! The Dirichlet-masked graph Laplacian on a percolation cluster, the
//! conjugate-gradient Poisson solver, and the normalized cluster norms.

mod solve;

pub use solve::{dual_norm, solve_dirichlet, solve_dirichlet_opts, CgOptions, Preconditioner};

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Cluster;
use crate::scalar::Scalar;

/// A real-valued function on cluster vertices. Dirichlet functions vanish on
/// the boundary layer.
#[derive(Clone, Debug)]
pub struct ClusterFunction<T: Scalar> {
    cluster: Arc<Cluster<T>>,
    values: Vec<T>,
    dirichlet: bool,
}

impl<T: Scalar> ClusterFunction<T> {
    /// Wrap per-vertex values; `dirichlet` is recorded when the boundary
    /// layer is identically zero.
    pub fn from_values(cluster: Arc<Cluster<T>>, values: Vec<T>) -> Self {
        assert_eq!(values.len(), cluster.len(), "one value per cluster vertex");
        let dirichlet = values
            .iter()
            .zip(cluster.interior_mask())
            .all(|(v, &int)| int || *v == T::zero());
        Self {
            cluster,
            values,
            dirichlet,
        }
    }

    /// Zero-extend an interior vector to the whole cluster.
    pub fn from_interior(op: &DirichletOperator<T>, interior: &[T]) -> Self {
        assert_eq!(interior.len(), op.interior_count());
        let cluster = op.cluster().clone();
        let mut values = vec![T::zero(); cluster.len()];
        for (k, &local) in op.interior_vertices().iter().enumerate() {
            values[local as usize] = interior[k];
        }
        Self {
            cluster,
            values,
            dirichlet: true,
        }
    }

    pub fn cluster(&self) -> &Arc<Cluster<T>> {
        &self.cluster
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    /// Average over cluster vertices: `(1/|cluster|) * sum`.
    pub fn avsum(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::cast(self.cluster.len() as f64)
    }

    /// avsum inner product with another function on the same cluster.
    pub fn avsum_dot(&self, other: &ClusterFunction<T>) -> T {
        assert!(Arc::ptr_eq(&self.cluster, &other.cluster));
        avsum_dot_slices(&self.values, &other.values, self.cluster.len())
    }
}

pub(crate) fn avsum_dot_slices<T: Scalar>(a: &[T], b: &[T], cluster_len: usize) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + *x * *y;
    }
    acc / T::cast(cluster_len as f64)
}

/// Normalized norms of a cluster function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterNorms<T> {
    /// `sqrt(avsum f^2)`.
    pub l2_avsum: T,
    /// `sqrt(avsum over ordered adjacent pairs of (f(x) - f(y))^2)`.
    pub h1_avsum: T,
}

/// Discrete L2/H1 norms with avsum normalization by cluster cardinality.
pub fn norms<T: Scalar>(f: &ClusterFunction<T>) -> ClusterNorms<T> {
    let cluster = f.cluster();
    let v = f.values();
    let n = T::cast(cluster.len() as f64);
    let mut sq = T::zero();
    for &x in v {
        sq = sq + x * x;
    }
    let mut edge_sq = T::zero();
    for x in 0..cluster.len() {
        let fx = v[x];
        for &y in cluster.neighbors(x) {
            let d = fx - v[y as usize];
            edge_sq = edge_sq + d * d;
        }
    }
    ClusterNorms {
        l2_avsum: (sq / n).sqrt(),
        h1_avsum: (edge_sq / n).sqrt(),
    }
}

/// Symmetric positive-definite form of the negative graph Laplacian
/// restricted to interior vertices: the diagonal holds the full cluster
/// degree, off-diagonal entries are -1 for interior neighbors, and boundary
/// neighbors are eliminated (zero Dirichlet data).
#[derive(Clone, Debug)]
pub struct DirichletOperator<T: Scalar> {
    cluster: Arc<Cluster<T>>,
    /// Interior index -> cluster-local vertex.
    interior_vertices: Vec<u32>,
    /// Cluster-local vertex -> interior index (u32::MAX on the boundary layer).
    interior_of_local: Vec<u32>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> DirichletOperator<T> {
    pub fn cluster(&self) -> &Arc<Cluster<T>> {
        &self.cluster
    }

    pub fn interior_count(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn interior_vertices(&self) -> &[u32] {
        &self.interior_vertices
    }

    /// Interior index of a cluster-local vertex, if interior.
    pub fn interior_index(&self, local: usize) -> Option<usize> {
        let k = self.interior_of_local[local];
        (k != u32::MAX).then_some(k as usize)
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let r = self.row_start[i]..self.row_start[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Diagonal entry of row `i` (equals the cluster degree of the vertex).
    pub fn diagonal(&self, i: usize) -> T {
        let (cols, vals) = self.row(i);
        let pos = cols.binary_search(&(i as u32)).expect("diagonal present");
        vals[pos]
    }

    /// y = A x. Deterministic for any thread count: rows are computed
    /// independently and each row's reduction is sequential.
    pub fn apply_into(&self, x: &[T], y: &mut [T]) {
        let n = self.interior_count();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        let do_row = |i: usize, yi: &mut T| {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (c, v) in cols.iter().zip(vals.iter()) {
                acc = acc + *v * x[*c as usize];
            }
            *yi = acc;
        };
        if n >= 1 << 15 {
            use rayon::prelude::*;
            y.par_iter_mut().enumerate().with_min_len(4096).for_each(|(i, yi)| do_row(i, yi));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                do_row(i, yi);
            }
        }
    }

    /// A x as a new vector; errors on a length mismatch.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.interior_count() {
            return Err(Error::DimensionMismatch {
                expected: self.interior_count(),
                got: x.len(),
            });
        }
        let mut y = vec![T::zero(); x.len()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// Right-hand side induced by prescribed values `g` on the boundary
    /// layer: `b(x) = sum over boundary neighbors y of x of g(y)`.
    pub fn boundary_rhs(&self, g: &[T]) -> Vec<T> {
        assert_eq!(g.len(), self.cluster.len());
        let mut b = vec![T::zero(); self.interior_count()];
        for (k, &local) in self.interior_vertices.iter().enumerate() {
            let mut acc = T::zero();
            for &nb in self.cluster.neighbors(local as usize) {
                if self.interior_of_local[nb as usize] == u32::MAX {
                    acc = acc + g[nb as usize];
                }
            }
            b[k] = acc;
        }
        b
    }

    /// Export nonzeros as sorted 0-based `row col value` lines.
    pub fn write_coo<W: Write>(&self, w: &mut W) -> Result<()> {
        for i in 0..self.interior_count() {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals.iter()) {
                writeln!(w, "{} {} {}", i, c, v)?;
            }
        }
        Ok(())
    }
}

/// Assemble the Dirichlet operator of a cluster.
pub fn assemble<T: Scalar>(cluster: Arc<Cluster<T>>) -> Result<DirichletOperator<T>> {
    let n_cluster = cluster.len();
    let interior_count = cluster.interior_count();
    if interior_count == 0 {
        return Err(Error::NoInterior);
    }
    if interior_count == n_cluster {
        return Err(Error::NoBoundaryLayer);
    }

    let mut interior_vertices = Vec::with_capacity(interior_count);
    let mut interior_of_local = vec![u32::MAX; n_cluster];
    for local in 0..n_cluster {
        if cluster.is_interior(local) {
            interior_of_local[local] = interior_vertices.len() as u32;
            interior_vertices.push(local as u32);
        }
    }

    let mut row_start = Vec::with_capacity(interior_count + 1);
    row_start.push(0usize);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for (k, &local) in interior_vertices.iter().enumerate() {
        let local = local as usize;
        let degree = cluster.degree(local);
        let mut placed_diag = false;
        for &nb in cluster.neighbors(local) {
            let nb_int = interior_of_local[nb as usize];
            if nb_int == u32::MAX {
                continue;
            }
            if !placed_diag && nb_int as usize > k {
                cols.push(k as u32);
                vals.push(T::cast(degree as f64));
                placed_diag = true;
            }
            cols.push(nb_int);
            vals.push(-T::one());
        }
        if !placed_diag {
            cols.push(k as u32);
            vals.push(T::cast(degree as f64));
        }
        row_start.push(cols.len());
    }

    Ok(DirichletOperator {
        cluster,
        interior_vertices,
        interior_of_local,
        row_start,
        cols,
        vals,
    })
}

/// Unmasked negative graph Laplacian over all cluster vertices (diagonal =
/// degree, off-diagonal -1 for every neighbor). Test harness for the
/// zero-row-sum and energy identities; the Dirichlet path never uses it.
pub fn assemble_unmasked<T: Scalar>(cluster: &Cluster<T>) -> (Vec<usize>, Vec<u32>, Vec<T>) {
    let n = cluster.len();
    let mut row_start = Vec::with_capacity(n + 1);
    row_start.push(0usize);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for v in 0..n {
        let mut placed_diag = false;
        for &nb in cluster.neighbors(v) {
            if !placed_diag && nb as usize > v {
                cols.push(v as u32);
                vals.push(T::cast(cluster.degree(v) as f64));
                placed_diag = true;
            }
            cols.push(nb);
            vals.push(-T::one());
        }
        if !placed_diag {
            cols.push(v as u32);
            vals.push(T::cast(cluster.degree(v) as f64));
        }
        row_start.push(cols.len());
    }
    (row_start, cols, vals)
}
