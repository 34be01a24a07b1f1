//! Effective-coefficient estimation from affine-data Dirichlet energies,
//! finite-volume first-order correctors, and two-scale edge residuals.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::continuum::EigenfunctionEvaluator;
use crate::error::{Error, Result};
use crate::geometry::{build_graph, extract_cluster, sample_poisson, well_connectedness, Cluster};
use crate::operator::{assemble, norms, solve_dirichlet, ClusterFunction, DirichletOperator};
use crate::scalar::Scalar;
use crate::seed::trial_seed;
use crate::stats::{mean, quantile_sorted, stderr_of_mean};

/// Homogenized-coefficient estimate along one direction, with trial
/// statistics.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientEstimate {
    pub direction: Vec<f64>,
    pub sigma_hat: f64,
    pub box_side: f64,
    pub alpha: f64,
    pub trials: usize,
    pub stderr: f64,
}

/// Solve the Dirichlet problem with boundary values prescribed by `data` on
/// the 2-layer and the graph-harmonic equation at interior vertices; the
/// returned function carries the boundary values.
pub fn solve_with_boundary_data<T: Scalar, F: Fn(&[T]) -> T>(
    op: &DirichletOperator<T>,
    data: F,
    tol: T,
) -> Result<ClusterFunction<T>> {
    let cluster = op.cluster();
    let mut values: Vec<T> = (0..cluster.len())
        .map(|v| {
            if cluster.is_interior(v) {
                T::zero()
            } else {
                data(cluster.position(v))
            }
        })
        .collect();
    let rhs = op.boundary_rhs(&values);
    let interior = solve_dirichlet(op, &rhs, tol)?;
    for (k, &local) in op.interior_vertices().iter().enumerate() {
        values[local as usize] = interior[k];
    }
    Ok(ClusterFunction::from_values(cluster.clone(), values))
}

/// Per-vertex Dirichlet energy of a cluster function: half the ordered-pair
/// edge sum divided by the cluster cardinality.
pub fn dirichlet_energy_per_vertex<T: Scalar>(u: &ClusterFunction<T>) -> T {
    let h1 = norms(u).h1_avsum;
    h1 * h1 / T::cast(2.0)
}

fn unit_direction<T: Scalar>(direction: &[T]) -> Result<Vec<T>> {
    let norm: T = direction.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if !(norm > T::zero()) || ((norm - T::one()).abs() > T::cast(1e-9)) {
        return Err(Error::InvalidParameter("direction must be a unit vector".into()));
    }
    Ok(direction.to_vec())
}

/// One-trial energy estimate on an already-built operator.
fn affine_energy<T: Scalar>(op: &DirichletOperator<T>, direction: &[T], tol: T) -> Result<T> {
    let u = solve_with_boundary_data(
        op,
        |x| {
            let mut acc = T::zero();
            for (xi, ei) in x.iter().zip(direction.iter()) {
                acc = acc + *xi * *ei;
            }
            acc
        },
        tol,
    )?;
    Ok(dirichlet_energy_per_vertex(&u))
}

/// Variational estimate of the homogenized coefficient: for each trial,
/// sample a cloud, solve the Dirichlet problem with affine data along
/// `direction`, and average the per-vertex Dirichlet energy of the solution.
pub fn estimate_sigma<T: Scalar>(
    dim: usize,
    alpha: T,
    box_side: T,
    direction: &[T],
    trials: usize,
    seed: u64,
    tol: T,
) -> Result<CoefficientEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let direction = unit_direction(direction)?;
    let energies: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let seed_t = trial_seed(seed, 0, t as u64);
            let cloud = sample_poisson(dim, box_side, alpha, seed_t)?;
            let graph = Arc::new(build_graph(cloud));
            let wc = well_connectedness(graph.as_ref());
            if !wc.passes {
                log::warn!(
                    "well-connectedness failed on trial {t} (ratio {:.3}, max dist {:.3})",
                    wc.point_count_ratio,
                    wc.max_dist_to_cluster
                );
            }
            let cluster = Arc::new(extract_cluster(graph)?);
            let op = assemble(cluster)?;
            Ok(affine_energy(&op, &direction, tol)?.as_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientEstimate {
        direction: direction.iter().map(|v| v.as_f64()).collect(),
        sigma_hat: mean(&energies),
        box_side: box_side.as_f64(),
        alpha: alpha.as_f64(),
        trials,
        stderr: stderr_of_mean(&energies),
    })
}

/// Finite-volume first-order corrector along a direction: the deviation of
/// the affine-data harmonic extension from the affine function, gauged to
/// zero cluster mean.
#[derive(Clone, Debug)]
pub struct CorrectorField<T: Scalar> {
    cluster: Arc<Cluster<T>>,
    direction: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> CorrectorField<T> {
    pub fn cluster(&self) -> &Arc<Cluster<T>> {
        &self.cluster
    }

    pub fn direction(&self) -> &[T] {
        &self.direction
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn as_function(&self) -> ClusterFunction<T> {
        ClusterFunction::from_values(self.cluster.clone(), self.values.clone())
    }
}

/// Approximate the corrector on the cluster's own box: solve the affine
/// Dirichlet problem, subtract the affine function, and re-gauge to zero
/// avsum.
pub fn approximate_corrector<T: Scalar>(
    op: &DirichletOperator<T>,
    direction: &[T],
    tol: T,
) -> Result<CorrectorField<T>> {
    let direction = unit_direction(direction)?;
    let cluster = op.cluster().clone();
    let u = solve_with_boundary_data(
        op,
        |x| {
            let mut acc = T::zero();
            for (xi, ei) in x.iter().zip(direction.iter()) {
                acc = acc + *xi * *ei;
            }
            acc
        },
        tol,
    )?;
    let mut values: Vec<T> = (0..cluster.len())
        .map(|v| {
            let mut affine = T::zero();
            for (xi, ei) in cluster.position(v).iter().zip(direction.iter()) {
                affine = affine + *xi * *ei;
            }
            u.values()[v] - affine
        })
        .collect();
    let gauge: T = values.iter().copied().sum::<T>() / T::cast(cluster.len() as f64);
    for v in values.iter_mut() {
        *v = *v - gauge;
    }
    Ok(CorrectorField {
        cluster,
        direction,
        values,
    })
}

/// Quantiles of the two-scale edge residuals over bulk interior edges.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoScaleResidual {
    pub edge_residual_median: f64,
    pub edge_residual_p95: f64,
    pub edge_count: usize,
}

/// Compare discrete eigenvector increments against the two-scale ansatz
/// built from the continuum eigenfunction and the correctors, over edges
/// whose endpoints are interior and within `box_side / 4` of the domain
/// center.
pub fn two_scale_residual<T: Scalar>(
    eigvec: &ClusterFunction<T>,
    ev: &EigenfunctionEvaluator<T>,
    correctors: &[CorrectorField<T>],
    m: u32,
) -> Result<TwoScaleResidual> {
    let cluster = eigvec.cluster();
    let dim = cluster.dim();
    if correctors.len() != dim
        || correctors.iter().any(|c| !Arc::ptr_eq(c.cluster(), cluster))
    {
        return Err(Error::MissingCorrectors);
    }

    // Ansatz value per cluster vertex.
    let n = cluster.len();
    let mut ansatz = Vec::with_capacity(n);
    for v in 0..n {
        let e = ev.evaluate(cluster.position(v), m)?;
        let mut val = e.value;
        for a in 0..dim {
            val = val + e.gradient[a] * correctors[a].values()[v];
        }
        ansatz.push(val);
    }

    let side = cluster.box_side().as_f64();
    let radius_sq = (side / 4.0) * (side / 4.0);
    let in_bulk = |v: usize| -> bool {
        let p = cluster.position(v);
        let mut d2 = 0.0;
        for &x in p.iter() {
            let c = x.as_f64() - side / 2.0;
            d2 += c * c;
        }
        d2 <= radius_sq
    };

    let phi = eigvec.values();
    let mut residuals: Vec<f64> = Vec::new();
    for x in 0..n {
        if !cluster.is_interior(x) || !in_bulk(x) {
            continue;
        }
        for &y in cluster.neighbors(x) {
            let y = y as usize;
            if y <= x || !cluster.is_interior(y) || !in_bulk(y) {
                continue;
            }
            let d_phi = phi[x] - phi[y];
            let d_ansatz = ansatz[x] - ansatz[y];
            residuals.push((d_phi - d_ansatz).abs().as_f64());
        }
    }
    if residuals.is_empty() {
        return Ok(TwoScaleResidual {
            edge_residual_median: 0.0,
            edge_residual_p95: 0.0,
            edge_count: 0,
        });
    }
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(TwoScaleResidual {
        edge_residual_median: quantile_sorted(&residuals, 0.5),
        edge_residual_p95: quantile_sorted(&residuals, 0.95),
        edge_count: residuals.len(),
    })
}
