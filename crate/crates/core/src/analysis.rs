//! Pairing of discrete and continuum eigenpairs, error functionals,
//! Monte-Carlo concentration checks, and log-scale rate fitting.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::continuum::{
    psi_variance_quadrature, spectral_gap, ContinuumSpectrum, EigenfunctionEvaluator,
};
use crate::eigen::EigenSet;
use crate::error::{Error, Result};
use crate::geometry::{build_graph, extract_cluster, sample_poisson, Cluster};
use crate::operator::{dual_norm, ClusterFunction, DirichletOperator};
use crate::scalar::Scalar;
use crate::seed::trial_seed;
use crate::stats::quantile_sorted;

/// Default bulk margin for sup-norm errors: vertices within a quarter side
/// of the boundary are excluded.
pub const DEFAULT_BULK_MARGIN: f64 = 0.25;

/// Per-(m, k, trial) error record.
#[derive(Clone, Debug, Serialize)]
pub struct PairError {
    pub m: u32,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    /// `3^{2m} * lambda_{m,k}`.
    pub lambda_scaled: f64,
    pub lambda_cont: f64,
    pub rel_eig_err: f64,
    pub gap: f64,
    /// Volume-normalized eigenvector error (raw, not divided by lambda).
    pub l2_vec_err: f64,
    pub linf_vec_err_bulk: f64,
    /// The avsum inner product between the restricted continuum and raw
    /// discrete eigenvectors, before rescaling.
    pub normalization_inner: f64,
}

/// Restrict the dilated continuum eigenfunction to the cluster vertices.
pub fn restrict_continuum<T: Scalar>(
    ev: &EigenfunctionEvaluator<T>,
    cluster: &Arc<Cluster<T>>,
    m: u32,
) -> ClusterFunction<T> {
    let values: Vec<T> = (0..cluster.len())
        .map(|v| ev.value_at(cluster.position(v), m))
        .collect();
    ClusterFunction::from_values(cluster.clone(), values)
}

/// Discrete eigenvector aligned to its continuum partner.
pub struct AlignedPair<T: Scalar> {
    /// Discrete eigenvector, sign-fixed and rescaled so the avsum inner
    /// product with the restricted continuum eigenfunction equals one.
    pub phi_m: ClusterFunction<T>,
    /// Restricted continuum eigenfunction.
    pub phi_0: ClusterFunction<T>,
    /// Inner product before rescaling.
    pub inner: T,
}

fn avsum_inner_interior<T: Scalar>(
    phi0: &ClusterFunction<T>,
    op: &DirichletOperator<T>,
    interior: &[T],
) -> T {
    let mut acc = T::zero();
    for (j, &local) in op.interior_vertices().iter().enumerate() {
        acc = acc + phi0.values()[local as usize] * interior[j];
    }
    acc / T::cast(op.cluster().len() as f64)
}

/// Align the `k`-th discrete eigenvector with the continuum mode: pick the
/// best least-squares combination within the multiplicity class when the
/// continuum eigenvalue is degenerate, fix the sign, and rescale so the
/// avsum pairing equals one.
pub fn align_and_normalize<T: Scalar>(
    eig: &EigenSet<T>,
    k: usize,
    spec: &ContinuumSpectrum<T>,
    op: &DirichletOperator<T>,
    m: u32,
) -> Result<AlignedPair<T>> {
    if k == 0 || k > spec.len() {
        return Err(Error::InvalidParameter(format!("k={k} outside the continuum spectrum")));
    }
    let ev = EigenfunctionEvaluator::new(spec, k);
    let phi_0 = restrict_continuum(&ev, op.cluster(), m);

    let class = spec.class_range(k);
    let (lo, hi) = (*class.start(), *class.end());
    if hi > eig.len() {
        return Err(Error::InvalidParameter(format!(
            "alignment at k={k} needs discrete eigenpairs through {hi}, have {}",
            eig.len()
        )));
    }

    let n = op.interior_count();
    let mut combined = vec![T::zero(); n];
    if lo == hi {
        combined.copy_from_slice(&eig.eigenvectors[k - 1]);
    } else {
        // Least-squares projection of the continuum mode onto the discrete
        // eigenspace of the class (the eigenvectors are avsum-orthonormal).
        for j in lo..=hi {
            let beta = avsum_inner_interior(&phi_0, op, &eig.eigenvectors[j - 1]);
            for (c, e) in combined.iter_mut().zip(eig.eigenvectors[j - 1].iter()) {
                *c = *c + beta * *e;
            }
        }
    }
    let inner = avsum_inner_interior(&phi_0, op, &combined);
    if inner.abs() < T::cast(0.1) {
        return Err(Error::DegenerateAlignment {
            k,
            inner: inner.as_f64(),
        });
    }
    let scale = T::one() / inner;
    for c in combined.iter_mut() {
        *c = *c * scale;
    }
    Ok(AlignedPair {
        phi_m: ClusterFunction::from_interior(op, &combined),
        phi_0,
        inner,
    })
}

/// All error functionals for one aligned pair.
#[allow(clippy::too_many_arguments)]
pub fn pair_errors<T: Scalar>(
    aligned: &AlignedPair<T>,
    eig: &EigenSet<T>,
    spec: &ContinuumSpectrum<T>,
    m: u32,
    k: usize,
    trial: usize,
    seed: u64,
    bulk_margin: f64,
) -> Result<PairError> {
    let cluster = aligned.phi_m.cluster();
    let dim = cluster.dim();
    let lambda_cont = spec.lambda(k).as_f64();
    let lambda_scaled = 9f64.powi(m as i32) * eig.eigenvalues[k - 1].as_f64();
    let rel_eig_err = (lambda_scaled - lambda_cont).abs() / lambda_cont;
    let gap = spectral_gap(spec, k)?.as_f64();

    let volume = 3f64.powi(m as i32 * dim as i32);
    let mut sum_sq = 0.0f64;
    let mut linf = 0.0f64;
    let margin = T::cast(bulk_margin * 3f64.powi(m as i32));
    for v in 0..cluster.len() {
        let d = (aligned.phi_m.values()[v] - aligned.phi_0.values()[v]).as_f64();
        sum_sq += d * d;
        if cluster.dist_to_boundary(v) >= margin {
            linf = linf.max(d.abs());
        }
    }

    Ok(PairError {
        m,
        k,
        trial,
        seed,
        lambda_scaled,
        lambda_cont,
        rel_eig_err,
        gap,
        l2_vec_err: (sum_sq / volume).sqrt(),
        linf_vec_err_bulk: linf,
        normalization_inner: aligned.inner.as_f64(),
    })
}

/// Empirical concentration record for the Monte-Carlo sum of the squared
/// eigenfunction over cluster vertices.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRecord {
    pub m: u32,
    pub k: usize,
    pub trials: usize,
    pub deviations: Vec<f64>,
    pub threshold: f64,
    pub empirical_exceed_rate: f64,
    /// `2 exp(-|cluster| t^2 / (2 sigma^2))` with plug-in quadrature
    /// variance and the smallest observed cluster.
    pub bernstein_bound: f64,
}

impl ConcentrationRecord {
    pub fn median_deviation(&self) -> f64 {
        let mut d = self.deviations.clone();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        quantile_sorted(&d, 0.5)
    }
}

/// Deviations of `avsum phi^2` from 1 over fresh clouds, with the
/// Bernstein-type tail bound at the dimension-dependent threshold.
pub fn concentration_check<T: Scalar>(
    spec: &ContinuumSpectrum<T>,
    k: usize,
    dim: usize,
    alpha: T,
    m: u32,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationRecord> {
    let ev = EigenfunctionEvaluator::new(spec, k);
    let record = concentration_check_with(
        dim,
        alpha,
        m,
        trials,
        seed,
        &|cluster: &Cluster<T>, v: usize| {
            let x = ev.value_at(cluster.position(v), m);
            (x * x).as_f64()
        },
    )?;
    let lambda = spec.lambda(k).as_f64();
    let mut threshold = 3f64.powi(-(m as i32)) * lambda.sqrt();
    if dim == 2 {
        threshold *= (m as f64).sqrt();
    }
    let sigma_sq = psi_variance_quadrature(dim, spec.entry(k).multi_index.as_slice());
    let exceed = record
        .deviations
        .iter()
        .filter(|d| **d >= threshold)
        .count() as f64
        / trials as f64;
    let min_cluster = record.min_cluster_size as f64;
    Ok(ConcentrationRecord {
        m,
        k,
        trials,
        deviations: record.deviations,
        threshold,
        empirical_exceed_rate: exceed,
        bernstein_bound: (2.0 * (-min_cluster * threshold * threshold / (2.0 * sigma_sq)).exp())
            .min(1.0),
    })
}

pub(crate) struct RawDeviations {
    pub deviations: Vec<f64>,
    pub min_cluster_size: usize,
}

/// Test hook: the averaged integrand is injectable (the production path
/// averages the squared eigenfunction).
pub(crate) fn concentration_check_with<T: Scalar>(
    dim: usize,
    alpha: T,
    m: u32,
    trials: usize,
    seed: u64,
    vertex_value: &(dyn Fn(&Cluster<T>, usize) -> f64 + Sync),
) -> Result<RawDeviations> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let side = T::cast(3f64.powi(m as i32));
    let per_trial: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, usize)> {
            let cloud = sample_poisson(dim, side, alpha, trial_seed(seed, m as u64, t as u64))?;
            let graph = Arc::new(build_graph(cloud));
            let cluster = extract_cluster(graph)?;
            let mut acc = 0.0f64;
            for v in 0..cluster.len() {
                acc += vertex_value(&cluster, v);
            }
            Ok(((acc / cluster.len() as f64 - 1.0).abs(), cluster.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RawDeviations {
        deviations: per_trial.iter().map(|p| p.0).collect(),
        min_cluster_size: per_trial.iter().map(|p| p.1).min().unwrap(),
    })
}

/// Both sides of the Monte-Carlo duality comparison for an eigenfunction
/// datum: the deviation of the discrete pairing from the continuum integral
/// (closed form via the eigenvalue relation) against the discrete dual norm.
#[derive(Clone, Copy, Debug)]
pub struct Mc2Outcome {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn mc2_check<T: Scalar>(
    op: &DirichletOperator<T>,
    spec: &ContinuumSpectrum<T>,
    k: usize,
    m: u32,
    tol: T,
) -> Result<Mc2Outcome> {
    let ev = EigenfunctionEvaluator::new(spec, k);
    let cluster = op.cluster();
    let phi = restrict_continuum(&ev, cluster, m);
    let lambda = spec.lambda(k).as_f64();
    let dilation_sq = 9f64.powi(m as i32);

    // u0 = T0(phi) = 3^{2m} / lambda * phi, so the continuum integral of
    // u0 * phi over the box is 3^{2m} / lambda exactly, and the discrete
    // pairing is the same factor times avsum phi^2.
    let mut avsum_sq = 0.0f64;
    for &v in phi.values() {
        avsum_sq += (v * v).as_f64();
    }
    avsum_sq /= cluster.len() as f64;
    let lhs = (dilation_sq / lambda) * (avsum_sq - 1.0).abs();

    let f_interior: Vec<T> = op
        .interior_vertices()
        .iter()
        .map(|&local| phi.values()[local as usize])
        .collect();
    let rhs = dual_norm(op, &f_interior, tol)?.as_f64();
    Ok(Mc2Outcome { lhs, rhs })
}

/// Rate-law model fitted in log scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `log(err)` against `-m log 3`.
    Plain,
    /// Errors divided by `sqrt(m)` first.
    SqrtMCorrected,
}

/// Least-squares fit of a rate law; slope 1 corresponds to an error
/// proportional to `3^{-m}`.
#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub k: usize,
    pub model: RateModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(u32, f64)>,
}

pub fn fit_rate(k: usize, points: &[(u32, f64)], model: RateModel) -> Result<RateFit> {
    let mut distinct: Vec<u32> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(distinct.len()));
    }
    let ln3 = 3f64.ln();
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(m, err) in points {
        if !(err > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate fit needs positive errors, got {err} at m={m}"
            )));
        }
        let corrected = match model {
            RateModel::Plain => err,
            RateModel::SqrtMCorrected => err / (m as f64).sqrt(),
        };
        xs.push(-(m as f64) * ln3);
        ys.push(corrected.ln());
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::DegenerateFit(distinct.len()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        k,
        model,
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
