//! Experiment drivers behind the CLI subcommands. Every output is a pure
//! function of the configuration: per-trial seeds are split from the master
//! seed, parallel trials are collected in index order, and files are written
//! atomically.

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use spl_core::analysis::{
    align_and_normalize, concentration_check, fit_rate, pair_errors, ConcentrationRecord,
    PairError, RateFit, RateModel,
};
use spl_core::continuum::{admissible, continuum_spectrum, ContinuumSpectrum};
use spl_core::eigen::smallest_eigenpairs;
use spl_core::geometry::{
    build_graph, extract_cluster, percolation_probe, sample_poisson, well_connectedness,
};
use spl_core::homogenize::{estimate_sigma, CoefficientEstimate};
use spl_core::operator::assemble;
use spl_core::seed::{mix64, trial_seed};
use spl_core::stats::{median, quantile_sorted};

use crate::config::{ExperimentConfig, OutputFormat, SigmaMode, SigmaName};
use crate::output::{fmt_f64, write_atomic, Csv};
use crate::svg::rate_plot;
use crate::CliError;

/// Exact column order of the convergence CSV.
pub const CONVERGE_CSV_HEADER: &str = "dim,alpha,m,k,trial,seed,n_points,n_cluster,n_interior,lambda_scaled,lambda_cont,rel_eig_err,gap,l2_vec_err,linf_vec_err_bulk,normalization_inner,sigma_hat";

/// Tag decoupling the coefficient-estimation seed stream from the sweep
/// trials.
const SIGMA_STREAM_TAG: u64 = 0x5147_4D41_0000_0001;

fn box_side_of(m: u32) -> f64 {
    3f64.powi(m as i32)
}

fn unit_axis(dim: usize, axis: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[axis] = 1.0;
    e
}

/// The homogenized coefficient used by the continuum reference, either fixed
/// by the config or estimated on the largest requested box.
pub fn resolve_sigma(
    cfg: &ExperimentConfig,
) -> Result<(f64, Option<CoefficientEstimate>), CliError> {
    match cfg.sigma_mode {
        SigmaMode::Fixed { fixed } => Ok((fixed, None)),
        SigmaMode::Named(SigmaName::Estimate) => {
            let m_max = *cfg.m_list.last().expect("validated nonempty");
            let est = estimate_sigma::<f64>(
                cfg.dim,
                cfg.alpha,
                box_side_of(m_max),
                &unit_axis(cfg.dim, 0),
                cfg.trials,
                mix64(cfg.master_seed ^ SIGMA_STREAM_TAG),
                cfg.tol_solver,
            )?;
            Ok((est.sigma_hat, Some(est)))
        }
    }
}

struct TrialOutput {
    n_points: usize,
    n_cluster: usize,
    n_interior: usize,
    records: Vec<PairError>,
    failures: usize,
}

fn run_trial(
    cfg: &ExperimentConfig,
    spec: &ContinuumSpectrum<f64>,
    m: u32,
    k_adm: usize,
    trial: usize,
) -> Result<TrialOutput, String> {
    let seed = trial_seed(cfg.master_seed, m as u64, trial as u64);
    let err = |stage: &str, e: &dyn std::fmt::Display| format!("m={m} trial={trial}: {stage}: {e}");
    let cloud = sample_poisson::<f64>(cfg.dim, box_side_of(m), cfg.alpha, seed)
        .map_err(|e| err("sample", &e))?;
    let n_points = cloud.len();
    let graph = Arc::new(build_graph(cloud));
    let wc = well_connectedness(graph.as_ref());
    if !wc.passes {
        log::debug!(
            "well-connectedness diagnostics failed at m={m} trial={trial} (ratio {:.3}, max dist {:.3})",
            wc.point_count_ratio,
            wc.max_dist_to_cluster
        );
    }
    let cluster = Arc::new(extract_cluster(graph).map_err(|e| err("cluster", &e))?);
    let n_cluster = cluster.len();
    let op = assemble(cluster).map_err(|e| err("assemble", &e))?;
    let n_interior = op.interior_count();

    let wanted = *spec.class_range(k_adm).end();
    let k_solve = wanted.min(n_interior);
    let eig = smallest_eigenpairs(&op, k_solve, cfg.tol_eig).map_err(|e| err("eigensolve", &e))?;

    let mut records = Vec::new();
    let mut failures = 0usize;
    for k in 1..=k_adm {
        if *spec.class_range(k).end() > eig.len() {
            log::warn!("m={m} trial={trial} k={k}: class extends past computed eigenpairs, skipped");
            failures += 1;
            continue;
        }
        match align_and_normalize(&eig, k, spec, &op, m)
            .and_then(|al| pair_errors(&al, &eig, spec, m, k, trial, seed, cfg.bulk_margin))
        {
            Ok(pe) => records.push(pe),
            Err(e) => {
                log::warn!("m={m} trial={trial} k={k}: {e}");
                failures += 1;
            }
        }
    }
    Ok(TrialOutput {
        n_points,
        n_cluster,
        n_interior,
        records,
        failures,
    })
}

/// Full record with sample context, serialized into CSV rows and the JSON
/// report.
fn record_json(cfg: &ExperimentConfig, out: &TrialOutput, pe: &PairError, sigma: f64) -> serde_json::Value {
    json!({
        "dim": cfg.dim,
        "alpha": cfg.alpha,
        "m": pe.m,
        "k": pe.k,
        "trial": pe.trial,
        "seed": pe.seed,
        "n_points": out.n_points,
        "n_cluster": out.n_cluster,
        "n_interior": out.n_interior,
        "lambda_scaled": pe.lambda_scaled,
        "lambda_cont": pe.lambda_cont,
        "rel_eig_err": pe.rel_eig_err,
        "abs_eig_err": pe.rel_eig_err * pe.lambda_cont,
        "gap": pe.gap,
        "l2_vec_err": pe.l2_vec_err,
        "l2_vec_err_paper": pe.l2_vec_err / pe.lambda_cont,
        // Cluster-cardinality normalization differs from the Lebesgue-volume
        // one by sqrt(|U_m| / |cluster|), roughly 1/sqrt(alpha).
        "l2_vec_err_avsum": pe.l2_vec_err
            * (3f64.powi(pe.m as i32 * cfg.dim as i32) / out.n_cluster as f64).sqrt(),
        "linf_vec_err_bulk": pe.linf_vec_err_bulk,
        "normalization_inner": pe.normalization_inner,
        "sigma_hat": sigma,
    })
}

fn csv_row(cfg: &ExperimentConfig, out: &TrialOutput, pe: &PairError, sigma: f64) -> Vec<String> {
    vec![
        cfg.dim.to_string(),
        fmt_f64(cfg.alpha),
        pe.m.to_string(),
        pe.k.to_string(),
        pe.trial.to_string(),
        pe.seed.to_string(),
        out.n_points.to_string(),
        out.n_cluster.to_string(),
        out.n_interior.to_string(),
        fmt_f64(pe.lambda_scaled),
        fmt_f64(pe.lambda_cont),
        fmt_f64(pe.rel_eig_err),
        fmt_f64(pe.gap),
        fmt_f64(pe.l2_vec_err),
        fmt_f64(pe.linf_vec_err_bulk),
        fmt_f64(pe.normalization_inner),
        fmt_f64(sigma),
    ]
}

/// Median error per scale for one k, for rate fitting and plotting.
fn median_points(
    records: &[(usize, PairError)],
    k: usize,
    pick: impl Fn(&PairError) -> f64,
) -> Vec<(u32, f64)> {
    let mut ms: Vec<u32> = records
        .iter()
        .filter(|(_, p)| p.k == k)
        .map(|(_, p)| p.m)
        .collect();
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|(_, p)| p.k == k && p.m == m)
                .map(|(_, p)| pick(p))
                .collect();
            (m, median(&vals))
        })
        .collect()
}

pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let (sigma, sigma_est) = resolve_sigma(cfg)?;
    let spec = continuum_spectrum::<f64>(cfg.dim, sigma, cfg.k_max)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut rows: Vec<(usize, PairError)> = Vec::new(); // (trial context index, record)
    let mut contexts: Vec<TrialOutput> = Vec::new();
    let mut failures = 0usize;
    for &m in &cfg.m_list {
        let k_adm = (1..=cfg.k_max)
            .take_while(|&k| admissible(m, k, &spec, cfg.c_admissibility))
            .last();
        let Some(k_adm) = k_adm else {
            log::warn!("no admissible eigenvalue index at m={m}; scale skipped");
            continue;
        };
        let outs: Vec<Result<TrialOutput, String>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &spec, m, k_adm, t))
            .collect();
        for out in outs {
            match out {
                Ok(out) => {
                    failures += out.failures;
                    let ctx = contexts.len();
                    for pe in &out.records {
                        rows.push((ctx, pe.clone()));
                    }
                    contexts.push(out);
                }
                Err(e) => {
                    log::warn!("trial failed: {e}");
                    failures += 1;
                }
            }
        }
    }

    // Rate fits on median errors; skipped when fewer than three scales
    // produced data.
    let mut fits: Vec<(String, RateFit)> = Vec::new();
    for k in 1..=cfg.k_max {
        for (target, pick) in [
            ("rel_eig_err", (|p: &PairError| p.rel_eig_err) as fn(&PairError) -> f64),
            ("l2_vec_err", |p: &PairError| p.l2_vec_err),
        ] {
            let pts = median_points(&rows, k, pick);
            for model in [RateModel::Plain, RateModel::SqrtMCorrected] {
                match fit_rate(k, &pts, model) {
                    Ok(f) => fits.push((target.to_string(), f)),
                    Err(e) => log::debug!("fit skipped for k={k} {target} ({model:?}): {e}"),
                }
            }
        }
    }

    let out_dir = PathBuf::from(&cfg.out_dir);
    let mut files = Vec::new();

    let mut csv = Csv::new(CONVERGE_CSV_HEADER);
    for (ctx, pe) in &rows {
        csv.row(&csv_row(cfg, &contexts[*ctx], pe, sigma));
    }
    files.push(write_atomic(&out_dir, "converge.csv", &csv.into_bytes())?);

    let report = json!({
        "config": cfg,
        "sigma_bar": sigma,
        "sigma_estimate": sigma_est,
        "failures": failures,
        "records": rows.iter().map(|(c, p)| record_json(cfg, &contexts[*c], p, sigma)).collect::<Vec<_>>(),
        "fits": fits.iter().map(|(target, f)| {
            let mut v = serde_json::to_value(f).expect("fit serializes");
            v["target"] = json!(target);
            v
        }).collect::<Vec<_>>(),
        "concentration": [],
    });
    files.push(write_atomic(
        &out_dir,
        "report.json",
        serde_json::to_string_pretty(&report)
            .expect("report serializes")
            .as_bytes(),
    )?);

    if cfg.svg {
        let curves: Vec<(usize, Vec<(u32, f64)>)> = (1..=cfg.k_max)
            .map(|k| (k, median_points(&rows, k, |p| p.rel_eig_err)))
            .filter(|(_, c)| !c.is_empty())
            .collect();
        files.push(write_atomic(
            &out_dir,
            "rates.svg",
            rate_plot("relative eigenvalue error", &curves).as_bytes(),
        )?);
    }
    println!(
        "converge: {} records, {} failures, sigma = {}",
        rows.len(),
        failures,
        sigma
    );
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(files)
}

pub fn cmd_probe(
    cfg: &ExperimentConfig,
    alphas: &[f64],
    side: f64,
) -> Result<Vec<PathBuf>, CliError> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) {
        return Err(CliError::Config("probe alphas must be positive".into()));
    }
    if !(side > 0.0) {
        return Err(CliError::Config(format!("probe side must be positive, got {side}")));
    }
    let rows = percolation_probe(cfg.dim, alphas, side, cfg.trials, cfg.master_seed);
    let out_dir = PathBuf::from(&cfg.out_dir);
    let path = match cfg.format {
        OutputFormat::Csv => {
            let mut csv = Csv::new("alpha,spanning_fraction");
            for r in &rows {
                csv.row(&[fmt_f64(r.alpha), fmt_f64(r.spanning_fraction)]);
            }
            write_atomic(&out_dir, "probe.csv", &csv.into_bytes())?
        }
        OutputFormat::Json => write_atomic(
            &out_dir,
            "probe.json",
            serde_json::to_string_pretty(&rows).expect("rows serialize").as_bytes(),
        )?,
    };
    println!("wrote {}", path.display());
    Ok(vec![path])
}

pub fn cmd_homogenize(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let m_max = *cfg.m_list.last().expect("validated nonempty");
    let side = box_side_of(m_max);
    let seed = mix64(cfg.master_seed ^ SIGMA_STREAM_TAG);
    let mut estimates = Vec::new();
    for axis in 0..cfg.dim {
        // The same seed for every axis pairs the trials across directions.
        estimates.push(estimate_sigma::<f64>(
            cfg.dim,
            cfg.alpha,
            side,
            &unit_axis(cfg.dim, axis),
            cfg.trials,
            seed,
            cfg.tol_solver,
        )?);
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    let path = match cfg.format {
        OutputFormat::Csv => {
            let mut csv = Csv::new("dim,alpha,box_side,trials,direction,sigma_hat,sigma_stderr");
            for e in &estimates {
                let dir = e
                    .direction
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .collect::<Vec<_>>()
                    .join(";");
                csv.row(&[
                    cfg.dim.to_string(),
                    fmt_f64(e.alpha),
                    fmt_f64(e.box_side),
                    e.trials.to_string(),
                    dir,
                    fmt_f64(e.sigma_hat),
                    fmt_f64(e.stderr),
                ]);
            }
            write_atomic(&out_dir, "homogenize.csv", &csv.into_bytes())?
        }
        OutputFormat::Json => write_atomic(
            &out_dir,
            "homogenize.json",
            serde_json::to_string_pretty(&estimates)
                .expect("estimates serialize")
                .as_bytes(),
        )?,
    };
    println!("wrote {}", path.display());
    Ok(vec![path])
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, m: u32, seed: u64) -> Result<Vec<PathBuf>, CliError> {
    let (sigma, _) = resolve_sigma(cfg)?;
    let spec = continuum_spectrum::<f64>(cfg.dim, sigma, cfg.k_max)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let cloud = sample_poisson::<f64>(cfg.dim, box_side_of(m), cfg.alpha, seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let n_points = cloud.len();
    let graph = Arc::new(build_graph(cloud));
    let cluster =
        Arc::new(extract_cluster(graph).map_err(|e| CliError::Runtime(e.to_string()))?);
    let op = assemble(cluster.clone()).map_err(|e| CliError::Runtime(e.to_string()))?;
    let k_solve = (*spec.class_range(cfg.k_max.min(spec.len())).end()).min(op.interior_count());
    let eig = smallest_eigenpairs(&op, k_solve, cfg.tol_eig)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let dilation_sq = 9f64.powi(m as i32);
    let scaled: Vec<f64> = eig.eigenvalues.iter().map(|l| l * dilation_sq).collect();
    let rel_err: Vec<f64> = scaled
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i < spec.len() {
                (s - spec.lambda(i + 1)).abs() / spec.lambda(i + 1)
            } else {
                f64::NAN
            }
        })
        .collect();
    let doc = json!({
        "m": m,
        "seed": seed,
        "sigma_bar": sigma,
        "n_points": n_points,
        "n_cluster": cluster.len(),
        "n_interior": op.interior_count(),
        "discrete": eig.to_json(),
        "lambda_scaled": scaled,
        "continuum": spec.to_json(),
        "rel_err": rel_err,
    });
    let out_dir = PathBuf::from(&cfg.out_dir);
    let path = write_atomic(
        &out_dir,
        "spectrum.json",
        serde_json::to_string_pretty(&doc).expect("doc serializes").as_bytes(),
    )?;
    println!("wrote {}", path.display());
    Ok(vec![path])
}

pub fn cmd_mc_check(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let (sigma, _) = resolve_sigma(cfg)?;
    let spec = continuum_spectrum::<f64>(cfg.dim, sigma, cfg.k_max)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut records: Vec<ConcentrationRecord> = Vec::new();
    for &m in &cfg.m_list {
        for k in 1..=cfg.k_max {
            let rec = concentration_check(&spec, k, cfg.dim, cfg.alpha, m, cfg.trials, cfg.master_seed)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            records.push(rec);
        }
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    let path = match cfg.format {
        OutputFormat::Csv => {
            let mut csv = Csv::new(
                "dim,alpha,m,k,trials,threshold,empirical_exceed_rate,bernstein_bound,median_deviation,p95_deviation",
            );
            for r in &records {
                let mut d = r.deviations.clone();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                csv.row(&[
                    cfg.dim.to_string(),
                    fmt_f64(cfg.alpha),
                    r.m.to_string(),
                    r.k.to_string(),
                    r.trials.to_string(),
                    fmt_f64(r.threshold),
                    fmt_f64(r.empirical_exceed_rate),
                    fmt_f64(r.bernstein_bound),
                    fmt_f64(quantile_sorted(&d, 0.5)),
                    fmt_f64(quantile_sorted(&d, 0.95)),
                ]);
            }
            write_atomic(&out_dir, "mc_check.csv", &csv.into_bytes())?
        }
        OutputFormat::Json => {
            let report = json!({
                "config": cfg,
                "records": [],
                "fits": [],
                "concentration": records,
            });
            write_atomic(
                &out_dir,
                "mc_check.json",
                serde_json::to_string_pretty(&report)
                    .expect("report serializes")
                    .as_bytes(),
            )?
        }
    };
    println!("wrote {}", path.display());
    Ok(vec![path])
}
