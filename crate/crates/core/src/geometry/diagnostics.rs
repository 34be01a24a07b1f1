use rayon::prelude::*;

use super::cloud::sample_poisson;
use super::graph::{build_graph, GeometricGraph};
use super::grid::UniformGrid;
use crate::scalar::Scalar;
use crate::seed::trial_seed;

/// Diagnostics for the well-connectedness of a sample, mirroring the three
/// cube criteria: component diameter, point-count density, and proximity of
/// every point to the cluster.
#[derive(Clone, Debug)]
pub struct WellConnectednessReport {
    /// Double-sweep BFS lower bound on the hop diameter of the largest
    /// component (a lower bound suffices for the `>=` test).
    pub diameter_lower_bound: usize,
    pub component_diameter_lower_ok: bool,
    /// `|points| / (alpha * |box|)`.
    pub point_count_ratio: f64,
    /// Max over all cloud points of the Euclidean distance to the nearest
    /// cluster point.
    pub max_dist_to_cluster: f64,
    pub passes: bool,
}

/// BFS distances from `start` within the graph; returns the farthest vertex
/// (smallest index on ties) and its distance.
fn bfs_farthest<T: Scalar>(graph: &GeometricGraph<T>, start: usize) -> (usize, usize) {
    let n = graph.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    let mut far = (start, 0usize);
    while let Some(v) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            let w = w as usize;
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if dist[w] > far.1 || (dist[w] == far.1 && w < far.0) {
                    far = (w, dist[w]);
                }
                queue.push_back(w);
            }
        }
    }
    far
}

/// Evaluate the three well-connectedness diagnostics on a sample.
pub fn well_connectedness<T: Scalar>(graph: &GeometricGraph<T>) -> WellConnectednessReport {
    let cloud = graph.cloud();
    let side = cloud.box_side().as_f64();
    let threshold = side / 100.0;
    let expected = cloud.alpha().as_f64() * side.powi(cloud.dim() as i32);
    let point_count_ratio = cloud.len() as f64 / expected;

    let component = graph.largest_component();
    if component.is_empty() {
        return WellConnectednessReport {
            diameter_lower_bound: 0,
            component_diameter_lower_ok: false,
            point_count_ratio,
            max_dist_to_cluster: f64::INFINITY,
            passes: false,
        };
    }

    let (far, _) = bfs_farthest(graph, component[0]);
    let (_, diameter_lower_bound) = bfs_farthest(graph, far);
    let component_diameter_lower_ok = diameter_lower_bound as f64 >= threshold;

    let grid = UniformGrid::build(cloud.dim(), cloud.box_side(), cloud.coords(), Some(&component));
    let mut in_cluster = vec![false; cloud.len()];
    for &v in &component {
        in_cluster[v] = true;
    }
    let mut max_dist_sq = 0.0f64;
    for i in 0..cloud.len() {
        if in_cluster[i] {
            continue;
        }
        max_dist_sq = max_dist_sq.max(grid.nearest_sq(cloud.point(i), cloud.coords()));
    }
    let max_dist_to_cluster = max_dist_sq.sqrt();

    let count_ok = (0.5..=2.0).contains(&point_count_ratio);
    let dist_ok = max_dist_to_cluster <= threshold;
    WellConnectednessReport {
        diameter_lower_bound,
        component_diameter_lower_ok,
        point_count_ratio,
        max_dist_to_cluster,
        passes: component_diameter_lower_ok && count_ok && dist_ok,
    }
}

/// One row of the percolation probe table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ProbeRow {
    pub alpha: f64,
    pub spanning_fraction: f64,
}

/// Empirical spanning probe: for each intensity, the fraction of seeds whose
/// largest component reaches within distance 1 of both faces of the first
/// axis. Trial seeds are shared across intensities so the curves are coupled.
pub fn percolation_probe(
    dim: usize,
    alpha_grid: &[f64],
    side: f64,
    trials: usize,
    seed: u64,
) -> Vec<ProbeRow> {
    assert!(trials >= 1, "trials must be >= 1");
    let per_trial: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed_t = trial_seed(seed, 0, t as u64);
            alpha_grid
                .iter()
                .map(|&alpha| {
                    let cloud = match sample_poisson::<f64>(dim, side, alpha, seed_t) {
                        Ok(c) => c,
                        Err(_) => return false,
                    };
                    let graph = build_graph(cloud);
                    let comp = graph.largest_component();
                    let cloud = graph.cloud();
                    let mut lo = false;
                    let mut hi = false;
                    for &v in &comp {
                        let x = cloud.point(v)[0];
                        lo |= x <= 1.0;
                        hi |= x >= side - 1.0;
                        if lo && hi {
                            break;
                        }
                    }
                    lo && hi
                })
                .collect()
        })
        .collect();
    alpha_grid
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let spans = per_trial.iter().filter(|row| row[ai]).count();
            ProbeRow {
                alpha,
                spanning_fraction: spans as f64 / trials as f64,
            }
        })
        .collect()
}
