use std::sync::Arc;

use super::graph::GeometricGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dirichlet boundary-layer width: vertices within distance 2 of the cube
/// boundary are pinned to zero.
pub const BOUNDARY_LAYER_WIDTH: f64 = 2.0;

/// The largest connected component of the geometric graph, re-indexed
/// locally, with its interior/boundary-layer partition.
#[derive(Clone, Debug)]
pub struct Cluster<T: Scalar> {
    graph: Arc<GeometricGraph<T>>,
    /// Sorted global vertex indices of the cluster.
    vertex_ids: Vec<usize>,
    /// Per cluster vertex: true iff dist(x, boundary) > 2.
    interior_mask: Vec<bool>,
    /// Local coordinates (flat, stride `dim`), copied for locality.
    positions: Vec<T>,
    /// Local CSR adjacency over cluster indices.
    local_offsets: Vec<usize>,
    local_neighbors: Vec<u32>,
    interior_count: usize,
}

impl<T: Scalar> Cluster<T> {
    pub fn graph(&self) -> &Arc<GeometricGraph<T>> {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.cloud().dim()
    }

    pub fn box_side(&self) -> T {
        self.graph.cloud().box_side()
    }

    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    pub fn vertex_ids(&self) -> &[usize] {
        &self.vertex_ids
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn is_interior(&self, local: usize) -> bool {
        self.interior_mask[local]
    }

    /// Local coordinates of cluster vertex `local`.
    pub fn position(&self, local: usize) -> &[T] {
        let d = self.dim();
        &self.positions[local * d..(local + 1) * d]
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    /// Cluster-local sorted neighbor list of vertex `local`.
    pub fn neighbors(&self, local: usize) -> &[u32] {
        &self.local_neighbors[self.local_offsets[local]..self.local_offsets[local + 1]]
    }

    pub fn degree(&self, local: usize) -> usize {
        self.local_offsets[local + 1] - self.local_offsets[local]
    }

    pub fn edge_count(&self) -> usize {
        self.local_neighbors.len() / 2
    }

    /// Distance of cluster vertex `local` to the cube boundary.
    pub fn dist_to_boundary(&self, local: usize) -> T {
        let side = self.box_side();
        let mut d = T::infinity();
        for &x in self.position(local) {
            d = d.min(x).min(side - x);
        }
        d
    }

    /// Copy of the cluster with the given local edges removed; diagnostic
    /// harness for energy-monotonicity checks, never used by the production
    /// pipeline.
    #[cfg(test)]
    pub(crate) fn with_edges_dropped(&self, drop: &[(u32, u32)]) -> Self {
        let banned: std::collections::HashSet<(u32, u32)> = drop
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .collect();
        let mut local_offsets = Vec::with_capacity(self.len() + 1);
        local_offsets.push(0usize);
        let mut local_neighbors = Vec::new();
        for v in 0..self.len() {
            for &w in self.neighbors(v) {
                if !banned.contains(&(v as u32, w)) {
                    local_neighbors.push(w);
                }
            }
            local_offsets.push(local_neighbors.len());
        }
        Self {
            graph: self.graph.clone(),
            vertex_ids: self.vertex_ids.clone(),
            interior_mask: self.interior_mask.clone(),
            positions: self.positions.clone(),
            local_offsets,
            local_neighbors,
            interior_count: self.interior_count,
        }
    }
}

/// Extract the largest connected component together with its Dirichlet
/// interior/boundary-layer split and a re-indexed local adjacency.
pub fn extract_cluster<T: Scalar>(graph: Arc<GeometricGraph<T>>) -> Result<Cluster<T>> {
    if graph.vertex_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let vertex_ids = graph.largest_component();
    if vertex_ids.len() < 2 {
        return Err(Error::ComponentTooSmall);
    }

    let cloud = graph.cloud();
    let dim = cloud.dim();
    let layer = T::cast(BOUNDARY_LAYER_WIDTH);

    let mut local_of = vec![u32::MAX; graph.vertex_count()];
    for (local, &v) in vertex_ids.iter().enumerate() {
        local_of[v] = local as u32;
    }

    let mut positions = Vec::with_capacity(vertex_ids.len() * dim);
    let mut interior_mask = Vec::with_capacity(vertex_ids.len());
    let mut interior_count = 0usize;
    for &v in &vertex_ids {
        positions.extend_from_slice(cloud.point(v));
        let interior = cloud.dist_to_boundary(v) > layer;
        interior_mask.push(interior);
        interior_count += interior as usize;
    }
    if interior_count == 0 {
        return Err(Error::NoInterior);
    }

    // Neighbors of a cluster vertex are all in the cluster (same component),
    // and ascending global order maps to ascending local order, so the
    // re-indexed lists stay sorted.
    let mut local_offsets = Vec::with_capacity(vertex_ids.len() + 1);
    local_offsets.push(0usize);
    let mut local_neighbors = Vec::new();
    for &v in &vertex_ids {
        for &w in graph.neighbors(v) {
            let lw = local_of[w as usize];
            debug_assert_ne!(lw, u32::MAX);
            local_neighbors.push(lw);
        }
        local_offsets.push(local_neighbors.len());
    }

    Ok(Cluster {
        graph,
        vertex_ids,
        interior_mask,
        positions,
        local_offsets,
        local_neighbors,
        interior_count,
    })
}
