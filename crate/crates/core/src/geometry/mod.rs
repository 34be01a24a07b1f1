//! Point-cloud geometry: Poisson sampling, the unit-distance geometric graph,
//! percolation-cluster extraction, and connectivity diagnostics.

mod cloud;
mod cluster;
mod diagnostics;
mod graph;
mod grid;
mod io;

pub use cloud::{sample_poisson, sample_poisson_capped, PointCloud, DEFAULT_POINT_CAP};
pub use cluster::{extract_cluster, Cluster};
pub use diagnostics::{percolation_probe, well_connectedness, ProbeRow, WellConnectednessReport};
pub use graph::{build_graph, GeometricGraph};
pub use io::{read_cloud, read_values, write_cloud, write_values};
