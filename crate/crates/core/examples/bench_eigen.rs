use spl_core::geometry::{build_graph, extract_cluster, sample_poisson};
use spl_core::operator::assemble;
use spl_core::eigen::smallest_eigenpairs;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    for m in [3u32, 4, 5] {
        let side = 3f64.powi(m as i32);
        let t0 = Instant::now();
        let cloud = sample_poisson::<f64>(2, side, 4.0, 1).unwrap();
        let n_pts = cloud.len();
        let graph = Arc::new(build_graph(cloud));
        let t_graph = t0.elapsed();
        let cluster = Arc::new(extract_cluster(graph).unwrap());
        let op = assemble(cluster.clone()).unwrap();
        let t_setup = t0.elapsed();
        let set = smallest_eigenpairs(&op, 6.min(op.interior_count()), 1e-6).unwrap();
        let t_eig = t0.elapsed();
        println!(
            "m={m} pts={n_pts} cluster={} interior={} | graph {:.2?} setup {:.2?} eig {:.2?} | lam1*9^m={:.4} lam={:?}",
            cluster.len(), op.interior_count(), t_graph, t_setup, t_eig,
            9f64.powi(m as i32) * set.eigenvalues[0],
            set.eigenvalues.iter().map(|v| (v * 9f64.powi(m as i32) * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
}
