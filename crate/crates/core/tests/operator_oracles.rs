//! Operator oracles: dense assembly, dense LU solves, the duality-norm sup
//! form, and the energy identities.

use std::sync::Arc;

use spl_core::geometry::{build_graph, extract_cluster, sample_poisson, Cluster};
use spl_core::operator::{
    assemble, assemble_unmasked, dual_norm, norms, solve_dirichlet, ClusterFunction,
};
use spl_core::seed::SplitMix64;

fn small_cluster(seed: u64) -> Arc<Cluster<f64>> {
    // Box 11 at alpha 4 keeps the interior under ~300 vertices.
    let cloud = sample_poisson::<f64>(2, 11.0, 4.0, seed).unwrap();
    Arc::new(extract_cluster(Arc::new(build_graph(cloud))).unwrap())
}

/// Dense negative graph Laplacian with zero extension to the boundary
/// layer, by the definition: diagonal = full cluster degree, off-diagonal
/// -1 for interior neighbors.
fn dense_dirichlet(cluster: &Cluster<f64>) -> (Vec<f64>, Vec<usize>) {
    let interior: Vec<usize> = (0..cluster.len()).filter(|&v| cluster.is_interior(v)).collect();
    let index_of: std::collections::HashMap<usize, usize> =
        interior.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let n = interior.len();
    let mut a = vec![0.0; n * n];
    for (k, &v) in interior.iter().enumerate() {
        a[k * n + k] = cluster.degree(v) as f64;
        for &w in cluster.neighbors(v) {
            if let Some(&j) = index_of.get(&(w as usize)) {
                a[k * n + j] = -1.0;
            }
        }
    }
    (a, interior)
}

/// Plain Gaussian elimination with partial pivoting, written independently
/// of the library solver.
fn lu_solve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())
            .unwrap();
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[row * n + c] -= f * m[col * n + c];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = x[row];
        for c in row + 1..n {
            s -= m[row * n + c] * x[c];
        }
        x[row] = s / m[row * n + row];
    }
    x
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut s = SplitMix64::new(seed);
    (0..n).map(|_| s.next_centered_f64()).collect()
}

#[test]
fn sparse_assembly_matches_dense_definition_entrywise() {
    for seed in [1u64, 2, 3] {
        let cluster = small_cluster(seed);
        let op = assemble(cluster.clone()).unwrap();
        let (dense, interior) = dense_dirichlet(&cluster);
        let n = interior.len();
        assert!(n <= 320, "test cluster too large: {n}");
        assert_eq!(op.interior_count(), n);
        let mut from_sparse = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = op.row(i);
            for (c, v) in cols.iter().zip(vals.iter()) {
                from_sparse[i * n + *c as usize] = *v;
            }
        }
        assert_eq!(from_sparse, dense, "seed {seed}");
    }
}

#[test]
fn apply_matches_dense_product_and_is_symmetric() {
    let cluster = small_cluster(5);
    let op = assemble(cluster.clone()).unwrap();
    let (dense, _) = dense_dirichlet(&cluster);
    let n = op.interior_count();
    for trial in 0..5u64 {
        let u = random_vector(n, 100 + trial);
        let v = random_vector(n, 200 + trial);
        let au = op.apply(&u).unwrap();
        let mut dense_au = vec![0.0; n];
        for i in 0..n {
            dense_au[i] = (0..n).map(|j| dense[i * n + j] * u[j]).sum();
        }
        for i in 0..n {
            assert!((au[i] - dense_au[i]).abs() < 1e-12);
        }
        // <Au, v> = <u, Av> to round-off.
        let av = op.apply(&v).unwrap();
        let s1: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let s2: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((s1 - s2).abs() <= 1e-12 * nu * nv);
    }
}

#[test]
fn cg_matches_dense_lu_solve() {
    for seed in [11u64, 12] {
        let cluster = small_cluster(seed);
        let op = assemble(cluster.clone()).unwrap();
        let (dense, _) = dense_dirichlet(&cluster);
        let n = op.interior_count();
        let f = random_vector(n, 31 * seed);
        let u_cg = solve_dirichlet(&op, &f, 1e-12).unwrap();
        let u_lu = lu_solve(&dense, &f);
        let scale: f64 = u_lu.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: f64 = u_cg
            .iter()
            .zip(&u_lu)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-8 * scale, "relative error {}", diff / scale);
    }
}

#[test]
fn positive_definiteness_on_random_vectors() {
    let cluster = small_cluster(21);
    let op = assemble(cluster).unwrap();
    let n = op.interior_count();
    for t in 0..100u64 {
        let u = random_vector(n, 900 + t);
        let au = op.apply(&u).unwrap();
        let quad: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
        assert!(quad > 0.0, "trial {t}");
    }
}

#[test]
fn unmasked_laplacian_annihilates_constants() {
    let cluster = small_cluster(22);
    let (row_start, cols, vals) = assemble_unmasked(&cluster);
    let n = cluster.len();
    for i in 0..n {
        let mut row_sum = 0.0;
        for idx in row_start[i]..row_start[i + 1] {
            let _ = cols[idx];
            row_sum += vals[idx];
        }
        assert!(
            row_sum.abs() < 1e-12,
            "unmasked row {i} sums to {row_sum}"
        );
    }
}

#[test]
fn energy_identity_between_laplacian_and_edge_differences() {
    // avsum_x sum_y (u(y) - u(x)) u(x) = -1/2 avsum of squared ordered edge
    // differences.
    let cluster = small_cluster(23);
    let n = cluster.len();
    let u = random_vector(n, 77);
    let mut lhs = 0.0;
    for x in 0..n {
        let mut acc = 0.0;
        for &y in cluster.neighbors(x) {
            acc += u[y as usize] - u[x];
        }
        lhs += acc * u[x];
    }
    lhs /= n as f64;
    let f = ClusterFunction::from_values(cluster.clone(), u);
    let h1 = norms(&f).h1_avsum;
    let rhs = -0.5 * h1 * h1;
    assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
}

#[test]
fn norms_match_naive_double_loops() {
    let cluster = small_cluster(24);
    let n = cluster.len();
    let u = random_vector(n, 123);
    let f = ClusterFunction::from_values(cluster.clone(), u.clone());
    let got = norms(&f);
    let l2 = (u.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    let mut edge = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let (px, py) = (cluster.position(x), cluster.position(y));
            let d2 = (px[0] - py[0]).powi(2) + (px[1] - py[1]).powi(2);
            if d2 <= 1.0 {
                edge += (u[x] - u[y]).powi(2);
            }
        }
    }
    let h1 = (edge / n as f64).sqrt();
    assert!((got.l2_avsum - l2).abs() < 1e-12);
    assert!((got.h1_avsum - h1).abs() < 1e-12);
}

#[test]
fn dual_norm_dominates_random_duality_ratios_and_is_attained() {
    let cluster = small_cluster(25);
    let op = assemble(cluster.clone()).unwrap();
    let n_int = op.interior_count();
    let tol = 1e-12;
    let f = random_vector(n_int, 55);
    let value = dual_norm(&op, &f, tol).unwrap();

    let ratio_of = |g_int: &[f64]| -> f64 {
        let g = ClusterFunction::from_interior(&op, g_int);
        let mut pair = 0.0;
        for (j, &local) in op.interior_vertices().iter().enumerate() {
            pair += f[j] * g.values()[local as usize];
        }
        pair /= cluster.len() as f64;
        let h1 = norms(&g).h1_avsum;
        pair.abs() / h1
    };

    // Cauchy-Schwarz certificate on random directions.
    let mut best = 0.0f64;
    for t in 0..200u64 {
        let g = random_vector(n_int, 800 + t);
        let r = ratio_of(&g);
        assert!(r <= value * (1.0 + 10.0 * tol), "random direction beats the sup: {r} vs {value}");
        best = best.max(r);
    }
    // The supremum is attained at the Dirichlet potential of f.
    let w = solve_dirichlet(&op, &f, tol).unwrap();
    let attained = ratio_of(&w);
    assert!((attained - value).abs() <= 0.01 * value, "{attained} vs {value}");
    assert!(best <= value * (1.0 + 1e-10));
}

#[test]
fn solver_map_is_symmetric() {
    // <T f, g> = <f, T g> with T = A^{-1}, to solver tolerance.
    let cluster = small_cluster(26);
    let op = assemble(cluster).unwrap();
    let n = op.interior_count();
    let f = random_vector(n, 61);
    let g = random_vector(n, 62);
    let tf = solve_dirichlet(&op, &f, 1e-12).unwrap();
    let tg = solve_dirichlet(&op, &g, 1e-12).unwrap();
    let s1: f64 = tf.iter().zip(&g).map(|(a, b)| a * b).sum();
    let s2: f64 = f.iter().zip(&tg).map(|(a, b)| a * b).sum();
    assert!((s1 - s2).abs() <= 1e-8 * s1.abs().max(s2.abs()).max(1e-30));
}

#[test]
fn coo_export_is_sorted_and_complete() {
    let cluster = small_cluster(27);
    let op = assemble(cluster).unwrap();
    let mut buf = Vec::new();
    op.write_coo(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut count = 0;
    let mut prev = (-1i64, -1i64);
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let r: i64 = it.next().unwrap().parse().unwrap();
        let c: i64 = it.next().unwrap().parse().unwrap();
        let v: f64 = it.next().unwrap().parse().unwrap();
        assert!((r, c) > prev, "rows must be sorted");
        prev = (r, c);
        assert!(v == -1.0 || v > 0.0);
        count += 1;
    }
    assert_eq!(count, op.nnz());
}
