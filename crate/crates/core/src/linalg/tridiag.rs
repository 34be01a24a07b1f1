//! Symmetric eigensolver via Householder tridiagonalization followed by
//! implicit-shift QL (the classic EISPACK `tred2`/`tql2` pair).
//!
//! This is the workhorse for the small projected eigenproblems inside the
//! sparse solver and for the tridiagonal finite-difference reference spectra.
//! It shares no code with the Jacobi oracle.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_QL_ITERATIONS: usize = 50;

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e` (`e[i]` couples rows `i` and `i+1`).
pub fn tridiag_eigenvalues<T: Scalar>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = diag.to_vec();
    // tql2 expects e[i] to couple rows i-1 and i, with e[0] unused.
    let mut e = vec![T::zero(); n];
    for i in 1..n {
        e[i] = off[i - 1];
    }
    tql2(&mut d, &mut e, None, n)?;
    Ok(d)
}

/// Full eigendecomposition of the dense symmetric row-major matrix `a`.
///
/// Returns ascending eigenvalues and a row-major matrix whose column `j` is
/// the eigenvector of eigenvalue `j`.
pub fn sym_eigen_ql<T: Scalar>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut d, &mut e, Some(&mut v), n)?;
    Ok((d, v))
}

/// Householder reduction of `v` (symmetric, row-major) to tridiagonal form,
/// accumulating the orthogonal transformation back into `v`.
fn tred2<T: Scalar>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for item in d.iter().take(i) {
            scale = scale + item.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
                v[j * n + i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] = d[k] / scale;
                h = h + d[k] * d[k];
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g = g + v[k * n + j] * d[k];
                    e[k] = e[k] + v[k * n + j] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k * n + j] = v[k * n + j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
            }
        }
        d[i] = h;
    }
    // Accumulate transformations.
    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g = g + v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] = v[k * n + j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = T::zero();
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = T::zero();
}

/// Implicit-shift QL for a symmetric tridiagonal matrix; `d` holds the
/// diagonal, `e[1..]` the subdiagonal. Eigenvalues come back ascending in
/// `d`; when `z` is given its columns are rotated into the eigenvectors.
fn tql2<T: Scalar>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>, n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::EigenNotConverged {
                        converged: l,
                        requested: n,
                        iterations: iter,
                        worst_residual: e[l].abs().as_f64(),
                    });
                }
                // Form the implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (T::cast(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item = *item - h;
                }
                f = f + h;
                // QL transformation.
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(zm) = z.as_deref_mut() {
                        for k in 0..n {
                            let h = zm[k * n + i + 1];
                            zm[k * n + i + 1] = s * zm[k * n + i] + c * h;
                            zm[k * n + i] = c * zm[k * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }

    // Selection sort ascending, carrying eigenvectors along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(zm) = z.as_deref_mut() {
                for row in 0..n {
                    zm.swap(row * n + i, row * n + k);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::jacobi::jacobi_eigen;
    use crate::seed::SplitMix64;

    #[test]
    fn tridiagonal_eigenvalues_match_known_laplacian_spectrum() {
        // 1D second-difference matrix diag=2, off=-1 of order n has
        // eigenvalues 4 sin^2(k pi / (2(n+1))).
        let n = 17;
        let d = vec![2.0_f64; n];
        let e = vec![-1.0_f64; n - 1];
        let vals = tridiag_eigenvalues(&d, &e).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let expect =
                4.0 * ((k + 1) as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
            assert!((v - expect).abs() < 1e-12, "k={k}: {v} vs {expect}");
        }
    }

    #[test]
    fn ql_route_agrees_with_jacobi_route_on_random_symmetric_matrices() {
        let mut rng = SplitMix64::new(0xC0FFEE);
        for n in [1usize, 2, 5, 12, 30] {
            let mut a = vec![0.0_f64; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.next_centered_f64();
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let (vals_ql, vecs) = sym_eigen_ql(&a, n).unwrap();
            let mut aj = a.clone();
            let jr = jacobi_eigen(&mut aj, n, false, 1e-13).unwrap();
            let mut vals_j = jr.values;
            vals_j.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for k in 0..n {
                assert!(
                    (vals_ql[k] - vals_j[k]).abs() < 1e-10,
                    "n={n} k={k}: {} vs {}",
                    vals_ql[k],
                    vals_j[k]
                );
            }
            // Residual check A v = lambda v for one route.
            for j in 0..n {
                for i in 0..n {
                    let mut av = 0.0;
                    for k in 0..n {
                        av += a[i * n + k] * vecs[k * n + j];
                    }
                    assert!((av - vals_ql[j] * vecs[i * n + j]).abs() < 1e-9);
                }
            }
        }
    }
}
