//! Two-level preconditioner for the Dirichlet operator: incomplete-Cholesky
//! smoothing plus a coarse-grid correction on a regular bilinear/trilinear
//! interpolation grid, combined in a symmetric V-cycle.
//!
//! IC(0) damps short-wavelength error; the Galerkin-coarsened problem
//! handles the long-wavelength components that otherwise make the iteration
//! count grow with the box size.

use super::ic::IncompleteCholesky;
use crate::operator::DirichletOperator;
use crate::scalar::Scalar;

/// Target spacing of the coarse grid in connection-radius units.
const COARSE_SPACING: f64 = 3.0;

pub(crate) struct TwoLevel<T: Scalar> {
    smoother: IncompleteCholesky<T>,
    /// Interpolation: up to 2^dim (coarse node, weight) pairs per interior
    /// fine vertex, flattened.
    p_offsets: Vec<usize>,
    p_nodes: Vec<u32>,
    p_weights: Vec<T>,
    coarse: BandedCholesky<T>,
    n_coarse: usize,
}

impl<T: Scalar> TwoLevel<T> {
    pub fn build(op: &DirichletOperator<T>, smoother: IncompleteCholesky<T>) -> Option<Self> {
        let cluster = op.cluster();
        let dim = cluster.dim();
        let side = cluster.box_side().as_f64();
        let cells = (side / COARSE_SPACING).round().max(2.0) as usize;
        let h = side / cells as f64;
        let nodes_per_axis = cells - 1; // interior nodes only
        if nodes_per_axis < 2 {
            return None;
        }
        let n_coarse = nodes_per_axis.pow(dim as u32);
        let n = op.interior_count();

        // Interpolation weights per interior vertex.
        let mut p_offsets = Vec::with_capacity(n + 1);
        p_offsets.push(0usize);
        let mut p_nodes: Vec<u32> = Vec::new();
        let mut p_weights: Vec<T> = Vec::new();
        let corners = 1usize << dim;
        for &local in op.interior_vertices() {
            let pos = cluster.position(local as usize);
            let mut cell = [0usize; 3];
            let mut frac = [0.0f64; 3];
            for a in 0..dim {
                let t = (pos[a].as_f64() / h).clamp(0.0, cells as f64 - 1e-9);
                let c = (t.floor() as usize).min(cells - 1);
                cell[a] = c;
                frac[a] = t - c as f64;
            }
            for corner in 0..corners {
                let mut w = 1.0f64;
                let mut idx = 0usize;
                let mut valid = true;
                for a in 0..dim {
                    let up = (corner >> a) & 1;
                    let node = cell[a] + up;
                    w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
                    if node == 0 || node == cells {
                        valid = false; // Dirichlet boundary node, pinned to zero
                        break;
                    }
                    idx = idx * nodes_per_axis + (node - 1);
                }
                if valid && w > 1e-12 {
                    p_nodes.push(idx as u32);
                    p_weights.push(T::cast(w));
                }
            }
            p_offsets.push(p_nodes.len());
        }

        // Galerkin coarse operator accumulated per (node, offset) slot; two
        // interacting nodes differ by at most 2 per axis.
        let offsets_per_axis = 5usize;
        let n_offsets = offsets_per_axis.pow(dim as u32);
        let mut table = vec![T::zero(); n_coarse * n_offsets];
        let decode = |idx: usize| -> [isize; 3] {
            let mut rem = idx;
            let mut coords = [0isize; 3];
            for a in (0..dim).rev() {
                coords[a] = (rem % nodes_per_axis) as isize;
                rem /= nodes_per_axis;
            }
            coords
        };
        let offset_of = |ci: usize, cj: usize| -> Option<usize> {
            let a = decode(ci);
            let b = decode(cj);
            let mut off = 0usize;
            for ax in 0..dim {
                let d = b[ax] - a[ax];
                if d.abs() > 2 {
                    return None;
                }
                off = off * offsets_per_axis + (d + 2) as usize;
            }
            Some(off)
        };
        for i in 0..n {
            let (cols, vals) = op.row(i);
            let pi = p_offsets[i]..p_offsets[i + 1];
            for (c, v) in cols.iter().zip(vals.iter()) {
                let pj = p_offsets[*c as usize]..p_offsets[*c as usize + 1];
                for a in pi.clone() {
                    for b in pj.clone() {
                        let Some(off) = offset_of(p_nodes[a] as usize, p_nodes[b] as usize)
                        else {
                            continue;
                        };
                        let slot = p_nodes[a] as usize * n_offsets + off;
                        table[slot] = table[slot] + p_weights[a] * *v * p_weights[b];
                    }
                }
            }
        }

        // Convert the offset table to banded storage and factor.
        let bandwidth = {
            let mut max_delta = 0usize;
            for ax in 0..dim {
                let mut stride = 1usize;
                for _ in ax + 1..dim {
                    stride *= nodes_per_axis;
                }
                max_delta += 2 * stride;
            }
            max_delta + 1
        };
        let mut band = vec![T::zero(); n_coarse * bandwidth];
        for ci in 0..n_coarse {
            let a = decode(ci);
            for off in 0..n_offsets {
                let v = table[ci * n_offsets + off];
                if v == T::zero() {
                    continue;
                }
                // Decode the offset back into a coarse column index.
                let mut o = off;
                let mut cj = 0usize;
                let mut ok = true;
                let mut deltas = [0isize; 3];
                for ax in (0..dim).rev() {
                    deltas[ax] = (o % offsets_per_axis) as isize - 2;
                    o /= offsets_per_axis;
                }
                for ax in 0..dim {
                    let nj = a[ax] + deltas[ax];
                    if nj < 0 || nj >= nodes_per_axis as isize {
                        ok = false;
                        break;
                    }
                    cj = cj * nodes_per_axis + nj as usize;
                }
                if !ok || cj > ci {
                    continue; // keep the lower triangle only
                }
                let d = ci - cj;
                if d < bandwidth {
                    band[ci * bandwidth + d] = v;
                }
            }
        }
        let coarse = BandedCholesky::factor(band, n_coarse, bandwidth)?;

        Some(Self {
            smoother,
            p_offsets,
            p_nodes,
            p_weights,
            coarse,
            n_coarse,
        })
    }

    fn restrict(&self, fine: &[T], coarse: &mut [T]) {
        for v in coarse.iter_mut() {
            *v = T::zero();
        }
        for i in 0..fine.len() {
            let f = fine[i];
            for idx in self.p_offsets[i]..self.p_offsets[i + 1] {
                coarse[self.p_nodes[idx] as usize] =
                    coarse[self.p_nodes[idx] as usize] + self.p_weights[idx] * f;
            }
        }
    }

    fn prolong_add(&self, coarse: &[T], fine: &mut [T]) {
        for (i, f) in fine.iter_mut().enumerate() {
            let mut acc = T::zero();
            for idx in self.p_offsets[i]..self.p_offsets[i + 1] {
                acc = acc + self.p_weights[idx] * coarse[self.p_nodes[idx] as usize];
            }
            *f = *f + acc;
        }
    }

    /// Symmetric V-cycle: smooth, coarse-correct, smooth.
    pub fn apply(&self, op: &DirichletOperator<T>, r: &[T], out: &mut [T]) {
        let n = r.len();
        let mut z = vec![T::zero(); n];
        let mut tmp = vec![T::zero(); n];
        let mut residual = vec![T::zero(); n];

        self.smoother.apply(r, out, &mut z);

        op.apply_into(out, &mut tmp);
        for i in 0..n {
            residual[i] = r[i] - tmp[i];
        }
        let mut rc = vec![T::zero(); self.n_coarse];
        self.restrict(&residual, &mut rc);
        let zc = self.coarse.solve(&rc);
        self.prolong_add(&zc, out);

        op.apply_into(out, &mut tmp);
        for i in 0..n {
            residual[i] = r[i] - tmp[i];
        }
        self.smoother.apply(&residual, &mut z, &mut tmp);
        for i in 0..n {
            out[i] = out[i] + z[i];
        }
    }
}

/// Dense banded Cholesky (lower storage: `band[i * bw + d] = A[i][i - d]`).
pub(crate) struct BandedCholesky<T> {
    band: Vec<T>,
    n: usize,
    bw: usize,
}

impl<T: Scalar> BandedCholesky<T> {
    pub fn factor(mut band: Vec<T>, n: usize, bw: usize) -> Option<Self> {
        for i in 0..n {
            // Zero-support coarse nodes become identity rows.
            if band[i * bw] == T::zero() {
                band[i * bw] = T::one();
                for d in 1..bw.min(i + 1) {
                    band[i * bw + d] = T::zero();
                }
                continue;
            }
            let j_lo = i.saturating_sub(bw - 1);
            for j in j_lo..=i {
                let mut s = band[i * bw + (i - j)];
                let p_lo = j_lo.max(j.saturating_sub(bw - 1));
                for p in p_lo..j {
                    s = s - band[i * bw + (i - p)] * band[j * bw + (j - p)];
                }
                if j < i {
                    band[i * bw + (i - j)] = s / band[j * bw];
                } else {
                    if !(s > T::zero()) {
                        return None;
                    }
                    band[i * bw] = s.sqrt();
                }
            }
        }
        Some(Self { band, n, bw })
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let (n, bw) = (self.n, self.bw);
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = rhs[i];
            for d in 1..bw.min(i + 1) {
                s = s - self.band[i * bw + d] * y[i - d];
            }
            y[i] = s / self.band[i * bw];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            let j_hi = (i + bw).min(n);
            for j in i + 1..j_hi {
                s = s - self.band[j * bw + (j - i)] * x[j];
            }
            x[i] = s / self.band[i * bw];
        }
        x
    }
}
