use crate::scalar::Scalar;

/// Uniform bucket grid with cell side 1 (the connection radius), so that all
/// neighbors of a point live in the 3^dim surrounding cells.
pub(crate) struct UniformGrid {
    dim: usize,
    cells_per_axis: usize,
    /// CSR layout: indices of the points in cell `c` are
    /// `entries[cell_start[c]..cell_start[c + 1]]`.
    cell_start: Vec<usize>,
    entries: Vec<u32>,
}

impl UniformGrid {
    /// Build from flat coordinates; `ids` selects a subset of points (the
    /// stored entry values are the ids themselves).
    pub fn build<T: Scalar>(dim: usize, box_side: T, coords: &[T], ids: Option<&[usize]>) -> Self {
        let cells_per_axis = (box_side.as_f64().ceil() as usize).max(1);
        let ncells = cells_per_axis.pow(dim as u32);
        let cell_of = |pid: usize| -> usize {
            let mut c = 0usize;
            for a in 0..dim {
                let x = coords[pid * dim + a].as_f64();
                let k = (x.floor() as usize).min(cells_per_axis - 1);
                c = c * cells_per_axis + k;
            }
            c
        };

        let mut counts = vec![0usize; ncells + 1];
        let id_iter = |f: &mut dyn FnMut(usize)| match ids {
            Some(sel) => sel.iter().for_each(|&i| f(i)),
            None => (0..coords.len() / dim.max(1)).for_each(&mut *f),
        };
        id_iter(&mut |i| counts[cell_of(i) + 1] += 1);
        for c in 0..ncells {
            counts[c + 1] += counts[c];
        }
        let mut entries = vec![0u32; *counts.last().unwrap()];
        let mut cursor = counts.clone();
        id_iter(&mut |i| {
            let c = cell_of(i);
            entries[cursor[c]] = i as u32;
            cursor[c] += 1;
        });
        Self {
            dim,
            cells_per_axis,
            cell_start: counts,
            entries,
        }
    }

    fn cell_entries(&self, c: usize) -> &[u32] {
        &self.entries[self.cell_start[c]..self.cell_start[c + 1]]
    }

    /// Visit points in the cells at Chebyshev distance exactly `r` from the
    /// cell of `base` (or all cells with distance <= r when `filled`).
    fn for_each_in_ring_cells<F: FnMut(u32)>(
        &self,
        base: &[isize; 3],
        r: isize,
        filled: bool,
        f: &mut F,
    ) {
        let n = self.cells_per_axis as isize;
        let mut walk = |cell: &[isize]| {
            let mut idx = 0usize;
            for a in 0..self.dim {
                idx = idx * self.cells_per_axis + cell[a] as usize;
            }
            for &e in self.cell_entries(idx) {
                f(e);
            }
        };
        let in_bounds = |v: isize| (0..n).contains(&v);
        match self.dim {
            2 => {
                for dx in -r..=r {
                    for dy in -r..=r {
                        if !filled && dx.abs().max(dy.abs()) != r {
                            continue;
                        }
                        let (x, y) = (base[0] + dx, base[1] + dy);
                        if in_bounds(x) && in_bounds(y) {
                            walk(&[x, y]);
                        }
                    }
                }
            }
            3 => {
                for dx in -r..=r {
                    for dy in -r..=r {
                        for dz in -r..=r {
                            if !filled && dx.abs().max(dy.abs()).max(dz.abs()) != r {
                                continue;
                            }
                            let (x, y, z) = (base[0] + dx, base[1] + dy, base[2] + dz);
                            if in_bounds(x) && in_bounds(y) && in_bounds(z) {
                                walk(&[x, y, z]);
                            }
                        }
                    }
                }
            }
            d => unreachable!("unsupported dimension {d}"),
        }
    }

    /// For the unit-radius neighbor scan: visit the 3^dim cells around the
    /// query point's own cell (radius-1 filled block).
    pub fn for_each_candidate<T: Scalar, F: FnMut(u32)>(&self, point: &[T], mut f: F) {
        let mut base = [0isize; 3];
        for a in 0..self.dim {
            base[a] = (point[a].as_f64().floor() as isize).clamp(0, self.cells_per_axis as isize - 1);
        }
        self.for_each_in_ring_cells(&base, 1, true, &mut f);
    }

    /// Squared distance from `point` to the nearest stored point, by ring
    /// expansion. Returns `f64::INFINITY` when the grid is empty.
    pub fn nearest_sq<T: Scalar>(&self, point: &[T], coords: &[T]) -> f64 {
        if self.entries.is_empty() {
            return f64::INFINITY;
        }
        let mut base = [0isize; 3];
        for a in 0..self.dim {
            base[a] = (point[a].as_f64().floor() as isize).clamp(0, self.cells_per_axis as isize - 1);
        }
        let mut best = f64::INFINITY;
        let max_r = self.cells_per_axis as isize;
        for r in 0..=max_r {
            // Cells at Chebyshev ring r contain no point closer than (r-1)
            // cell widths; once best beats that, stop.
            if r >= 1 && best <= ((r - 1) as f64) * ((r - 1) as f64) {
                break;
            }
            self.for_each_in_ring_cells(&base, r, r == 0, &mut |j| {
                let q = &coords[j as usize * self.dim..(j as usize + 1) * self.dim];
                let mut d2 = 0.0;
                for a in 0..self.dim {
                    let dx = point[a].as_f64() - q[a].as_f64();
                    d2 += dx * dx;
                }
                best = best.min(d2);
            });
        }
        best
    }
}
