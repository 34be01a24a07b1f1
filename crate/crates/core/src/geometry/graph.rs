use super::cloud::PointCloud;
use super::grid::UniformGrid;
use crate::scalar::Scalar;

/// Unit-distance geometric graph on a point cloud: `i ~ j` iff
/// `|x_i - x_j| <= 1` and `i != j`. Adjacency is symmetric with sorted
/// neighbor lists in compressed form.
#[derive(Clone, Debug)]
pub struct GeometricGraph<T: Scalar> {
    cloud: PointCloud<T>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    edge_count: usize,
}

impl<T: Scalar> GeometricGraph<T> {
    pub fn cloud(&self) -> &PointCloud<T> {
        &self.cloud
    }

    pub fn vertex_count(&self) -> usize {
        self.cloud.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Connected-component labels by weighted union-find with path halving.
    /// Labels are the component's smallest vertex index.
    pub fn component_labels(&self) -> Vec<u32> {
        let n = self.vertex_count();
        let mut uf = UnionFind::new(n);
        for v in 0..n {
            for &w in self.neighbors(v) {
                let w = w as usize;
                if w > v {
                    uf.union(v, w);
                }
            }
        }
        let mut min_label = vec![u32::MAX; n];
        for v in 0..n {
            let r = uf.find(v);
            min_label[r] = min_label[r].min(v as u32);
        }
        (0..n).map(|v| min_label[uf.find(v)]).collect()
    }

    /// Vertices of the largest connected component, sorted ascending. Ties
    /// are broken by the smallest minimum vertex index. Empty for an empty
    /// graph.
    pub fn largest_component(&self) -> Vec<usize> {
        let labels = self.component_labels();
        let n = labels.len();
        if n == 0 {
            return Vec::new();
        }
        let mut sizes = std::collections::HashMap::new();
        for &l in &labels {
            *sizes.entry(l).or_insert(0usize) += 1;
        }
        let best = sizes
            .iter()
            .map(|(&l, &s)| (s, std::cmp::Reverse(l)))
            .max()
            .map(|(_, std::cmp::Reverse(l))| l)
            .unwrap();
        (0..n).filter(|&v| labels[v] == best).collect()
    }
}

/// Build the exact unit-radius adjacency with a unit-cell bucket grid; each
/// vertex only scans the 3^dim surrounding cells.
pub fn build_graph<T: Scalar>(cloud: PointCloud<T>) -> GeometricGraph<T> {
    let n = cloud.len();
    let dim = cloud.dim();
    if n == 0 {
        return GeometricGraph {
            cloud,
            offsets: vec![0],
            neighbors: Vec::new(),
            edge_count: 0,
        };
    }
    let grid = UniformGrid::build(dim, cloud.box_side(), cloud.coords(), None);
    let coords = cloud.coords();
    let one = T::one();

    let within = |i: usize, j: usize| -> bool {
        let mut d2 = T::zero();
        for a in 0..dim {
            let dx = coords[i * dim + a] - coords[j * dim + a];
            d2 = d2 + dx * dx;
        }
        d2 <= one
    };

    // Two passes over the grid keep memory at exactly the CSR size.
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        let mut deg = 0usize;
        grid.for_each_candidate(cloud.point(i), |j| {
            let j = j as usize;
            if j != i && within(i, j) {
                deg += 1;
            }
        });
        offsets[i + 1] = deg;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut neighbors = vec![0u32; offsets[n]];
    let mut cursor: Vec<usize> = offsets[..n].to_vec();
    for i in 0..n {
        grid.for_each_candidate(cloud.point(i), |j| {
            let ju = j as usize;
            if ju != i && within(i, ju) {
                neighbors[cursor[i]] = j;
                cursor[i] += 1;
            }
        });
        neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    let edge_count = offsets[n] / 2;
    GeometricGraph {
        cloud,
        offsets,
        neighbors,
        edge_count,
    }
}

/// Weighted quick-union with path halving.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            let gp = self.parent[self.parent[v] as usize];
            self.parent[v] = gp;
            v = gp as usize;
        }
        v
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (small, large) = if self.size[ra] < self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = large as u32;
        self.size[large] += self.size[small];
    }
}
