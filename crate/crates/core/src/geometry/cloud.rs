use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the expected number of sampled points.
pub const DEFAULT_POINT_CAP: f64 = 1e8;

/// A realization of a homogeneous Poisson point process on the cube
/// `[0, box_side)^dim`, together with the parameters that generated it.
#[derive(Clone, Debug)]
pub struct PointCloud<T: Scalar> {
    dim: usize,
    box_side: T,
    alpha: T,
    seed: u64,
    /// Flat coordinates, `dim` entries per point.
    points: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    /// Wrap externally produced coordinates (deserialization, synthetic test
    /// configurations). The caller vouches that every point lies inside the
    /// box.
    pub fn from_parts(
        dim: usize,
        box_side: T,
        alpha: T,
        seed: u64,
        points: Vec<T>,
    ) -> Self {
        debug_assert_eq!(points.len() % dim.max(1), 0);
        Self {
            dim,
            box_side,
            alpha,
            seed,
            points,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_side(&self) -> T {
        self.box_side
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.points.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[T] {
        &self.points
    }

    /// Distance of point `i` to the boundary of the cube (minimum over the
    /// `2 dim` face distances).
    pub fn dist_to_boundary(&self, i: usize) -> T {
        let p = self.point(i);
        let mut d = T::infinity();
        for &x in p {
            d = d.min(x).min(self.box_side - x);
        }
        d
    }
}

fn validate_params<T: Scalar>(dim: usize, box_side: T, alpha: T) -> Result<()> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::InvalidParameter(format!("dim must be 2 or 3, got {dim}")));
    }
    if !(box_side > T::zero()) || !box_side.is_finite() {
        return Err(Error::InvalidParameter(format!("box_side must be positive, got {box_side}")));
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Sample `N ~ Poisson(alpha * box_side^dim)` points i.i.d. uniform on the
/// box. Deterministic in all arguments.
pub fn sample_poisson<T: Scalar>(dim: usize, box_side: T, alpha: T, seed: u64) -> Result<PointCloud<T>> {
    sample_poisson_capped(dim, box_side, alpha, seed, DEFAULT_POINT_CAP)
}

/// [`sample_poisson`] with an explicit cap on the expected point count.
pub fn sample_poisson_capped<T: Scalar>(
    dim: usize,
    box_side: T,
    alpha: T,
    seed: u64,
    cap: f64,
) -> Result<PointCloud<T>> {
    validate_params(dim, box_side, alpha)?;
    let side_f = box_side.as_f64();
    let mean = alpha.as_f64() * side_f.powi(dim as i32);
    if !(mean <= cap) {
        return Err(Error::PointBudgetExceeded { expected: mean, cap });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("invalid Poisson mean {mean}: {e}")))?;
    let drawn = poisson.sample(&mut rng);
    if !(drawn <= 2.0 * cap) {
        return Err(Error::PointBudgetExceeded { expected: drawn, cap });
    }
    let count = drawn as usize;

    // Largest representable value strictly below box_side, so sampled
    // coordinates always satisfy x < box_side after rounding.
    let below = box_side - box_side * T::epsilon();
    let mut points = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for _ in 0..dim {
            let u: f64 = rng.random();
            let x = T::cast(u * side_f);
            points.push(if x >= box_side { below } else { x });
        }
    }
    Ok(PointCloud::from_parts(dim, box_side, alpha, seed, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_rejected() {
        assert!(matches!(
            sample_poisson::<f64>(2, 9.0, 0.0, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(sample_poisson::<f64>(4, 9.0, 1.0, 1).is_err());
        assert!(sample_poisson::<f64>(2, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_clouds() {
        let a = sample_poisson::<f64>(2, 9.0, 4.0, 123).unwrap();
        let b = sample_poisson::<f64>(2, 9.0, 4.0, 123).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a.coords(), b.coords());
        let c = sample_poisson::<f64>(2, 9.0, 4.0, 124).unwrap();
        assert_ne!(a.coords(), c.coords());
    }

    #[test]
    fn all_points_inside_box() {
        let c = sample_poisson::<f64>(3, 5.0, 2.0, 7).unwrap();
        for i in 0..c.len() {
            for &x in c.point(i) {
                assert!((0.0..5.0).contains(&x));
            }
        }
    }

    #[test]
    fn budget_cap_is_enforced() {
        assert!(matches!(
            sample_poisson_capped::<f64>(2, 100.0, 2.0, 1, 1000.0),
            Err(Error::PointBudgetExceeded { .. })
        ));
    }
}
