//! Numerical laboratory for spectra of graph Laplacians on Poisson point
//! clouds.
//!
//! The crate samples supercritical Poisson clouds, builds the unit-distance
//! geometric graph, poses Dirichlet problems on the largest percolation
//! cluster, computes discrete eigenpairs, and measures how eigenvalues and
//! eigenvectors converge to those of the constant-coefficient continuum
//! operator obtained by homogenization.
//!
//! All numerical kernels are generic over the scalar type through
//! [`scalar::Scalar`]; the aliases at the crate root fix `f64`, which is what
//! the command-line driver uses.

pub mod analysis;
pub mod continuum;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod homogenize;
pub mod linalg;
pub mod operator;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};

/// Scalar type used by the CLI and the concrete aliases below.
pub type Real = f64;

pub type PointCloud = geometry::PointCloud<Real>;
pub type GeometricGraph = geometry::GeometricGraph<Real>;
pub type Cluster = geometry::Cluster<Real>;
pub type ClusterFunction = operator::ClusterFunction<Real>;
pub type DirichletOperator = operator::DirichletOperator<Real>;
pub type EigenSet = eigen::EigenSet<Real>;
pub type ContinuumSpectrum = continuum::ContinuumSpectrum<Real>;
pub type EigenfunctionEvaluator = continuum::EigenfunctionEvaluator<Real>;
pub type CorrectorField = homogenize::CorrectorField<Real>;
pub type CoefficientEstimate = homogenize::CoefficientEstimate;
