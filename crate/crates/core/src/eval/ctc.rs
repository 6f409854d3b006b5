use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::labeling::Traversability;
use crate::map::{VoxelStats, MIN_DISTRIBUTION_POINTS};

/// Slope and roughness limits of the geometric baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtcConfig {
    pub slope_limit_deg: f64,
    /// Limit on the smallest covariance eigenvalue, m².
    pub roughness_limit: f64,
}

impl Default for CtcConfig {
    fn default() -> Self {
        Self {
            slope_limit_deg: 30.0,
            roughness_limit: 0.001,
        }
    }
}

/// Eigen-analysis of a voxel's point distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceShape {
    /// Eigenvalues in descending order.
    pub eigenvalues: [f64; 3],
    /// Eigenvector of the smallest eigenvalue.
    pub normal: Vector3<f64>,
}

impl SurfaceShape {
    pub fn from_covariance(cov: &Matrix3<f64>) -> Self {
        let eig = SymmetricEigen::new(*cov);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        Self {
            eigenvalues: idx.map(|i| eig.eigenvalues[i]),
            normal: eig.eigenvectors.column(idx[2]).into_owned(),
        }
    }

    /// Angle between the surface normal and the vertical, degrees.
    pub fn slope_deg(&self) -> f64 {
        self.normal.z.abs().min(1.0).acos().to_degrees()
    }

    pub fn roughness(&self) -> f64 {
        self.eigenvalues[2]
    }
}

/// Geometric traversability heuristic; voxels without a point distribution
/// are non-traversable.
pub fn ctc_classify(stats: &VoxelStats, cfg: &CtcConfig) -> Traversability {
    if stats.n_points < MIN_DISTRIBUTION_POINTS as u32 {
        return Traversability::NonTraversable;
    }
    ctc_classify_covariance(&stats.regularized_covariance(), cfg)
}

pub fn ctc_classify_covariance(cov: &Matrix3<f64>, cfg: &CtcConfig) -> Traversability {
    let shape = SurfaceShape::from_covariance(cov);
    if shape.slope_deg() > cfg.slope_limit_deg || shape.roughness() > cfg.roughness_limit {
        Traversability::NonTraversable
    } else {
        Traversability::Traversable
    }
}
