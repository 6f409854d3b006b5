//! Per-voxel ray statistics: NDT moments, occupancy, intensity and ray counts.

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

/// Length of the per-voxel network input.
pub const FEATURE_DIM: usize = 13;

/// Lower bound on a voxel's NDT eigenvalues, relative to the largest one.
pub const RELATIVE_EIGEN_FLOOR: f64 = 1e-4;
/// Absolute eigenvalue floor in m².
pub const ABSOLUTE_EIGEN_FLOOR: f64 = 1e-9;

/// Mahalanobis radius within which a ray counts as ending in / passing through
/// a voxel's distribution.
pub const HIT_MISS_MAHALANOBIS: f64 = 2.0;
/// Points required before a voxel's distribution is used for hit/miss counts.
pub const MIN_DISTRIBUTION_POINTS: u32 = 3;

/// Feature row in the fixed order
/// `[s11, s21, s22, s31, s32, s33, n_occ, l_occ, int_mean, int_var, n_hit, n_miss, n_mr]`
/// where `s..` are the lower-triangular entries of the Cholesky factor of the
/// regularized covariance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector(pub [f32; FEATURE_DIM]);

impl FeatureVector {
    pub const NAMES: [&'static str; FEATURE_DIM] = [
        "s11", "s21", "s22", "s31", "s32", "s33", "n_occ", "l_occ", "int_mean", "int_var",
        "n_hit", "n_miss", "n_mr",
    ];

    /// Lower-triangular square-root covariance stored in the first six entries.
    pub fn sqrt_covariance(&self) -> Matrix3<f64> {
        let s = self.0.map(f64::from);
        Matrix3::new(s[0], 0.0, 0.0, s[1], s[2], 0.0, s[3], s[4], s[5])
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        let s = self.sqrt_covariance();
        s * s.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VoxelStats {
    /// Ray endpoints that fell in this voxel.
    pub n_points: u32,
    /// Sum of endpoint positions.
    pub sum: [f64; 3],
    /// Sum of endpoint outer products, packed `xx, xy, yy, xz, yz, zz`.
    pub second_moment: [f64; 6],
    pub l_occ: f64,
    pub intensity_mean: f64,
    /// Sample variance of intensity (1/(n-1)); zero below two samples.
    pub intensity_var: f64,
    pub n_hit: u32,
    pub n_miss: u32,
    pub n_multi_return: u32,
}

impl VoxelStats {
    pub fn is_active(&self) -> bool {
        self.n_points >= 1
    }

    pub fn has_distribution(&self) -> bool {
        self.n_points >= MIN_DISTRIBUTION_POINTS
    }

    /// Adds one endpoint to the NDT moments.
    pub fn update_ndt(&mut self, p: &Point3<f64>) {
        self.n_points += 1;
        self.sum[0] += p.x;
        self.sum[1] += p.y;
        self.sum[2] += p.z;
        let m = &mut self.second_moment;
        m[0] += p.x * p.x;
        m[1] += p.x * p.y;
        m[2] += p.y * p.y;
        m[3] += p.x * p.z;
        m[4] += p.y * p.z;
        m[5] += p.z * p.z;
    }

    pub fn mean(&self) -> Option<Point3<f64>> {
        (self.n_points > 0).then(|| {
            let n = self.n_points as f64;
            Point3::new(self.sum[0] / n, self.sum[1] / n, self.sum[2] / n)
        })
    }

    /// Unregularized sample covariance; the zero matrix below two points.
    pub fn covariance(&self) -> Matrix3<f64> {
        if self.n_points < 2 {
            return Matrix3::zeros();
        }
        let n = self.n_points as f64;
        let s = Vector3::from(self.sum);
        let m = &self.second_moment;
        let raw = Matrix3::new(m[0], m[1], m[3], m[1], m[2], m[4], m[3], m[4], m[5]);
        (raw - s * s.transpose() / n) / (n - 1.0)
    }

    pub fn regularized_covariance(&self) -> Matrix3<f64> {
        regularize_covariance(&self.covariance())
    }

    /// Lower Cholesky factor of the regularized covariance, zero below two points.
    pub fn sqrt_covariance(&self) -> Matrix3<f64> {
        if self.n_points < 2 {
            return Matrix3::zeros();
        }
        cholesky_lower(&self.regularized_covariance())
    }

    pub fn update_intensity(&mut self, intensity: f64) {
        update_intensity(
            &mut self.intensity_mean,
            &mut self.intensity_var,
            self.n_points,
            intensity,
        );
    }

    pub fn distribution(&self) -> Option<NdtDistribution> {
        if !self.has_distribution() {
            return None;
        }
        let cov = self.regularized_covariance();
        Some(NdtDistribution {
            mean: self.mean()?,
            precision: cov.try_inverse()?,
        })
    }

    /// Counts the segment `a -> b` (the part of a ray inside this voxel) as a hit
    /// when it ended here within [`HIT_MISS_MAHALANOBIS`] of the distribution, or
    /// as a miss when it passed that close. Voxels without a distribution are
    /// left untouched.
    pub fn update_ndt_hit_miss(&mut self, a: &Point3<f64>, b: &Point3<f64>, ended_here: bool) {
        let Some(dist) = self.distribution() else {
            return;
        };
        if ended_here {
            if dist.mahalanobis(b) <= HIT_MISS_MAHALANOBIS {
                self.n_hit += 1;
            }
        } else if dist.segment_min_mahalanobis(a, b) <= HIT_MISS_MAHALANOBIS {
            self.n_miss += 1;
        }
    }

    pub fn feature_vector(&self) -> FeatureVector {
        let s = self.sqrt_covariance();
        FeatureVector([
            s[(0, 0)] as f32,
            s[(1, 0)] as f32,
            s[(1, 1)] as f32,
            s[(2, 0)] as f32,
            s[(2, 1)] as f32,
            s[(2, 2)] as f32,
            self.n_points as f32,
            self.l_occ as f32,
            self.intensity_mean as f32,
            self.intensity_var as f32,
            self.n_hit as f32,
            self.n_miss as f32,
            self.n_multi_return as f32,
        ])
    }
}

/// A voxel's Gaussian in the form needed for Mahalanobis queries.
#[derive(Debug, Clone, Copy)]
pub struct NdtDistribution {
    pub mean: Point3<f64>,
    pub precision: Matrix3<f64>,
}

impl NdtDistribution {
    pub fn mahalanobis(&self, p: &Point3<f64>) -> f64 {
        let d = p - self.mean;
        d.dot(&(self.precision * d)).max(0.0).sqrt()
    }

    /// Smallest Mahalanobis distance over the closed segment `a -> b`.
    pub fn segment_min_mahalanobis(&self, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
        let dir = b - a;
        let pd = self.precision * dir;
        let denom = dir.dot(&pd);
        let t = if denom > 0.0 {
            (-(a - self.mean).dot(&pd) / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.mahalanobis(&(a + dir * t))
    }
}

/// Floors the eigenvalues of a symmetric matrix at
/// `max(RELATIVE_EIGEN_FLOOR * λ_max, ABSOLUTE_EIGEN_FLOOR)` and reassembles it.
pub fn regularize_covariance(cov: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = SymmetricEigen::new(*cov);
    let lambda_max = eig.eigenvalues.max();
    let floor = (RELATIVE_EIGEN_FLOOR * lambda_max).max(ABSOLUTE_EIGEN_FLOOR);
    let floored = eig.eigenvalues.map(|l| l.max(floor));
    let v = eig.eigenvectors;
    let out = v * Matrix3::from_diagonal(&floored) * v.transpose();
    // re-symmetrize away rounding
    (out + out.transpose()) * 0.5
}

pub(crate) fn cholesky_lower(m: &Matrix3<f64>) -> Matrix3<f64> {
    nalgebra::Cholesky::new(*m)
        .map(|c| c.l())
        .unwrap_or_else(Matrix3::zeros)
}

/// Welford step for a running mean and sample variance, where `count` already
/// includes the new sample `x`.
pub fn update_intensity(mean: &mut f64, var: &mut f64, count: u32, x: f64) {
    if count <= 1 {
        *mean = x;
        *var = 0.0;
        return;
    }
    let n = count as f64;
    let mut m2 = *var * (n - 2.0);
    let delta = x - *mean;
    *mean += delta / n;
    m2 += delta * (x - *mean);
    *var = (m2 / (n - 1.0)).max(0.0);
}
