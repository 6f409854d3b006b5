//! Probabilistic voxel map fused from lidar rays.
//!
//! Each ray updates the endpoint voxel with an occupancy hit, the NDT moments,
//! the intensity moments and (for split beams) the multi-return count; every
//! voxel it passes through on the way receives an occupancy miss. Voxels that
//! already hold an NDT distribution additionally count statistical hits and
//! misses of the ray against that distribution.

mod io;
mod key;
mod raycast;
mod stats;

use std::ops::Deref;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use rustc_hash::FxHashMap;

pub use io::{load_map, read_map, read_ray_log, save_map, write_map, write_ply, write_ray_log};
pub use key::VoxelKey;
pub use raycast::{raycast_cells, CellCrossing, SegmentWalk};
pub use stats::{
    regularize_covariance, update_intensity, FeatureVector, NdtDistribution, VoxelStats,
    ABSOLUTE_EIGEN_FLOOR, FEATURE_DIM, HIT_MISS_MAHALANOBIS, MIN_DISTRIBUTION_POINTS,
    RELATIVE_EIGEN_FLOOR,
};

use crate::error::{Error, Result};

/// Occupancy probability assigned to a ray endpoint.
pub const P_HIT: f64 = 0.7;
/// Occupancy probability assigned to cells a ray passes through.
pub const P_MISS: f64 = 0.4;
/// Symmetric clamp on occupancy log-odds.
pub const L_OCC_CLAMP: f64 = 3.92;

pub const DEFAULT_RESOLUTION: f64 = 0.1;

pub fn log_odds(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// One lidar return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRecord {
    pub t: f64,
    pub origin: Point3<f64>,
    pub endpoint: Point3<f64>,
    pub intensity: f32,
    /// 1-based index of this return within its beam.
    pub return_number: u8,
    pub num_returns: u8,
}

impl RayRecord {
    pub fn single(t: f64, origin: Point3<f64>, endpoint: Point3<f64>, intensity: f32) -> Self {
        Self {
            t,
            origin,
            endpoint,
            intensity,
            return_number: 1,
            num_returns: 1,
        }
    }

    pub fn is_multi_return(&self) -> bool {
        self.num_returns >= 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMap {
    resolution: f64,
    frame: String,
    cells: FxHashMap<VoxelKey, VoxelStats>,
}

impl Default for VoxelMap {
    fn default() -> Self {
        Self::new(DEFAULT_RESOLUTION)
    }
}

impl VoxelMap {
    pub fn new(resolution: f64) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self {
            resolution,
            frame: "map".to_owned(),
            cells: FxHashMap::default(),
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn key_of(&self, p: &Point3<f64>) -> VoxelKey {
        VoxelKey::from_point(p, self.resolution)
    }

    pub fn get(&self, key: &VoxelKey) -> Option<&VoxelStats> {
        self.cells.get(key)
    }

    /// All touched cells, including free space that only received misses.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelKey, &VoxelStats)> {
        self.cells.iter()
    }

    /// Cells holding at least one endpoint.
    pub fn active(&self) -> impl Iterator<Item = (&VoxelKey, &VoxelStats)> {
        self.cells.iter().filter(|(_, s)| s.is_active())
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    /// Active keys in ascending order.
    pub fn active_keys(&self) -> Vec<VoxelKey> {
        let mut keys: Vec<_> = self.active().map(|(k, _)| *k).collect();
        keys.sort_unstable();
        keys
    }

    pub(crate) fn insert(&mut self, key: VoxelKey, stats: VoxelStats) {
        self.cells.insert(key, stats);
    }

    /// Fuses one ray. On error the map is left unchanged.
    pub fn integrate_ray(&mut self, ray: &RayRecord) -> Result<()> {
        if !ray.intensity.is_finite() {
            return Err(Error::InvalidRay("non-finite intensity"));
        }
        if ray.return_number < 1 || ray.return_number > ray.num_returns {
            return Err(Error::InvalidRay("return_number outside 1..=num_returns"));
        }
        let walk = SegmentWalk::new(&ray.origin, &ray.endpoint, self.resolution)?;
        let miss = log_odds(P_MISS);
        let hit = log_odds(P_HIT);
        let dir: Vector3<f64> = ray.endpoint - ray.origin;
        let end_key = self.key_of(&ray.endpoint);
        for crossing in walk {
            let stats = self.cells.entry(crossing.key).or_default();
            let a = ray.origin + dir * crossing.t_enter;
            let b = ray.origin + dir * crossing.t_exit;
            if crossing.key == end_key && crossing.t_exit >= 1.0 {
                stats.update_ndt_hit_miss(&a, &ray.endpoint, true);
                stats.l_occ = (stats.l_occ + hit).clamp(-L_OCC_CLAMP, L_OCC_CLAMP);
                stats.update_ndt(&ray.endpoint);
                stats.update_intensity(ray.intensity as f64);
                if ray.is_multi_return() {
                    stats.n_multi_return += 1;
                }
            } else {
                stats.update_ndt_hit_miss(&a, &b, false);
                stats.l_occ = (stats.l_occ + miss).clamp(-L_OCC_CLAMP, L_OCC_CLAMP);
            }
        }
        Ok(())
    }

    /// Integrates rays in order, returning how many were rejected.
    pub fn integrate_all<'a>(&mut self, rays: impl IntoIterator<Item = &'a RayRecord>) -> usize {
        let mut rejected = 0;
        for ray in rays {
            if self.integrate_ray(ray).is_err() {
                rejected += 1;
            }
        }
        rejected
    }

    pub fn snapshot(&self, t: f64) -> MapSnapshot {
        MapSnapshot {
            t,
            map: Arc::new(self.clone()),
        }
    }

    /// Feature rows of the active voxels whose centers lie in the box
    /// `center ± extent / 2`, sorted by key.
    pub fn extract_feature_map(
        &self,
        center: &Point3<f64>,
        extent: &Vector3<f64>,
    ) -> Vec<(VoxelKey, FeatureVector)> {
        let lo = center - extent / 2.0;
        let hi = center + extent / 2.0;
        let mut out: Vec<_> = self
            .active()
            .filter(|(k, _)| {
                let c = k.center(self.resolution);
                (0..3).all(|a| c[a] >= lo[a] && c[a] <= hi[a])
            })
            .map(|(k, s)| (*k, s.feature_vector()))
            .collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }

    /// Feature rows of every active voxel, sorted by key.
    pub fn feature_cloud(&self) -> Vec<(VoxelKey, FeatureVector)> {
        let mut out: Vec<_> = self
            .active()
            .map(|(k, s)| (*k, s.feature_vector()))
            .collect();
        out.sort_unstable_by_key(|(k, _)| *k);
        out
    }
}

/// Immutable copy of the map as it stood at time `t`.
#[derive(Debug, Clone)]
pub struct MapSnapshot {
    t: f64,
    map: Arc<VoxelMap>,
}

impl MapSnapshot {
    pub fn time(&self) -> f64 {
        self.t
    }
}

impl Deref for MapSnapshot {
    type Target = VoxelMap;

    fn deref(&self) -> &VoxelMap {
        &self.map
    }
}
