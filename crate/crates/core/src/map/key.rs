use nalgebra::Point3;
use serde::{Deserialize, Serialize};

/// Integer grid index of a voxel. Cell `k` covers the half-open interval
/// `[k * resolution, (k + 1) * resolution)` on each axis.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct VoxelKey {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelKey {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    pub fn from_point(p: &Point3<f64>, resolution: f64) -> Self {
        Self {
            i: (p.x / resolution).floor() as i32,
            j: (p.y / resolution).floor() as i32,
            k: (p.z / resolution).floor() as i32,
        }
    }

    pub fn min_corner(&self, resolution: f64) -> Point3<f64> {
        Point3::new(
            self.i as f64 * resolution,
            self.j as f64 * resolution,
            self.k as f64 * resolution,
        )
    }

    pub fn center(&self, resolution: f64) -> Point3<f64> {
        Point3::new(
            (self.i as f64 + 0.5) * resolution,
            (self.j as f64 + 0.5) * resolution,
            (self.k as f64 + 0.5) * resolution,
        )
    }

    pub fn as_array(&self) -> [i32; 3] {
        [self.i, self.j, self.k]
    }

    pub fn offset(&self, di: i32, dj: i32, dk: i32) -> Self {
        Self::new(self.i + di, self.j + dj, self.k + dk)
    }
}

impl From<[i32; 3]> for VoxelKey {
    fn from(v: [i32; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}
