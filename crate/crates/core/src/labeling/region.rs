//! Robot footprint geometry for experience labels.

use nalgebra::{Point3, UnitQuaternion, Vector3};

use super::Traversability;
use crate::error::{Error, Result};
use crate::map::VoxelKey;

/// Forward extension of the collision slab beyond the robot's front face, m.
pub const DEFAULT_FRONT_EXTENSION: f64 = 0.2;

/// Overlaps thinner than this (m) do not count as intersections.
const OVERLAP_EPS: f64 = 1e-9;

/// Robot bounding box. In the body frame the box spans
/// `x ∈ [-length/2, length/2]`, `y ∈ [-width/2, width/2]`, `z ∈ [0, height]`,
/// with `+x` the heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotGeometry {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub front_extension: f64,
}

impl RobotGeometry {
    pub fn new(length: f64, width: f64, height: f64) -> Result<Self> {
        let g = Self {
            length,
            width,
            height,
            front_extension: DEFAULT_FRONT_EXTENSION,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.length, self.width, self.height, self.front_extension];
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "robot geometry must be positive, got {dims:?}"
            )))
        }
    }

    /// Body-frame box touched by a traverse.
    pub fn body_box(&self) -> BodyBox {
        BodyBox {
            center: Vector3::new(0.0, 0.0, self.height / 2.0),
            half: Vector3::new(self.length / 2.0, self.width / 2.0, self.height / 2.0),
        }
    }

    /// Body-frame slab ahead of the front face blamed for a collision.
    pub fn front_slab(&self) -> BodyBox {
        BodyBox {
            center: Vector3::new(
                (self.length + self.front_extension) / 2.0,
                0.0,
                self.height / 2.0,
            ),
            half: Vector3::new(self.front_extension / 2.0, self.width / 2.0, self.height / 2.0),
        }
    }
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            length: 1.0,
            width: 0.6,
            height: 0.5,
            front_extension: DEFAULT_FRONT_EXTENSION,
        }
    }
}

/// Axis-aligned box in the robot body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyBox {
    pub center: Vector3<f64>,
    pub half: Vector3<f64>,
}

/// A recorded robot pose and whether the robot was traversing freely (`TR`)
/// or in collision (`NT`) at that moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPoseEvent {
    pub t: f64,
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub state: Traversability,
}

impl RobotPoseEvent {
    pub fn new(t: f64, position: Point3<f64>, yaw: f64, state: Traversability) -> Self {
        Self {
            t,
            position,
            orientation: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            state,
        }
    }

    pub fn heading(&self) -> Vector3<f64> {
        self.orientation * Vector3::x()
    }
}

/// World-frame oriented box.
#[derive(Debug, Clone, Copy)]
pub struct OrientedBox {
    pub center: Point3<f64>,
    pub axes: [Vector3<f64>; 3],
    pub half: Vector3<f64>,
}

impl OrientedBox {
    pub fn from_body(b: &BodyBox, pose_position: &Point3<f64>, rot: &UnitQuaternion<f64>) -> Self {
        Self {
            center: pose_position + rot * b.center,
            axes: [rot * Vector3::x(), rot * Vector3::y(), rot * Vector3::z()],
            half: b.half,
        }
    }

    pub fn axis_aligned(min: Point3<f64>, max: Point3<f64>) -> Self {
        Self {
            center: nalgebra::center(&min, &max),
            axes: [Vector3::x(), Vector3::y(), Vector3::z()],
            half: (max - min) / 2.0,
        }
    }

    pub fn corners(&self) -> impl Iterator<Item = Point3<f64>> + '_ {
        (0..8).map(move |c| {
            let s = |bit: usize| if c & bit == 0 { -1.0 } else { 1.0 };
            self.center
                + self.axes[0] * (s(1) * self.half.x)
                + self.axes[1] * (s(2) * self.half.y)
                + self.axes[2] * (s(4) * self.half.z)
        })
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        let d = p - self.center;
        (0..3).all(|a| d.dot(&self.axes[a]).abs() <= self.half[a])
    }

    fn radius_along(&self, axis: &Vector3<f64>) -> f64 {
        (0..3)
            .map(|a| self.half[a] * self.axes[a].dot(axis).abs())
            .sum()
    }

    /// Separating-axis test; touching faces do not count as overlap.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let t = other.center - self.center;
        let mut candidates: Vec<Vector3<f64>> = Vec::with_capacity(15);
        candidates.extend_from_slice(&self.axes);
        candidates.extend_from_slice(&other.axes);
        for a in &self.axes {
            for b in &other.axes {
                let c = a.cross(b);
                let n = c.norm();
                if n > 1e-9 {
                    candidates.push(c / n);
                }
            }
        }
        candidates.iter().all(|axis| {
            let gap = self.radius_along(axis) + other.radius_along(axis) - t.dot(axis).abs();
            gap > OVERLAP_EPS
        })
    }

    /// Keys of all voxels sharing positive volume with the box.
    pub fn voxelize(&self, resolution: f64) -> Vec<VoxelKey> {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in self.corners() {
            lo = lo.inf(&c);
            hi = hi.sup(&c);
        }
        let kl = VoxelKey::from_point(&lo, resolution);
        let kh = VoxelKey::from_point(&hi, resolution);
        let mut keys = Vec::new();
        for i in kl.i..=kh.i {
            for j in kl.j..=kh.j {
                for k in kl.k..=kh.k {
                    let key = VoxelKey::new(i, j, k);
                    let min = key.min_corner(resolution);
                    let cell = OrientedBox::axis_aligned(
                        min,
                        min + Vector3::repeat(resolution),
                    );
                    if self.overlaps(&cell) {
                        keys.push(key);
                    }
                }
            }
        }
        keys
    }
}

/// Voxels observed by one pose event: the whole robot box for a traverse, the
/// front slab for a collision.
pub fn collision_region(
    pose: &RobotPoseEvent,
    geom: &RobotGeometry,
    resolution: f64,
) -> Vec<VoxelKey> {
    let body = match pose.state {
        Traversability::Traversable => geom.body_box(),
        Traversability::NonTraversable => geom.front_slab(),
    };
    OrientedBox::from_body(&body, &pose.position, &pose.orientation).voxelize(resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn identity_traverse_covers_block() {
        let pose = RobotPoseEvent::new(0.0, Point3::origin(), 0.0, Traversability::Traversable);
        let keys: BTreeSet<_> = collision_region(&pose, &RobotGeometry::default(), 0.1)
            .into_iter()
            .collect();
        let mut expect = BTreeSet::new();
        for i in -5..5 {
            for j in -3..3 {
                for k in 0..5 {
                    expect.insert(VoxelKey::new(i, j, k));
                }
            }
        }
        assert_eq!(keys, expect);
    }

    #[test]
    fn identity_collision_covers_front_slab() {
        let pose = RobotPoseEvent::new(0.0, Point3::origin(), 0.0, Traversability::NonTraversable);
        let keys = collision_region(&pose, &RobotGeometry::default(), 0.1);
        assert_eq!(keys.len(), 2 * 6 * 5);
        assert!(keys.iter().all(|k| k.i == 5 || k.i == 6));
    }

    #[test]
    fn rejects_nonpositive_geometry() {
        assert!(RobotGeometry::new(1.0, 0.0, 0.5).is_err());
    }
}
