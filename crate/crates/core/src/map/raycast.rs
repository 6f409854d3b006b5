//! Grid traversal of a line segment through the voxel lattice.
//!
//! Works in lattice units (coordinates divided by the resolution) so cell
//! boundaries sit on integers and agree with [`VoxelKey::from_point`]. Each
//! axis steps exactly `|end - start|` times, which pins the last cell to the
//! endpoint's cell regardless of accumulated rounding in the crossing times.

use nalgebra::{Point3, Vector3};

use super::VoxelKey;
use crate::error::{Error, Result};

/// One cell visited by a segment, with the segment parameters (in `[0, 1]`)
/// at which the segment enters and leaves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCrossing {
    pub key: VoxelKey,
    pub t_enter: f64,
    pub t_exit: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentWalk {
    current: [i32; 3],
    step: [i32; 3],
    remaining: [u32; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    t_enter: f64,
    done: bool,
}

impl SegmentWalk {
    pub fn new(origin: &Point3<f64>, endpoint: &Point3<f64>, resolution: f64) -> Result<Self> {
        let a = origin.coords / resolution;
        let b = endpoint.coords / resolution;
        if !(a.iter().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidRay("non-finite ray geometry"));
        }
        if origin == endpoint {
            return Err(Error::DegenerateRay);
        }
        let d: Vector3<f64> = b - a;
        let mut walk = SegmentWalk {
            current: [0; 3],
            step: [0; 3],
            remaining: [0; 3],
            t_max: [f64::INFINITY; 3],
            t_delta: [f64::INFINITY; 3],
            t_enter: 0.0,
            done: false,
        };
        for axis in 0..3 {
            let start = a[axis].floor();
            let end = b[axis].floor();
            walk.current[axis] = start as i32;
            walk.remaining[axis] = (end - start).abs() as u32;
            if d[axis] > 0.0 {
                walk.step[axis] = 1;
                walk.t_max[axis] = (start + 1.0 - a[axis]) / d[axis];
                walk.t_delta[axis] = 1.0 / d[axis];
            } else if d[axis] < 0.0 {
                walk.step[axis] = -1;
                walk.t_max[axis] = (start - a[axis]) / d[axis];
                walk.t_delta[axis] = -1.0 / d[axis];
            }
        }
        Ok(walk)
    }
}

impl Iterator for SegmentWalk {
    type Item = CellCrossing;

    fn next(&mut self) -> Option<CellCrossing> {
        if self.done {
            return None;
        }
        let key = VoxelKey::from(self.current);
        let mut axis = None;
        for ax in 0..3 {
            if self.remaining[ax] == 0 {
                continue;
            }
            match axis {
                None => axis = Some(ax),
                Some(best) if self.t_max[ax] < self.t_max[best] => axis = Some(ax),
                _ => {}
            }
        }
        let crossing = match axis {
            None => {
                self.done = true;
                CellCrossing {
                    key,
                    t_enter: self.t_enter,
                    t_exit: 1.0,
                }
            }
            Some(ax) => {
                let t_exit = self.t_max[ax].clamp(self.t_enter, 1.0);
                self.current[ax] += self.step[ax];
                self.remaining[ax] -= 1;
                self.t_max[ax] += self.t_delta[ax];
                let c = CellCrossing {
                    key,
                    t_enter: self.t_enter,
                    t_exit,
                };
                self.t_enter = t_exit;
                c
            }
        };
        Some(crossing)
    }
}

/// Every cell the segment `origin -> endpoint` passes through, in order, each once.
pub fn raycast_cells(
    origin: &Point3<f64>,
    endpoint: &Point3<f64>,
    resolution: f64,
) -> Result<Vec<VoxelKey>> {
    Ok(SegmentWalk::new(origin, endpoint, resolution)?
        .map(|c| c.key)
        .collect())
}
