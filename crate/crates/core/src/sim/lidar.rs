use nalgebra::{Point3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scene::{IntensityProfile, Scene, Shape};
use crate::map::RayRecord;

/// Multi-channel spinning lidar on a mount that tilts its spin axis and
/// advances it about the vertical between scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSpec {
    pub channels: usize,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub azimuth_steps: usize,
    pub mount_tilt_deg: f64,
    pub mount_step_deg: f64,
    pub rate_hz: f64,
    pub min_range: f64,
    pub max_range: f64,
    pub range_sigma: f64,
    /// Chance that a beam passing a thin element reports it as a first return.
    pub split_probability: f64,
    /// Height of the sensor above the robot's ground contact point.
    pub mount_height: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            channels: 16,
            elevation_min_deg: -15.0,
            elevation_max_deg: 15.0,
            azimuth_steps: 900,
            mount_tilt_deg: 45.0,
            mount_step_deg: 47.0,
            rate_hz: 2.0,
            min_range: 0.5,
            max_range: 15.0,
            range_sigma: 0.01,
            split_probability: 0.5,
            mount_height: 0.7,
        }
    }
}

impl LidarSpec {
    pub fn beams_per_scan(&self) -> usize {
        self.channels * self.azimuth_steps
    }

    /// Mount rotation relative to the robot body for the given scan.
    pub fn mount_rotation(&self, scan_index: u64) -> UnitQuaternion<f64> {
        let spin = (self.mount_step_deg * scan_index as f64).to_radians();
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), spin)
            * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), self.mount_tilt_deg.to_radians())
    }

    fn elevation(&self, c: usize) -> f64 {
        if self.channels == 1 {
            return self.elevation_min_deg.to_radians();
        }
        let f = c as f64 / (self.channels - 1) as f64;
        (self.elevation_min_deg + f * (self.elevation_max_deg - self.elevation_min_deg)).to_radians()
    }
}

/// Sensor origin and orientation in the map frame at scan time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub t: f64,
    pub position: Point3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

fn sample_intensity(rng: &mut ChaCha8Rng, p: &IntensityProfile) -> f32 {
    let v = Normal::new(p.mean, p.std.max(1e-12))
        .map(|n| n.sample(rng))
        .unwrap_or(p.mean);
    v.max(0.0) as f32
}

/// Where a beam stops inside an element: blade clusters return from a random
/// depth along the chord, solid surfaces at the entry point.
fn return_depth(rng: &mut ChaCha8Rng, shape: &Shape, t0: f64, t1: f64) -> f64 {
    match shape {
        Shape::BladeCluster { .. } => t0 + rng.random::<f64>() * (t1 - t0),
        _ => t0,
    }
}

struct Scratch {
    seen: Vec<u32>,
    epoch: u32,
    pending: Vec<(f64, f64, u32)>,
}

/// Beam directions of one revolution in the map frame.
pub fn scan_directions(pose: &SensorPose, spec: &LidarSpec, azimuth_offset: f64) -> Vec<Vector3<f64>> {
    let az_step = std::f64::consts::TAU / spec.azimuth_steps.max(1) as f64;
    let mut dirs = Vec::with_capacity(spec.beams_per_scan());
    for c in 0..spec.channels {
        let el = spec.elevation(c);
        for a in 0..spec.azimuth_steps {
            let az = azimuth_offset + a as f64 * az_step;
            let local = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            dirs.push((pose.rotation * local).normalize());
        }
    }
    dirs
}

/// One full revolution of the sensor with a random azimuth offset per scan.
/// Rays are ordered by beam; a split beam yields its first and last return
/// consecutively.
pub fn simulate_scan(scene: &Scene, pose: &SensorPose, spec: &LidarSpec, seed: u64) -> Vec<RayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let az_step = std::f64::consts::TAU / spec.azimuth_steps.max(1) as f64;
    let jitter = rng.random::<f64>() * az_step;
    let dirs = scan_directions(pose, spec, jitter);
    trace_beams(scene, pose, &dirs, spec, &mut rng)
}

/// Traces explicit beam directions from the pose origin.
pub fn simulate_beams(
    scene: &Scene,
    pose: &SensorPose,
    directions: &[Vector3<f64>],
    spec: &LidarSpec,
    seed: u64,
) -> Vec<RayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trace_beams(scene, pose, directions, spec, &mut rng)
}

fn trace_beams(
    scene: &Scene,
    pose: &SensorPose,
    directions: &[Vector3<f64>],
    spec: &LidarSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<RayRecord> {
    let noise = Normal::new(0.0, spec.range_sigma.max(0.0)).expect("finite sigma");
    let mut scratch = Scratch {
        seen: vec![0; scene.elements.len()],
        epoch: 0,
        pending: Vec::new(),
    };
    let mut out = Vec::with_capacity(directions.len());
    for d in directions {
        let d = d.normalize();
        trace_beam(scene, spec, &pose.position, &d, pose.t, &noise, rng, &mut scratch, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn trace_beam(
    scene: &Scene,
    spec: &LidarSpec,
    o: &Point3<f64>,
    d: &Vector3<f64>,
    t: f64,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
    scratch: &mut Scratch,
    out: &mut Vec<RayRecord>,
) {
    let ground = scene.ground_hit(o, d, spec.min_range, spec.max_range);
    let horizon = ground.unwrap_or(spec.max_range);
    scratch.epoch = scratch.epoch.wrapping_add(1);
    if scratch.epoch == 0 {
        scratch.seen.iter_mut().for_each(|s| *s = 0);
        scratch.epoch = 1;
    }
    scratch.pending.clear();
    let mut first: Option<(f64, IntensityProfile)> = None;
    let mut last: Option<(f64, IntensityProfile)> = None;
    let Scratch { seen, epoch, pending } = scratch;
    scene.grid.walk(o, d, horizon, |bucket, t_exit| {
        for &idx in bucket {
            if seen[idx as usize] == *epoch {
                continue;
            }
            seen[idx as usize] = *epoch;
            if let Some((t0, t1)) = scene.elements[idx as usize].shape.chord(o, d) {
                if t1 > spec.min_range && t0 < horizon {
                    pending.push((t0.max(spec.min_range), t1.min(horizon), idx));
                }
            }
        }
        // every element entered before t_exit is registered in a visited bucket
        pending.sort_by(|a, b| b.0.total_cmp(&a.0));
        while let Some(&(t0, t1, idx)) = pending.last() {
            if t0 > t_exit {
                break;
            }
            pending.pop();
            let e = &scene.elements[idx as usize];
            if rng.random::<f64>() < e.p_pass {
                if e.thin && first.is_none() && rng.random::<f64>() < spec.split_probability {
                    first = Some((return_depth(rng, &e.shape, t0, t1), e.intensity));
                }
                continue;
            }
            last = Some((return_depth(rng, &e.shape, t0, t1), e.intensity));
            return false;
        }
        true
    });
    if last.is_none() {
        last = ground.map(|g| (g, scene.ground_intensity));
    }
    let mut emit = |range: f64, profile: &IntensityProfile, rn: u8, nr: u8, rng: &mut ChaCha8Rng| {
        let r = (range + noise.sample(rng)).max(0.05);
        out.push(RayRecord {
            t,
            origin: *o,
            endpoint: o + d * r,
            intensity: sample_intensity(rng, profile),
            return_number: rn,
            num_returns: nr,
        });
    };
    match (first, last) {
        (Some((tf, pf)), Some((tl, pl))) if tf < tl => {
            emit(tf, &pf, 1, 2, rng);
            emit(tl, &pl, 2, 2, rng);
        }
        (_, Some((tl, pl))) => emit(tl, &pl, 1, 1, rng),
        (Some((tf, pf)), None) => emit(tf, &pf, 1, 1, rng),
        (None, None) => {}
    }
}
