use nalgebra::{Point3, UnitQuaternion, Vector3};

use super::lidar::{simulate_scan, LidarSpec, SensorPose};
use super::scene::Scene;
use crate::labeling::{OrientedBox, RobotGeometry, RobotPoseEvent, Traversability};
use crate::map::RayRecord;

/// Waypoint route and driving behaviour of a simulated traverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionSpec {
    pub waypoints: Vec<(f64, f64)>,
    pub speed: f64,
    pub control_dt: f64,
    /// Period of traversable pose events while driving forward.
    pub pose_interval: f64,
    pub backoff: f64,
    pub detour_length: f64,
    pub max_collisions_per_waypoint: usize,
    pub waypoint_tolerance: f64,
    pub max_duration: f64,
}

impl MissionSpec {
    pub fn new(waypoints: Vec<(f64, f64)>) -> Self {
        Self {
            waypoints,
            speed: 0.5,
            control_dt: 0.1,
            pose_interval: 0.5,
            backoff: 0.5,
            detour_length: 1.5,
            max_collisions_per_waypoint: 4,
            waypoint_tolerance: 0.3,
            max_duration: 900.0,
        }
    }

    /// Back-and-forth rows covering a rectangle, `spacing` apart and `margin`
    /// from its edges.
    pub fn lawnmower(extent_x: f64, extent_y: f64, spacing: f64, margin: f64) -> Self {
        let mut pts = Vec::new();
        let mut y = margin;
        let mut forward = true;
        while y <= extent_y - margin + 1e-9 {
            let (a, b) = if forward {
                (margin, extent_x - margin)
            } else {
                (extent_x - margin, margin)
            };
            pts.push((a, y));
            pts.push((b, y));
            forward = !forward;
            y += spacing;
        }
        Self::new(pts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MissionStatus {
    Complete,
    /// Indices of waypoints the robot gave up on.
    Partial { unreached: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct MissionLog {
    /// Empty when rays were streamed to a sink instead.
    pub rays: Vec<RayRecord>,
    /// Traversable and collision events in time order.
    pub poses: Vec<RobotPoseEvent>,
    pub status: MissionStatus,
    pub duration: f64,
    pub scans: u64,
}

struct Driver<'a, F: FnMut(&[RayRecord])> {
    scene: &'a Scene,
    spec: &'a MissionSpec,
    geom: &'a RobotGeometry,
    lidar: &'a LidarSpec,
    seed: u64,
    sink: F,
    x: f64,
    y: f64,
    yaw: f64,
    t: f64,
    next_scan: f64,
    next_pose: f64,
    scans: u64,
    poses: Vec<RobotPoseEvent>,
}

enum Drive {
    Done,
    Blocked,
}

impl<F: FnMut(&[RayRecord])> Driver<'_, F> {
    fn position_at(&self, x: f64, y: f64) -> Point3<f64> {
        Point3::new(x, y, self.scene.ground_height(x, y))
    }

    fn rotation(yaw: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
    }

    fn boxes_at(&self, x: f64, y: f64, yaw: f64) -> (OrientedBox, OrientedBox) {
        let p = self.position_at(x, y);
        let r = Self::rotation(yaw);
        (
            OrientedBox::from_body(&self.geom.body_box(), &p, &r),
            OrientedBox::from_body(&self.geom.front_slab(), &p, &r),
        )
    }

    fn body_clear(&self, x: f64, y: f64, yaw: f64) -> bool {
        self.scene
            .nt_elements_overlapping(&self.boxes_at(x, y, yaw).0)
            .is_empty()
    }

    fn slab_clear(&self, x: f64, y: f64, yaw: f64) -> bool {
        self.scene
            .nt_elements_overlapping(&self.boxes_at(x, y, yaw).1)
            .is_empty()
    }

    fn event(&self, state: Traversability) -> RobotPoseEvent {
        RobotPoseEvent::new(self.t, self.position_at(self.x, self.y), self.yaw, state)
    }

    /// Advances the clock one control step, scanning when due.
    fn tick(&mut self) {
        self.t += self.spec.control_dt;
        let period = 1.0 / self.lidar.rate_hz;
        while self.t >= self.next_scan {
            let base = self.position_at(self.x, self.y);
            let body = Self::rotation(self.yaw);
            let pose = SensorPose {
                t: self.t,
                position: base + body * Vector3::new(0.0, 0.0, self.lidar.mount_height),
                rotation: body * self.lidar.mount_rotation(self.scans),
            };
            let scan_seed = self
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(self.scans.wrapping_mul(0xD1B5_4A32_D192_ED03));
            let rays = simulate_scan(self.scene, &pose, self.lidar, scan_seed);
            (self.sink)(&rays);
            self.scans += 1;
            self.next_scan += period;
        }
    }

    fn turn_to(&mut self, yaw: f64) {
        let mut delta = (yaw - self.yaw).rem_euclid(std::f64::consts::TAU);
        if delta > std::f64::consts::PI {
            delta -= std::f64::consts::TAU;
        }
        // turn in place at 1 rad/s
        let steps = (delta.abs() / self.spec.control_dt).ceil() as usize;
        for s in 1..=steps {
            self.yaw = yaw - delta + delta * s as f64 / steps as f64;
            self.tick();
        }
        self.yaw = yaw;
    }

    /// Drives straight for `dist` (negative reverses). Forward motion stops
    /// with a collision event once the front slab meets an obstacle.
    fn drive(&mut self, dist: f64) -> Drive {
        let step = self.spec.speed * self.spec.control_dt;
        let mut remaining = dist.abs();
        let sign = dist.signum();
        while remaining > 1e-9 && self.t < self.spec.max_duration {
            let s = step.min(remaining) * sign;
            let nx = self.x + s * self.yaw.cos();
            let ny = self.y + s * self.yaw.sin();
            if sign > 0.0 && !self.slab_clear(nx, ny, self.yaw) {
                if self.body_clear(nx, ny, self.yaw) {
                    self.x = nx;
                    self.y = ny;
                }
                self.poses.push(self.event(Traversability::NonTraversable));
                self.tick();
                return Drive::Blocked;
            }
            if !self.body_clear(nx, ny, self.yaw) {
                return Drive::Blocked;
            }
            self.x = nx;
            self.y = ny;
            remaining -= s.abs();
            self.tick();
            if sign > 0.0 && self.t >= self.next_pose {
                self.poses.push(self.event(Traversability::Traversable));
                self.next_pose = self.t + self.spec.pose_interval;
            }
        }
        Drive::Done
    }

    /// A heading whose next `len` metres keep the slab and body clear.
    fn find_detour(&self, goal_yaw: f64, attempt: usize, len: f64) -> Option<f64> {
        let quarter = std::f64::consts::FRAC_PI_4;
        let side = if attempt % 2 == 0 { 1.0 } else { -1.0 };
        for k in [1.0, -1.0, 2.0, -2.0, 3.0, -3.0] {
            let yaw = goal_yaw + side * k * quarter;
            let n = (len / 0.1).ceil() as usize;
            let clear = (0..=n).all(|s| {
                let d = len * s as f64 / n as f64;
                let x = self.x + d * yaw.cos();
                let y = self.y + d * yaw.sin();
                self.slab_clear(x, y, yaw) && self.body_clear(x, y, yaw)
            });
            if clear {
                return Some(yaw);
            }
        }
        None
    }

    /// Closest position on rings of 0.1 m spacing, up to 3 m out, where the
    /// body and the slab ahead are clear, keeping a further 0.2 m of room
    /// so the first turn toward the route does not graze the obstacle.
    fn nearest_clear_start(&self) -> Option<(f64, f64)> {
        let clear = |r: f64, phi: f64| {
            let (x, y) = (self.x + r * phi.cos(), self.y + r * phi.sin());
            self.body_clear(x, y, self.yaw) && self.slab_clear(x, y, self.yaw)
        };
        (1..=30).find_map(|ring| {
            let r = 0.1 * ring as f64;
            (0..16).find_map(|a| {
                let phi = std::f64::consts::TAU * a as f64 / 16.0;
                let out = r + 0.2;
                (clear(r, phi) && clear(out, phi))
                    .then(|| (self.x + out * phi.cos(), self.y + out * phi.sin()))
            })
        })
    }

    fn goto(&mut self, wx: f64, wy: f64) -> bool {
        let mut collisions = 0;
        loop {
            if self.t >= self.spec.max_duration {
                return false;
            }
            let dx = wx - self.x;
            let dy = wy - self.y;
            let dist = dx.hypot(dy);
            if dist < self.spec.waypoint_tolerance {
                return true;
            }
            let goal_yaw = dy.atan2(dx);
            self.turn_to(goal_yaw);
            if let Drive::Done = self.drive(dist) {
                continue;
            }
            collisions += 1;
            if collisions > self.spec.max_collisions_per_waypoint {
                return false;
            }
            self.drive(-self.spec.backoff);
            let Some(yaw) = self.find_detour(goal_yaw, collisions, self.spec.detour_length) else {
                return false;
            };
            self.turn_to(yaw);
            self.drive(self.spec.detour_length);
        }
    }
}

/// Drives the waypoint route, streaming each scan's rays to `sink`.
pub fn simulate_mission_with(
    scene: &Scene,
    mission: &MissionSpec,
    geom: &RobotGeometry,
    lidar: &LidarSpec,
    seed: u64,
    sink: impl FnMut(&[RayRecord]),
) -> MissionLog {
    let (x, y) = mission.waypoints.first().copied().unwrap_or((0.0, 0.0));
    let yaw = match mission.waypoints.get(1) {
        Some(&(bx, by)) => (by - y).atan2(bx - x),
        None => 0.0,
    };
    let mut d = Driver {
        scene,
        spec: mission,
        geom,
        lidar,
        seed,
        sink,
        x,
        y,
        yaw,
        t: 0.0,
        next_scan: 0.0,
        next_pose: 0.0,
        scans: 0,
        poses: Vec::new(),
    };
    if !d.body_clear(d.x, d.y, d.yaw) {
        match d.nearest_clear_start() {
            Some((sx, sy)) => {
                log::warn!("start ({x:.2}, {y:.2}) overlaps an obstacle; starting at ({sx:.2}, {sy:.2})");
                d.x = sx;
                d.y = sy;
            }
            None => log::warn!("no clear start near ({x:.2}, {y:.2})"),
        }
    }
    let mut unreached = Vec::new();
    for (idx, &(wx, wy)) in mission.waypoints.iter().enumerate().skip(1) {
        if !d.goto(wx, wy) {
            log::warn!("waypoint {idx} ({wx:.2}, {wy:.2}) not reached");
            unreached.push(idx);
        }
    }
    let status = if unreached.is_empty() {
        MissionStatus::Complete
    } else {
        MissionStatus::Partial { unreached }
    };
    MissionLog {
        rays: Vec::new(),
        poses: d.poses,
        status,
        duration: d.t,
        scans: d.scans,
    }
}

/// Drives the waypoint route and keeps every ray.
pub fn simulate_mission(
    scene: &Scene,
    mission: &MissionSpec,
    geom: &RobotGeometry,
    lidar: &LidarSpec,
    seed: u64,
) -> MissionLog {
    let mut rays = Vec::new();
    let mut log = simulate_mission_with(scene, mission, geom, lidar, seed, |r| {
        rays.extend_from_slice(r)
    });
    log.rays = rays;
    log
}
