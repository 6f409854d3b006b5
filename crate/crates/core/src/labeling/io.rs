//! Hand-label CSV (`i,j,k,label`) and binary pose-event logs.
//!
//! Pose log records are headerless and fixed size: f64 t, 3×f32 position,
//! 4×f32 quaternion (w, x, y, z), u8 state (1 = TR, 0 = NT).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Point3, Quaternion, UnitQuaternion};

use super::{LabeledVoxelCloud, Provenance, RobotPoseEvent, Traversability};
use crate::binio::{LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::map::VoxelKey;

const POSE_RECORD_BYTES: usize = 8 + 3 * 4 + 4 * 4 + 1;

pub fn write_hand_labels<W: Write>(cloud: &LabeledVoxelCloud, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for (key, label) in &cloud.labels {
        writeln!(w, "{},{},{},{}", key.i, key.j, key.k, label.as_str())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `i,j,k,label` lines. Blank lines and `#` comments are skipped.
pub fn read_hand_labels<R: Read>(input: R, provenance: Provenance) -> Result<LabeledVoxelCloud> {
    let mut cloud = LabeledVoxelCloud::new(provenance);
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("label line {}: {line:?}", lineno + 1));
        if fields.len() != 4 {
            return Err(bad());
        }
        let idx = |s: &str| s.parse::<i32>().map_err(|_| bad());
        let key = VoxelKey::new(idx(fields[0])?, idx(fields[1])?, idx(fields[2])?);
        let label: Traversability = fields[3].parse().map_err(|_| bad())?;
        cloud.labels.push((key, label));
    }
    Ok(cloud)
}

pub fn save_hand_labels(cloud: &LabeledVoxelCloud, path: impl AsRef<Path>) -> Result<()> {
    write_hand_labels(cloud, File::create(path)?)
}

pub fn load_hand_labels(path: impl AsRef<Path>, provenance: Provenance) -> Result<LabeledVoxelCloud> {
    read_hand_labels(File::open(path)?, provenance)
}

pub fn write_pose_log<W: Write>(events: &[RobotPoseEvent], out: W) -> Result<()> {
    let mut w = LeWriter::new(BufWriter::new(out));
    for e in events {
        w.f64(e.t)?;
        for v in e.position.iter() {
            w.f32(*v as f32)?;
        }
        let q = e.orientation.quaternion();
        for v in [q.w, q.i, q.j, q.k] {
            w.f32(v as f32)?;
        }
        w.u8(match e.state {
            Traversability::Traversable => 1,
            Traversability::NonTraversable => 0,
        })?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_pose_log<R: Read>(mut input: R) -> Result<Vec<RobotPoseEvent>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % POSE_RECORD_BYTES != 0 {
        return Err(Error::Truncated("pose log"));
    }
    let n = bytes.len() / POSE_RECORD_BYTES;
    let mut r = LeReader::new(bytes.as_slice(), "pose log");
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let t = r.f64()?;
        let position = Point3::new(r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
        let (w, x, y, z) = (r.f32()? as f64, r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
        let q = Quaternion::new(w, x, y, z);
        // f32 storage leaves ~1e-7 of slack on a unit quaternion
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Parse(format!(
                "pose log: quaternion at t={t} is not normalized (|q| = {})",
                q.norm()
            )));
        }
        let state = match r.u8()? {
            1 => Traversability::Traversable,
            0 => Traversability::NonTraversable,
            s => return Err(Error::Parse(format!("pose log: invalid state byte {s}"))),
        };
        events.push(RobotPoseEvent {
            t,
            position,
            orientation: UnitQuaternion::from_quaternion(q),
            state,
        });
    }
    Ok(events)
}

pub fn save_pose_log(events: &[RobotPoseEvent], path: impl AsRef<Path>) -> Result<()> {
    write_pose_log(events, File::create(path)?)
}

pub fn load_pose_log(path: impl AsRef<Path>) -> Result<Vec<RobotPoseEvent>> {
    read_pose_log(BufReader::new(File::open(path)?))
}
