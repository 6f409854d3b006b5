//! Map and ray-log files.
//!
//! Map file (little-endian): magic `FTVM`, u16 version, f64 resolution, u64
//! count, then one record per cell sorted by key: 3×i32 key, u32 n_points,
//! 3×f64 sum, 6×f64 second moment (xx, xy, yy, xz, yz, zz), f64 l_occ, f64
//! intensity mean, f64 intensity variance, u32 n_hit, u32 n_miss, u32
//! n_multi_return.
//!
//! Ray log: magic `FTRL`, u16 version, u64 count, then per ray f64 t, 3×f64
//! origin, 3×f64 endpoint, f32 intensity, u8 return number, u8 return count.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Point3;

use super::{RayRecord, VoxelKey, VoxelMap, VoxelStats};
use crate::binio::{LeReader, LeWriter};
use crate::error::Result;

const MAP_MAGIC: &str = "FTVM";
const MAP_VERSION: u16 = 1;
const RAY_MAGIC: &str = "FTRL";
const RAY_VERSION: u16 = 1;

pub fn write_map<W: Write>(map: &VoxelMap, out: W) -> Result<()> {
    let mut w = LeWriter::new(out);
    w.bytes(MAP_MAGIC.as_bytes())?;
    w.u16(MAP_VERSION)?;
    w.f64(map.resolution())?;
    let mut cells: Vec<_> = map.iter().collect();
    cells.sort_unstable_by_key(|(k, _)| **k);
    w.u64(cells.len() as u64)?;
    for (key, s) in cells {
        w.i32(key.i)?;
        w.i32(key.j)?;
        w.i32(key.k)?;
        w.u32(s.n_points)?;
        for v in s.sum {
            w.f64(v)?;
        }
        for v in s.second_moment {
            w.f64(v)?;
        }
        w.f64(s.l_occ)?;
        w.f64(s.intensity_mean)?;
        w.f64(s.intensity_var)?;
        w.u32(s.n_hit)?;
        w.u32(s.n_miss)?;
        w.u32(s.n_multi_return)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_map<R: Read>(input: R) -> Result<VoxelMap> {
    let mut r = LeReader::new(input, "map file");
    r.expect_magic(MAP_MAGIC)?;
    r.expect_version(MAP_VERSION)?;
    let resolution = r.f64()?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(crate::Error::Parse(format!(
            "map file: invalid resolution {resolution}"
        )));
    }
    let count = r.u64()?;
    let mut map = VoxelMap::new(resolution);
    for _ in 0..count {
        let key = VoxelKey::new(r.i32()?, r.i32()?, r.i32()?);
        let mut s = VoxelStats {
            n_points: r.u32()?,
            ..Default::default()
        };
        for v in s.sum.iter_mut() {
            *v = r.f64()?;
        }
        for v in s.second_moment.iter_mut() {
            *v = r.f64()?;
        }
        s.l_occ = r.f64()?;
        s.intensity_mean = r.f64()?;
        s.intensity_var = r.f64()?;
        s.n_hit = r.u32()?;
        s.n_miss = r.u32()?;
        s.n_multi_return = r.u32()?;
        map.insert(key, s);
    }
    Ok(map)
}

pub fn save_map(map: &VoxelMap, path: impl AsRef<Path>) -> Result<()> {
    write_map(map, BufWriter::new(File::create(path)?))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<VoxelMap> {
    read_map(BufReader::new(File::open(path)?))
}

pub fn write_ray_log<W: Write>(rays: &[RayRecord], out: W) -> Result<()> {
    let mut w = LeWriter::new(out);
    w.bytes(RAY_MAGIC.as_bytes())?;
    w.u16(RAY_VERSION)?;
    w.u64(rays.len() as u64)?;
    for ray in rays {
        w.f64(ray.t)?;
        for v in ray.origin.iter().chain(ray.endpoint.iter()) {
            w.f64(*v)?;
        }
        w.f32(ray.intensity)?;
        w.u8(ray.return_number)?;
        w.u8(ray.num_returns)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_ray_log<R: Read>(input: R) -> Result<Vec<RayRecord>> {
    let mut r = LeReader::new(input, "ray log");
    r.expect_magic(RAY_MAGIC)?;
    r.expect_version(RAY_VERSION)?;
    let count = r.u64()?;
    let mut rays = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let t = r.f64()?;
        let origin = Point3::new(r.f64()?, r.f64()?, r.f64()?);
        let endpoint = Point3::new(r.f64()?, r.f64()?, r.f64()?);
        rays.push(RayRecord {
            t,
            origin,
            endpoint,
            intensity: r.f32()?,
            return_number: r.u8()?,
            num_returns: r.u8()?,
        });
    }
    Ok(rays)
}

/// ASCII PLY of points with one scalar attribute.
pub fn write_ply<W: Write>(
    out: W,
    attribute: &str,
    points: impl ExactSizeIterator<Item = (Point3<f64>, f64)>,
) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", points.len())?;
    writeln!(
        w,
        "property float x\nproperty float y\nproperty float z\nproperty float {attribute}\nend_header"
    )?;
    for (p, v) in points {
        writeln!(w, "{} {} {} {}", p.x as f32, p.y as f32, p.z as f32, v as f32)?;
    }
    w.flush()?;
    Ok(())
}
