//! Dataset file (little-endian): magic `FTDS`, u16 version, 13×f64 means,
//! 13×f64 standard deviations, u32 cube count, then per cube 3×i32 origin,
//! u16 site count and per site 3×u8 local coordinates, 13×f32 features and
//! an i8 label (1 traversable, 0 non-traversable, -1 unlabelled).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CubeSample, Dataset, NormalizationStats};
use crate::binio::{LeReader, LeWriter};
use crate::error::{Error, Result};
use crate::labeling::Traversability;
use crate::map::{FeatureVector, VoxelKey, FEATURE_DIM};

const MAGIC: &str = "FTDS";
const VERSION: u16 = 1;

fn label_code(l: Option<Traversability>) -> i8 {
    match l {
        Some(Traversability::Traversable) => 1,
        Some(Traversability::NonTraversable) => 0,
        None => -1,
    }
}

pub fn write_dataset<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = LeWriter::new(out);
    w.bytes(MAGIC.as_bytes())?;
    w.u16(VERSION)?;
    for v in ds.normalization.mean.iter().chain(&ds.normalization.std) {
        w.f64(*v)?;
    }
    w.u32(ds.cubes.len() as u32)?;
    for c in &ds.cubes {
        c.validate()?;
        w.i32(c.origin.i)?;
        w.i32(c.origin.j)?;
        w.i32(c.origin.k)?;
        w.u16(c.len() as u16)?;
        for s in 0..c.len() {
            w.bytes(&c.coords[s])?;
            for v in c.features[s].0 {
                w.f32(v)?;
            }
            w.i8(label_code(c.labels[s]))?;
        }
    }
    w.finish()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = LeReader::new(input, "dataset file");
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let mut normalization = NormalizationStats::identity();
    for v in normalization.mean.iter_mut().chain(normalization.std.iter_mut()) {
        *v = r.f64()?;
    }
    let n = r.u32()? as usize;
    let mut cubes = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let origin = VoxelKey::new(r.i32()?, r.i32()?, r.i32()?);
        let sites = r.u16()? as usize;
        let mut c = CubeSample {
            origin,
            coords: Vec::with_capacity(sites),
            features: Vec::with_capacity(sites),
            labels: Vec::with_capacity(sites),
        };
        for _ in 0..sites {
            c.coords.push([r.u8()?, r.u8()?, r.u8()?]);
            let mut f = [0f32; FEATURE_DIM];
            for v in &mut f {
                *v = r.f32()?;
            }
            c.features.push(FeatureVector(f));
            c.labels.push(match r.i8()? {
                1 => Some(Traversability::Traversable),
                0 => Some(Traversability::NonTraversable),
                -1 => None,
                other => return Err(Error::Parse(format!("invalid site label {other}"))),
            });
        }
        c.validate()?;
        cubes.push(c);
    }
    Ok(Dataset { normalization, cubes })
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    write_dataset(ds, BufWriter::new(File::create(path)?))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}
