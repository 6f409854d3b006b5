use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use voxtrav_core::binio::{LeReader, LeWriter};
use voxtrav_core::eval::FeatureSet;

use crate::error::{Error, Result};
use crate::model::{InputTransform, Model};
use crate::unet::{UNet, UNetConfig};

const MAGIC: &str = "FTNN";
const VERSION: u16 = 1;

fn write_str<W: Write>(w: &mut LeWriter<W>, s: &str) -> Result<()> {
    w.u16(s.len() as u16)?;
    w.bytes(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut LeReader<R>) -> Result<String> {
    let n = r.u16()? as usize;
    let mut buf = vec![0u8; n];
    r.fill(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Shape("model file holds a non-UTF-8 name".into()))
}

/// Architecture, input statistics, then every named tensor in model order.
pub fn write_model<W: Write>(model: &Model, out: W) -> Result<()> {
    let mut w = LeWriter::new(out);
    w.bytes(MAGIC.as_bytes())?;
    w.u16(VERSION)?;
    write_str(&mut w, model.input.feature_set.as_str())?;
    let cfg = &model.net.config;
    w.u32(cfg.in_channels as u32)?;
    w.u32(cfg.channels.len() as u32)?;
    for &c in &cfg.channels {
        w.u32(c as u32)?;
    }
    w.u32(model.input.dim() as u32)?;
    for v in model.input.mean.iter().chain(&model.input.std) {
        w.f64(*v)?;
    }
    let params = model.net.params();
    let buffers = model.net.buffers();
    w.u32((params.len() + buffers.len()) as u32)?;
    let tensors = params
        .iter()
        .map(|p| (&p.name, p.value.as_slice()))
        .chain(buffers.iter().map(|b| (&b.name, b.value.as_slice())));
    for (name, values) in tensors {
        write_str(&mut w, name)?;
        w.u32(values.len() as u32)?;
        for v in values {
            w.f32(*v)?;
        }
    }
    w.finish()?;
    Ok(())
}

pub fn read_model<R: Read>(input: R) -> Result<Model> {
    let mut r = LeReader::new(input, "model file");
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let feature_set: FeatureSet = read_str(&mut r)?.parse()?;
    let in_channels = r.u32()? as usize;
    let levels = r.u32()? as usize;
    if levels == 0 || levels > 16 {
        return Err(Error::Shape(format!("model file declares {levels} levels")));
    }
    let channels = (0..levels).map(|_| r.u32().map(|c| c as usize)).collect::<Result<Vec<_>, _>>()?;
    let dim = r.u32()? as usize;
    if dim != feature_set.dim() || dim != in_channels {
        return Err(Error::Shape(format!(
            "feature set {feature_set} has {} channels but the file declares {dim} and {in_channels}",
            feature_set.dim()
        )));
    }
    let mut stats = vec![0.0; 2 * dim];
    for v in &mut stats {
        *v = r.f64()?;
    }
    let input = InputTransform {
        feature_set,
        mean: stats[..dim].to_vec(),
        std: stats[dim..].to_vec(),
    };
    let mut net = UNet::<f32>::new(UNetConfig::new(in_channels, channels)?, 0);
    let count = r.u32()? as usize;
    let expected = net.params().len() + net.buffers().len();
    if count != expected {
        return Err(Error::Shape(format!("model file holds {count} tensors, expected {expected}")));
    }
    for p in net.params_mut() {
        read_tensor(&mut r, &p.name, &mut p.value)?;
    }
    for b in net.buffers_mut() {
        read_tensor(&mut r, &b.name, &mut b.value)?;
    }
    let mut rest = [0u8; 1];
    if r.fill(&mut rest).is_ok() {
        return Err(Error::Shape("trailing bytes after the last tensor".into()));
    }
    Ok(Model { input, net })
}

fn read_tensor<R: Read>(r: &mut LeReader<R>, name: &str, value: &mut [f32]) -> Result<()> {
    let found = read_str(r)?;
    let len = r.u32()? as usize;
    if found != name || len != value.len() {
        return Err(Error::Shape(format!(
            "tensor {found} with {len} values where {name} with {} was expected",
            value.len()
        )));
    }
    for v in value.iter_mut() {
        *v = r.f32()?;
    }
    Ok(())
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: &Path) -> Result<Model> {
    read_model(BufReader::new(File::open(path)?))
}
