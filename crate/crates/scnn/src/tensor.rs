use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::real::Real;

/// Site coordinate: batch index followed by the voxel indices `i, j, k`.
pub type Coord = [i32; 4];

/// Active sites at one stride level with a row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor<T> {
    pub coords: Vec<Coord>,
    pub stride: i32,
    pub channels: usize,
    pub features: Vec<T>,
}

impl<T: Real> SparseTensor<T> {
    /// Checks the row count, stride divisibility and per-batch uniqueness.
    pub fn new(coords: Vec<Coord>, stride: i32, channels: usize, features: Vec<T>) -> Result<Self> {
        if stride < 1 || (stride & (stride - 1)) != 0 {
            return Err(Error::Stride(format!("stride {stride} is not a power of two")));
        }
        if features.len() != coords.len() * channels {
            return Err(Error::Shape(format!(
                "{} feature values for {} sites × {} channels",
                features.len(),
                coords.len(),
                channels
            )));
        }
        if let Some(c) = coords
            .iter()
            .find(|c| c[1..].iter().any(|v| v.rem_euclid(stride) != 0))
        {
            return Err(Error::Stride(format!("coordinate {c:?} not divisible by {stride}")));
        }
        if coord_index(&coords).len() != coords.len() {
            return Err(Error::Shape("duplicate coordinates".into()));
        }
        Ok(Self {
            coords,
            stride,
            channels,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.features[r * self.channels..(r + 1) * self.channels]
    }
}

/// Row lookup by coordinate.
pub fn coord_index(coords: &[Coord]) -> FxHashMap<Coord, u32> {
    let mut idx = FxHashMap::default();
    idx.reserve(coords.len());
    for (r, c) in coords.iter().enumerate() {
        idx.insert(*c, r as u32);
    }
    idx
}

/// Unique coordinates of the next coarser level, in first-seen order.
pub fn downsample_coords(coords: &[Coord], stride: i32) -> Vec<Coord> {
    let coarse = 2 * stride;
    let mut seen = FxHashMap::default();
    let mut out = Vec::new();
    for c in coords {
        let d = [
            c[0],
            c[1].div_euclid(coarse) * coarse,
            c[2].div_euclid(coarse) * coarse,
            c[3].div_euclid(coarse) * coarse,
        ];
        if seen.insert(d, ()).is_none() {
            out.push(d);
        }
    }
    out
}

/// Row-wise concatenation of two feature matrices with equal row counts.
pub fn concat_channels<T: Real>(a: &[T], ca: usize, b: &[T], cb: usize) -> Vec<T> {
    let rows = if ca > 0 { a.len() / ca } else { b.len() / cb };
    let mut out = Vec::with_capacity(rows * (ca + cb));
    for r in 0..rows {
        out.extend_from_slice(&a[r * ca..(r + 1) * ca]);
        out.extend_from_slice(&b[r * cb..(r + 1) * cb]);
    }
    out
}

/// Inverse of [`concat_channels`] for gradients.
pub fn split_channels<T: Real>(g: &[T], ca: usize, cb: usize) -> (Vec<T>, Vec<T>) {
    let w = ca + cb;
    let rows = g.len() / w;
    let mut a = Vec::with_capacity(rows * ca);
    let mut b = Vec::with_capacity(rows * cb);
    for r in 0..rows {
        a.extend_from_slice(&g[r * w..r * w + ca]);
        b.extend_from_slice(&g[r * w + ca..(r + 1) * w]);
    }
    (a, b)
}
