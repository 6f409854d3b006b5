use std::io::Write;

use rustc_hash::FxHashMap;

use super::density::ColumnIndex;
use crate::error::Result;
use crate::labeling::Traversability;
use crate::map::VoxelKey;

/// Column-wise 2D traversability grid over the bounding box of a column index.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    pub i0: i32,
    pub j0: i32,
    pub width: usize,
    pub height: usize,
    /// Row-major by `j`; `None` for columns without observations.
    pub cells: Vec<Option<Traversability>>,
}

impl Grid2d {
    pub fn get(&self, i: i32, j: i32) -> Option<Traversability> {
        let (di, dj) = (i - self.i0, j - self.j0);
        if di < 0 || dj < 0 || di as usize >= self.width || dj as usize >= self.height {
            return None;
        }
        self.cells[dj as usize * self.width + di as usize]
    }

    /// ASCII greymap: 255 traversable, 0 non-traversable, 128 unknown.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "P2\n{} {}\n255", self.width, self.height)?;
        for row in self.cells.chunks(self.width.max(1)) {
            let line: Vec<&str> = row
                .iter()
                .map(|c| match c {
                    Some(Traversability::Traversable) => "255",
                    Some(Traversability::NonTraversable) => "0",
                    None => "128",
                })
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,state")?;
        for dj in 0..self.height {
            for di in 0..self.width {
                if let Some(s) = self.cells[dj * self.width + di] {
                    writeln!(out, "{},{},{}", self.i0 + di as i32, self.j0 + dj as i32, s.as_str())?;
                }
            }
        }
        Ok(())
    }
}

/// Conservative 2D projection: a column is traversable only if every indexed
/// voxel in its lowest metre is predicted traversable. Voxels without a
/// prediction count as non-traversable.
pub fn compress_2d(probs: &FxHashMap<VoxelKey, f64>, index: &ColumnIndex, threshold: f64) -> Grid2d {
    let cols: Vec<(i32, i32)> = index.columns().collect();
    if cols.is_empty() {
        return Grid2d { i0: 0, j0: 0, width: 0, height: 0, cells: Vec::new() };
    }
    let i0 = cols.iter().map(|c| c.0).min().unwrap();
    let i1 = cols.iter().map(|c| c.0).max().unwrap();
    let j0 = cols.iter().map(|c| c.1).min().unwrap();
    let j1 = cols.iter().map(|c| c.1).max().unwrap();
    let width = (i1 - i0 + 1) as usize;
    let height = (j1 - j0 + 1) as usize;
    let mut cells = vec![None; width * height];
    let band = index.band_cells();
    for (i, j) in cols {
        let ground = index.ground(i, j).expect("indexed column");
        let traversable = index
            .column(i, j)
            .iter()
            .take_while(|&&k| k < ground + band)
            .all(|&k| probs.get(&VoxelKey::new(i, j, k)).is_some_and(|&p| p >= threshold));
        cells[(j - j0) as usize * width + (i - i0) as usize] = Some(if traversable {
            Traversability::Traversable
        } else {
            Traversability::NonTraversable
        });
    }
    Grid2d { i0, j0, width, height, cells }
}
