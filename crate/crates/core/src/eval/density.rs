use std::collections::BTreeMap;

use crate::map::{VoxelKey, VoxelMap};

/// Occupied voxels grouped by `(i, j)` column, `k` sorted ascending.
#[derive(Debug, Clone, Default)]
pub struct ColumnIndex {
    resolution: f64,
    columns: BTreeMap<(i32, i32), Vec<i32>>,
}

impl ColumnIndex {
    pub fn new(resolution: f64) -> Self {
        Self {
            resolution,
            columns: BTreeMap::new(),
        }
    }

    pub fn from_keys<'a>(resolution: f64, keys: impl IntoIterator<Item = &'a VoxelKey>) -> Self {
        let mut idx = Self::new(resolution);
        for k in keys {
            idx.insert(*k);
        }
        idx
    }

    /// Index over the map's active (endpoint-bearing) voxels.
    pub fn from_map(map: &VoxelMap) -> Self {
        let mut idx = Self::new(map.resolution());
        for (k, _) in map.active() {
            idx.insert(*k);
        }
        idx
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Adds a voxel; returns false if it was already present.
    pub fn insert(&mut self, key: VoxelKey) -> bool {
        let col = self.columns.entry((key.i, key.j)).or_default();
        match col.binary_search(&key.k) {
            Ok(_) => false,
            Err(pos) => {
                col.insert(pos, key.k);
                true
            }
        }
    }

    /// Number of cells in the 1 m band above the ground voxel.
    pub fn band_cells(&self) -> i32 {
        ((1.0 / self.resolution).round() as i32).max(1)
    }

    /// Lowest occupied voxel of a column.
    pub fn ground(&self, i: i32, j: i32) -> Option<i32> {
        self.columns.get(&(i, j)).and_then(|c| c.first().copied())
    }

    /// Occupied `k` indices of a column, ascending.
    pub fn column(&self, i: i32, j: i32) -> &[i32] {
        self.columns.get(&(i, j)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn columns(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.columns.keys().copied()
    }

    /// Fraction of the column's lowest metre that is occupied, counting the
    /// ground voxel itself.
    pub fn density(&self, i: i32, j: i32) -> Option<f64> {
        let col = self.columns.get(&(i, j))?;
        let ground = *col.first()?;
        let band = self.band_cells();
        let filled = col.iter().take_while(|&&k| k < ground + band).count();
        Some(filled as f64 / band as f64)
    }

    pub fn densities(&self) -> BTreeMap<(i32, i32), f64> {
        self.columns
            .keys()
            .filter_map(|&(i, j)| self.density(i, j).map(|d| ((i, j), d)))
            .collect()
    }

    pub fn mean_density(&self) -> f64 {
        if self.columns.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.densities().values().sum();
        sum / self.columns.len() as f64
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Per-column vegetation density of a map's active voxels.
pub fn vegetation_density(map: &VoxelMap) -> BTreeMap<(i32, i32), f64> {
    ColumnIndex::from_map(map).densities()
}
