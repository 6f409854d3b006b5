//! Cube datasets: fixed-size voxel blocks cut from labelled maps, feature
//! normalization, geometric augmentation and fold assignment.

mod augment;
mod folds;
mod io;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::labeling::{LabeledVoxelCloud, Traversability};
use crate::map::{FeatureVector, VoxelKey, VoxelMap, FEATURE_DIM};

pub use augment::{augment, AugmentPlan, Translation};
pub use folds::{kfold_split, CubeRef, DatasetManifest, SceneEntry};
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};

/// Edge length of a cube in voxels.
pub const CUBE_SIZE: i32 = 32;
/// Cubes with fewer feature-bearing sites are discarded.
pub const MIN_CUBE_SITES: usize = 150;
/// Floor applied to normalization standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// One block of `CUBE_SIZE³` voxels with its occupied sites.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSample {
    pub origin: VoxelKey,
    pub coords: Vec<[u8; 3]>,
    pub features: Vec<FeatureVector>,
    /// `None` marks an unlabelled site.
    pub labels: Vec<Option<Traversability>>,
}

impl CubeSample {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Map key of a site.
    pub fn key(&self, site: usize) -> VoxelKey {
        let [i, j, k] = self.coords[site];
        VoxelKey::new(
            self.origin.i + i as i32,
            self.origin.j + j as i32,
            self.origin.k + k as i32,
        )
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.features.len() != self.coords.len() || self.labels.len() != self.coords.len() {
            return Err(Error::Parse("cube arrays are not index-aligned".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(self.coords.len());
        for c in &self.coords {
            if c.iter().any(|&v| v as i32 >= CUBE_SIZE) || !seen.insert(*c) {
                return Err(Error::Parse(format!("invalid or duplicate cube site {c:?}")));
            }
        }
        Ok(())
    }
}

/// A site to be placed in a cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub key: VoxelKey,
    pub features: FeatureVector,
    pub label: Option<Traversability>,
}

/// Groups keys into disjoint cubes anchored at the componentwise minimum key.
/// Returns the cube origins with the keys they hold.
pub fn tile_keys(keys: &[VoxelKey]) -> BTreeMap<VoxelKey, Vec<VoxelKey>> {
    let mut tiles: BTreeMap<VoxelKey, Vec<VoxelKey>> = BTreeMap::new();
    let Some(first) = keys.first() else {
        return tiles;
    };
    let anchor = keys.iter().fold(*first, |a, k| {
        VoxelKey::new(a.i.min(k.i), a.j.min(k.j), a.k.min(k.k))
    });
    for k in keys {
        let cell = |v: i32, a: i32| a + (v - a).div_euclid(CUBE_SIZE) * CUBE_SIZE;
        let origin = VoxelKey::new(cell(k.i, anchor.i), cell(k.j, anchor.j), cell(k.k, anchor.k));
        tiles.entry(origin).or_default().push(*k);
    }
    tiles
}

/// Tiles sites into cubes and drops those below [`MIN_CUBE_SITES`].
pub fn split_sites(sites: &[Site]) -> Vec<CubeSample> {
    let by_key: BTreeMap<VoxelKey, &Site> = sites.iter().map(|s| (s.key, s)).collect();
    let keys: Vec<VoxelKey> = by_key.keys().copied().collect();
    tile_keys(&keys)
        .into_iter()
        .filter(|(_, members)| members.len() >= MIN_CUBE_SITES)
        .map(|(origin, members)| {
            let mut cube = CubeSample {
                origin,
                coords: Vec::with_capacity(members.len()),
                features: Vec::with_capacity(members.len()),
                labels: Vec::with_capacity(members.len()),
            };
            for k in members {
                let s = by_key[&k];
                cube.coords.push([
                    (k.i - origin.i) as u8,
                    (k.j - origin.j) as u8,
                    (k.k - origin.k) as u8,
                ]);
                cube.features.push(s.features);
                cube.labels.push(s.label);
            }
            cube
        })
        .collect()
}

/// Feature-bearing sites of a map, labelled where `labels` has an entry.
pub fn map_sites(map: &VoxelMap, labels: Option<&LabeledVoxelCloud>) -> Vec<Site> {
    let lookup = labels.map(|l| l.to_map()).unwrap_or_default();
    map.active_keys()
        .into_iter()
        .map(|key| Site {
            key,
            features: map.get(&key).expect("active key").feature_vector(),
            label: lookup.get(&key).copied(),
        })
        .collect()
}

/// Cuts a labelled map into training cubes.
pub fn split_cubes(map: &VoxelMap, labels: &LabeledVoxelCloud) -> Vec<CubeSample> {
    split_sites(&map_sites(map, Some(labels)))
}

/// Per-feature zero-mean, unit-variance scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationStats {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl NormalizationStats {
    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_DIM],
            std: [1.0; FEATURE_DIM],
        }
    }

    /// Population statistics over the given feature vectors.
    pub fn from_features<'a>(features: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = [0f64; FEATURE_DIM];
        let mut sq = [0f64; FEATURE_DIM];
        let all: Vec<&FeatureVector> = features.into_iter().collect();
        for f in &all {
            n += 1;
            for d in 0..FEATURE_DIM {
                sum[d] += f.0[d] as f64;
            }
        }
        if n == 0 {
            return Err(Error::Empty("normalization input"));
        }
        let mut mean = [0f64; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            mean[d] = sum[d] / n as f64;
        }
        for f in &all {
            for d in 0..FEATURE_DIM {
                let c = f.0[d] as f64 - mean[d];
                sq[d] += c * c;
            }
        }
        let mut std = [0f64; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            std[d] = (sq[d] / n as f64).sqrt().max(STD_FLOOR);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, f: &FeatureVector) -> FeatureVector {
        let mut out = [0f32; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            out[d] = ((f.0[d] as f64 - self.mean[d]) / self.std[d]) as f32;
        }
        FeatureVector(out)
    }

    pub fn normalize_cube(&self, cube: &CubeSample) -> CubeSample {
        CubeSample {
            features: cube.features.iter().map(|f| self.apply(f)).collect(),
            ..cube.clone()
        }
    }
}

/// Statistics over every site of the given (training) cubes.
pub fn compute_normalization<'a>(
    cubes: impl IntoIterator<Item = &'a CubeSample>,
) -> Result<NormalizationStats> {
    NormalizationStats::from_features(cubes.into_iter().flat_map(|c| c.features.iter()))
}

/// Normalized cubes together with the statistics used.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub normalization: NormalizationStats,
    pub cubes: Vec<CubeSample>,
}
