use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub id: String,
    pub cubes: usize,
}

/// A cube addressed by scene position in the manifest and cube index within
/// that scene's dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeRef {
    pub scene: usize,
    pub cube: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub scenes: Vec<SceneEntry>,
    /// Evaluated whole, never cut into folds.
    pub test_scene: String,
    pub seed: u64,
    pub folds: Vec<Vec<CubeRef>>,
}

impl DatasetManifest {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Cubes of every fold except `held_out`.
    pub fn training_cubes(&self, held_out: usize) -> Vec<CubeRef> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != held_out)
            .flat_map(|(_, c)| c.iter().copied())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Shuffles the cubes of all non-test scenes and deals them into `k` folds
/// whose sizes differ by at most one.
pub fn kfold_split(scenes: &[SceneEntry], k: usize, test_scene: &str, seed: u64) -> Result<DatasetManifest> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let mut cubes: Vec<CubeRef> = scenes
        .iter()
        .enumerate()
        .filter(|(_, s)| s.id != test_scene)
        .flat_map(|(scene, s)| (0..s.cubes).map(move |cube| CubeRef { scene, cube }))
        .collect();
    if cubes.len() < k {
        return Err(Error::Config(format!(
            "{} training cubes cannot fill {k} folds",
            cubes.len()
        )));
    }
    cubes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (n, c) in cubes.into_iter().enumerate() {
        folds[n % k].push(c);
    }
    Ok(DatasetManifest {
        scenes: scenes.to_vec(),
        test_scene: test_scene.to_string(),
        seed,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenes(counts: &[usize]) -> Vec<SceneEntry> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| SceneEntry { id: format!("s{i}"), cubes: c })
            .collect()
    }

    #[test]
    fn hundred_cubes_into_ten_folds() {
        let m = kfold_split(&scenes(&[40, 60]), 10, "test", 1).unwrap();
        assert!(m.folds.iter().all(|f| f.len() == 10));
    }

    #[test]
    fn uneven_sizes_differ_by_one() {
        let m = kfold_split(&scenes(&[50, 55]), 10, "test", 1).unwrap();
        let sizes: Vec<_> = m.folds.iter().map(|f| f.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<_> = m.folds.concat();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 105);
    }

    #[test]
    fn test_scene_is_excluded_and_split_is_seeded() {
        let s = scenes(&[30, 30, 30]);
        let a = kfold_split(&s, 5, "s1", 9).unwrap();
        assert!(a.folds.iter().flatten().all(|c| c.scene != 1));
        assert_eq!(a, kfold_split(&s, 5, "s1", 9).unwrap());
        assert_ne!(a, kfold_split(&s, 5, "s1", 10).unwrap());
    }

    #[test]
    fn too_few_cubes() {
        assert!(kfold_split(&scenes(&[9]), 10, "test", 0).is_err());
        assert!(kfold_split(&scenes(&[9]), 1, "test", 0).is_err());
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = kfold_split(&scenes(&[12, 8]), 4, "s9", 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.json");
        m.save(&p).unwrap();
        assert_eq!(DatasetManifest::load(&p).unwrap(), m);
    }
}
