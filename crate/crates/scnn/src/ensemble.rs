use rayon::prelude::*;
use voxtrav_core::dataset::CubeSample;
use voxtrav_core::{FeatureVector, Traversability, VoxelKey};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::train::{train, TrainConfig, TrainLog};

pub const DEFAULT_ENSEMBLE_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub seeds: Vec<u64>,
}

impl EnsembleConfig {
    /// `n` members with seeds spread from `base_seed`.
    pub fn new(n: usize, base_seed: u64) -> Result<Self> {
        let seeds = (0..n as u64)
            .map(|i| base_seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            .collect();
        Self::with_seeds(seeds)
    }

    pub fn with_seeds(seeds: Vec<u64>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Config("an ensemble needs at least one model".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::Config("ensemble seeds must be distinct".into()));
        }
        Ok(Self { seeds })
    }

    pub fn n_models(&self) -> usize {
        self.seeds.len()
    }
}

/// Trains one model per seed. Members run in parallel on the current rayon
/// pool; each member is itself sequential, so results do not depend on the
/// thread count.
pub fn train_ensemble(
    train_cubes: &[CubeSample],
    val_cubes: &[CubeSample],
    config: &TrainConfig,
    ensemble: &EnsembleConfig,
) -> Result<Vec<(Model, TrainLog)>> {
    ensemble
        .seeds
        .par_iter()
        .map(|&seed| {
            let member = TrainConfig {
                seed,
                ..config.clone()
            };
            train(train_cubes, val_cubes, &member)
        })
        .collect()
}

/// Fraction of traversable votes per site.
pub fn vote_fraction(decisions: &[Vec<Traversability>]) -> Vec<f64> {
    let Some(first) = decisions.first() else {
        return Vec::new();
    };
    let n = decisions.len() as f64;
    (0..first.len())
        .map(|s| decisions.iter().filter(|d| d[s].is_traversable()).count() as f64 / n)
        .collect()
}

/// Per-site traversability probability: the mean of the members' binary
/// decisions, aligned with `sites`.
pub fn ensemble_predict(models: &mut [Model], sites: &[(VoxelKey, FeatureVector)]) -> Result<Vec<f64>> {
    if models.is_empty() {
        return Err(Error::Config("an ensemble needs at least one model".into()));
    }
    let decisions = models
        .par_iter_mut()
        .map(|m| m.classify(sites))
        .collect::<Result<Vec<_>>>()?;
    Ok(vote_fraction(&decisions))
}
