use voxtrav_core::eval::FeatureSet;
use voxtrav_core::{FeatureVector, Traversability, VoxelKey};

use crate::error::{Error, Result};
use crate::loss::decide;
use crate::tensor::SparseTensor;
use crate::unet::{UNet, UNetConfig, NUM_CLASSES};

/// Floor on a fitted standard deviation.
const STD_FLOOR: f64 = 1e-8;

/// Feature projection followed by per-channel standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTransform {
    pub feature_set: FeatureSet,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputTransform {
    /// Population statistics of the projected features.
    pub fn fit<'a>(feature_set: FeatureSet, features: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let dim = feature_set.dim();
        let projected: Vec<Vec<f32>> = features.into_iter().map(|f| feature_set.project(f)).collect();
        if projected.is_empty() {
            return Err(Error::Empty("training features"));
        }
        let n = projected.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in &projected {
            for d in 0..dim {
                mean[d] += p[d] as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for p in &projected {
            for d in 0..dim {
                let c = p[d] as f64 - mean[d];
                var[d] += c * c;
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { feature_set, mean, std })
    }

    pub fn identity(feature_set: FeatureSet) -> Self {
        let dim = feature_set.dim();
        Self {
            feature_set,
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_into(&self, f: &FeatureVector, out: &mut Vec<f32>) {
        let p = self.feature_set.project(f);
        for (d, v) in p.iter().enumerate() {
            out.push(((*v as f64 - self.mean[d]) / self.std[d]) as f32);
        }
    }
}

/// A trained network together with the input convention it expects.
#[derive(Debug, Clone)]
pub struct Model {
    pub input: InputTransform,
    pub net: UNet<f32>,
}

impl Model {
    pub fn new(input: InputTransform, channels: Vec<usize>, seed: u64) -> Result<Self> {
        let config = UNetConfig::new(input.dim(), channels)?;
        Ok(Self {
            input,
            net: UNet::new(config, seed),
        })
    }

    pub fn feature_set(&self) -> FeatureSet {
        self.input.feature_set
    }

    /// Evaluation-mode logits for map sites at their absolute keys.
    pub fn logits(&mut self, sites: &[(VoxelKey, FeatureVector)]) -> Result<Vec<[f32; NUM_CLASSES]>> {
        let mut features = Vec::with_capacity(sites.len() * self.input.dim());
        let mut coords = Vec::with_capacity(sites.len());
        for (k, f) in sites {
            coords.push([0, k.i, k.j, k.k]);
            self.input.apply_into(f, &mut features);
        }
        let input = SparseTensor::new(coords, 1, self.input.dim(), features)?;
        let out = self.net.forward(&input, false)?;
        Ok(out.features.chunks_exact(NUM_CLASSES).map(|c| [c[0], c[1]]).collect())
    }

    pub fn classify(&mut self, sites: &[(VoxelKey, FeatureVector)]) -> Result<Vec<Traversability>> {
        Ok(self.logits(sites)?.iter().map(|l| decide(l)).collect())
    }
}
