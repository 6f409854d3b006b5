//! Pipeline configuration: a flat `key = value` file shared with the scene
//! generator. Keys the pipeline does not own are kept as scene text.

use std::path::Path;
use std::str::FromStr;

use voxtrav_core::eval::FeatureSet;
use voxtrav_core::sim::SceneConfig;
use voxtrav_scnn::{TrainConfig, DEFAULT_ENSEMBLE_SIZE};

use crate::error::{AtPath, CliError, CliResult};
use crate::pipeline::{DEFAULT_MARGIN, DEFAULT_ROW_SPACING};

/// Resolutions the estimator was designed for.
pub const SUPPORTED_RESOLUTIONS: [f64; 2] = [0.1, 0.2];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub resolution: f64,
    pub seed: u64,
    /// Local inference box, metres.
    pub local_extent: [f64; 3],
    pub ensemble_size: usize,
    pub row_spacing: f64,
    pub mission_margin: f64,
    pub train: TrainConfig,
    /// Remaining lines, parsed by [`SceneConfig`] when a scene is needed.
    pub scene_text: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            seed: 1,
            local_extent: [10.0, 10.0, 2.0],
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            row_spacing: DEFAULT_ROW_SPACING,
            mission_margin: DEFAULT_MARGIN,
            train: TrainConfig::default(),
            scene_text: String::new(),
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("invalid value {v:?} for config key {key}")))
}

/// Comma-separated positive integers.
pub fn parse_channels(v: &str) -> CliResult<Vec<usize>> {
    v.split(',').map(|c| value::<usize>("channels", c.trim())).collect()
}

impl FromStr for PipelineConfig {
    type Err = CliError;

    fn from_str(text: &str) -> CliResult<Self> {
        let mut cfg = PipelineConfig::default();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {line:?} is not key = value")));
            };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "local_extent_x" => cfg.local_extent[0] = value(k, v)?,
                "local_extent_y" => cfg.local_extent[1] = value(k, v)?,
                "local_extent_z" => cfg.local_extent[2] = value(k, v)?,
                "ensemble_size" => cfg.ensemble_size = value(k, v)?,
                "row_spacing" => cfg.row_spacing = value(k, v)?,
                "mission_margin" => cfg.mission_margin = value(k, v)?,
                "lr" => cfg.train.lr = value(k, v)?,
                "weight_decay" => cfg.train.weight_decay = value(k, v)?,
                "batch_size" => cfg.train.batch_size = value(k, v)?,
                "patience" => cfg.train.patience = value(k, v)?,
                "max_epochs" => cfg.train.max_epochs = value(k, v)?,
                "augment" => cfg.train.augment = value(k, v)?,
                "channels" => cfg.train.channels = parse_channels(v)?,
                "feature_set" => cfg.train.feature_set = v.parse::<FeatureSet>()?,
                _ => {
                    // Shared with the scene generator.
                    match k {
                        "resolution" => cfg.resolution = value(k, v)?,
                        "seed" => cfg.seed = value(k, v)?,
                        _ => {}
                    }
                    cfg.scene_text.push_str(line);
                    cfg.scene_text.push('\n');
                }
            }
        }
        Ok(cfg)
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        std::fs::read_to_string(path).at(path)?.parse().at(path)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(CliError::Usage(format!("resolution must be positive, got {}", self.resolution)));
        }
        if !SUPPORTED_RESOLUTIONS.iter().any(|r| (r - self.resolution).abs() < 1e-12) {
            log::warn!("resolution {} m is outside the designed range {SUPPORTED_RESOLUTIONS:?}", self.resolution);
        }
        if self.local_extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::Usage(format!("local extent must be positive, got {:?}", self.local_extent)));
        }
        if self.ensemble_size == 0 {
            return Err(CliError::Usage("ensemble_size must be at least 1".into()));
        }
        if !(self.row_spacing > 0.0) || !(self.mission_margin >= 0.0) {
            return Err(CliError::Usage("row_spacing must be positive and mission_margin non-negative".into()));
        }
        self.train.validate()?;
        Ok(())
    }

    /// Scene parameters from the remaining keys. Seed and resolution come
    /// from the pipeline, so flags override the file.
    pub fn scene(&self) -> CliResult<SceneConfig> {
        let text = format!("{}seed = {}\nresolution = {}\n", self.scene_text, self.seed, self.resolution);
        Ok(text.parse()?)
    }
}
