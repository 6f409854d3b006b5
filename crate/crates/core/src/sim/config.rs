//! Scene configuration in a flat `key = value` text format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parameters for [`generate_scene`](super::generate_scene). Densities are
/// counts per square metre.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub extent_x: f64,
    pub extent_y: f64,
    pub seed: u64,
    /// Target mean vegetation density; `0` disables calibration.
    pub target_density: f64,
    pub resolution: f64,
    pub ground_amplitude: f64,
    pub trunk_density: f64,
    pub log_density: f64,
    pub rock_density: f64,
    pub shrub_density: f64,
    pub grass_density: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            extent_x: 12.0,
            extent_y: 12.0,
            seed: 1,
            target_density: 0.4,
            resolution: 0.1,
            ground_amplitude: 0.15,
            trunk_density: 0.05,
            log_density: 0.01,
            rock_density: 0.015,
            shrub_density: 0.08,
            grass_density: 0.5,
        }
    }
}

const REQUIRED: [&str; 4] = ["extent_x", "extent_y", "seed", "target_density"];
const OPTIONAL: [&str; 7] = [
    "resolution",
    "ground_amplitude",
    "trunk_density",
    "log_density",
    "rock_density",
    "shrub_density",
    "grass_density",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key}")))
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("extent_x", self.extent_x),
            ("extent_y", self.extent_y),
            ("resolution", self.resolution),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.target_density) {
            return Err(Error::Config(format!(
                "target_density {} is infeasible: vegetation density lies in [0, 1]",
                self.target_density
            )));
        }
        let non_negative = [
            ("ground_amplitude", self.ground_amplitude),
            ("trunk_density", self.trunk_density),
            ("log_density", self.log_density),
            ("rock_density", self.rock_density),
            ("shrub_density", self.shrub_density),
            ("grass_density", self.grass_density),
        ];
        for (k, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{k} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

impl FromStr for SceneConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if !REQUIRED.contains(&k) && !OPTIONAL.contains(&k) {
                return Err(Error::Config(format!("unknown config key {k}")));
            }
            kv.insert(k.to_string(), v.trim().to_string());
        }
        for k in REQUIRED {
            if !kv.contains_key(k) {
                return Err(Error::Config(format!("missing config key {k}")));
            }
        }
        let mut cfg = SceneConfig::default();
        for (k, v) in &kv {
            match k.as_str() {
                "extent_x" => cfg.extent_x = parse_value(k, v)?,
                "extent_y" => cfg.extent_y = parse_value(k, v)?,
                "seed" => cfg.seed = parse_value(k, v)?,
                "target_density" => cfg.target_density = parse_value(k, v)?,
                "resolution" => cfg.resolution = parse_value(k, v)?,
                "ground_amplitude" => cfg.ground_amplitude = parse_value(k, v)?,
                "trunk_density" => cfg.trunk_density = parse_value(k, v)?,
                "log_density" => cfg.log_density = parse_value(k, v)?,
                "rock_density" => cfg.rock_density = parse_value(k, v)?,
                "shrub_density" => cfg.shrub_density = parse_value(k, v)?,
                "grass_density" => cfg.grass_density = parse_value(k, v)?,
                _ => unreachable!(),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SceneConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "extent_x = {}", self.extent_x)?;
        writeln!(f, "extent_y = {}", self.extent_y)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "target_density = {}", self.target_density)?;
        writeln!(f, "resolution = {}", self.resolution)?;
        writeln!(f, "ground_amplitude = {}", self.ground_amplitude)?;
        writeln!(f, "trunk_density = {}", self.trunk_density)?;
        writeln!(f, "log_density = {}", self.log_density)?;
        writeln!(f, "rock_density = {}", self.rock_density)?;
        writeln!(f, "shrub_density = {}", self.shrub_density)?;
        writeln!(f, "grass_density = {}", self.grass_density)
    }
}
