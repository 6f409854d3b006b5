use std::fmt;
use std::str::FromStr;

use super::ctc::SurfaceShape;
use crate::error::{Error, Result};
use crate::map::{FeatureVector, VoxelStats, FEATURE_DIM};

/// Feature subsets compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    /// Point count and occupancy log-odds.
    Occupancy,
    /// Slope, roughness, permeability, intensity mean and variance.
    NdtTm,
    /// `NdtTm` plus linearity, planarity and sphericity.
    FtmGeometric,
    /// The full per-voxel vector.
    Full,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Occupancy,
        FeatureSet::NdtTm,
        FeatureSet::FtmGeometric,
        FeatureSet::Full,
    ];

    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Occupancy => 2,
            FeatureSet::NdtTm => 5,
            FeatureSet::FtmGeometric => 8,
            FeatureSet::Full => FEATURE_DIM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Occupancy => "occ",
            FeatureSet::NdtTm => "ndt-tm",
            FeatureSet::FtmGeometric => "ftm-geometric",
            FeatureSet::Full => "full",
        }
    }

    /// Projects a stored feature vector onto this set. Shape features come
    /// from the covariance rebuilt from its square-root entries.
    pub fn project(self, f: &FeatureVector) -> Vec<f32> {
        let v = &f.0;
        match self {
            FeatureSet::Occupancy => vec![v[6], v[7]],
            FeatureSet::Full => v.to_vec(),
            _ => {
                let valid = v[6] >= 3.0;
                let derived = DerivedFeatures::from_parts(
                    valid.then(|| SurfaceShape::from_covariance(&f.covariance())),
                    v[10] as f64,
                    v[11] as f64,
                    v[8] as f64,
                    v[9] as f64,
                );
                if self == FeatureSet::NdtTm {
                    derived.ndt_tm().to_vec()
                } else {
                    derived.ftm_geometric().to_vec()
                }
            }
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature set {s}")))
    }
}

/// Hand-crafted per-voxel quantities behind the ablation sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedFeatures {
    pub slope_deg: f64,
    pub roughness: f64,
    pub permeability: f64,
    pub intensity_mean: f64,
    pub intensity_var: f64,
    pub linearity: f64,
    pub planarity: f64,
    pub sphericity: f64,
    /// False when the point distribution is undefined and the shape entries
    /// are zero.
    pub shape_valid: bool,
}

impl DerivedFeatures {
    fn from_parts(shape: Option<SurfaceShape>, n_hit: f64, n_miss: f64, mean: f64, var: f64) -> Self {
        let permeability = if n_hit + n_miss > 0.0 { n_hit / (n_hit + n_miss) } else { 0.0 };
        let mut d = Self {
            slope_deg: 0.0,
            roughness: 0.0,
            permeability,
            intensity_mean: mean,
            intensity_var: var,
            linearity: 0.0,
            planarity: 0.0,
            sphericity: 0.0,
            shape_valid: false,
        };
        if let Some(s) = shape {
            let [l1, l2, l3] = s.eigenvalues;
            d.slope_deg = s.slope_deg();
            d.roughness = s.roughness();
            if l1 > 0.0 {
                d.linearity = (l1 - l2) / l1;
                d.planarity = (l2 - l3) / l1;
                d.sphericity = l3 / l1;
            }
            d.shape_valid = true;
        }
        d
    }

    pub fn ndt_tm(&self) -> [f32; 5] {
        [
            self.slope_deg as f32,
            self.roughness as f32,
            self.permeability as f32,
            self.intensity_mean as f32,
            self.intensity_var as f32,
        ]
    }

    pub fn ftm_geometric(&self) -> [f32; 8] {
        let b = self.ndt_tm();
        [b[0], b[1], b[2], b[3], b[4], self.linearity as f32, self.planarity as f32, self.sphericity as f32]
    }
}

/// All ablation groups of one voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationFeatures {
    pub occupancy: [f32; 2],
    pub derived: DerivedFeatures,
    pub full: FeatureVector,
}

pub fn derived_features(stats: &VoxelStats) -> AblationFeatures {
    let shape = stats
        .has_distribution()
        .then(|| SurfaceShape::from_covariance(&stats.regularized_covariance()));
    AblationFeatures {
        occupancy: [stats.n_points as f32, stats.l_occ as f32],
        derived: DerivedFeatures::from_parts(
            shape,
            stats.n_hit as f64,
            stats.n_miss as f64,
            stats.intensity_mean,
            stats.intensity_var,
        ),
        full: stats.feature_vector(),
    }
}
