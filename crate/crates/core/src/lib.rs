//! Probabilistic voxel mapping with per-voxel ray statistics, traversability
//! label fusion, synthetic forest simulation, cube datasets and evaluation
//! protocols for per-voxel traversability estimation.

pub mod binio;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod labeling;
pub mod map;
pub mod sim;

pub use error::{Error, Result};
pub use map::{FeatureVector, RayRecord, VoxelKey, VoxelMap, VoxelStats, FEATURE_DIM};
pub use labeling::Traversability;
