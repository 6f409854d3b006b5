//! Synthetic forest scenes, lidar scans and robot traverses with exact
//! ground-truth voxel labels.

mod config;
mod generate;
mod lidar;
mod mission;
mod scene;
mod voxelize;

pub use crate::map::RayRecord;
pub use config::SceneConfig;
pub use generate::{generate_scene, DENSITY_TOLERANCE};
pub use lidar::{scan_directions, simulate_beams, simulate_scan, LidarSpec, SensorPose};
pub use mission::{simulate_mission, simulate_mission_with, MissionLog, MissionSpec, MissionStatus};
pub use scene::{Heightfield, IntensityProfile, Scene, SceneElement, Shape};
pub use voxelize::{column_range, element_voxels, ground_truth_voxelize, ground_voxels};
