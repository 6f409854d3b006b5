//! In-process building blocks shared by the subcommands and the
//! end-to-end tests.

use nalgebra::{Point3, Vector3};
use rustc_hash::FxHashMap;
use voxtrav_core::dataset::{split_cubes, CubeSample};
use voxtrav_core::eval::{ctc_classify, CtcConfig, LabelMap};
use voxtrav_core::labeling::{fuse_labels, LabeledVoxelCloud, RobotGeometry, RobotPoseEvent};
use voxtrav_core::sim::{
    generate_scene, ground_truth_voxelize, simulate_mission, LidarSpec, MissionLog, MissionSpec, Scene,
    SceneConfig,
};
use voxtrav_core::{RayRecord, Result, Traversability, VoxelKey, VoxelMap};
use voxtrav_scnn::{ensemble_predict, Model};

/// Lawnmower row spacing of the default mission, metres.
pub const DEFAULT_ROW_SPACING: f64 = 3.0;
/// Distance of the default mission from the scene edges, metres.
pub const DEFAULT_MARGIN: f64 = 1.5;

/// Scene, traverse and oracle labels of one simulated run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub scene: Scene,
    pub log: MissionLog,
    pub oracle: LabeledVoxelCloud,
}

pub fn default_mission(cfg: &SceneConfig) -> MissionSpec {
    MissionSpec::lawnmower(cfg.extent_x, cfg.extent_y, DEFAULT_ROW_SPACING, DEFAULT_MARGIN)
}

/// Generates the scene, drives the mission and voxelizes the oracle labels.
/// Everything derives from `cfg.seed`.
pub fn simulate(cfg: &SceneConfig, mission: &MissionSpec, geom: &RobotGeometry, lidar: &LidarSpec) -> Result<SimRun> {
    let scene = generate_scene(cfg)?;
    let log = simulate_mission(&scene, mission, geom, lidar, cfg.seed);
    let oracle = ground_truth_voxelize(&scene, cfg.resolution);
    Ok(SimRun { scene, log, oracle })
}

/// Fuses every ray into a fresh map. Returns the map and the number of rays
/// rejected as malformed.
pub fn build_map<'a>(rays: impl IntoIterator<Item = &'a RayRecord>, resolution: f64) -> (VoxelMap, usize) {
    let mut map = VoxelMap::new(resolution);
    let rejected = map.integrate_all(rays);
    (map, rejected)
}

/// Traversable pose events and collision events of a log.
pub fn split_events(events: &[RobotPoseEvent]) -> (Vec<RobotPoseEvent>, Vec<RobotPoseEvent>) {
    events.iter().partition(|e| e.state == Traversability::Traversable)
}

/// Hand priors refined by experience, restricted to the map's active voxels.
pub fn fuse(
    map: &VoxelMap,
    hand: Option<&LabeledVoxelCloud>,
    events: &[RobotPoseEvent],
    geom: &RobotGeometry,
) -> Result<LabeledVoxelCloud> {
    let mut ordered = events.to_vec();
    ordered.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(fuse_labels(map, hand, &ordered, geom)?.1)
}

/// A simulated scene carried through mapping, labelling and tiling.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub id: String,
    pub config: SceneConfig,
    pub run: SimRun,
    pub map: VoxelMap,
    pub labels: LabeledVoxelCloud,
    pub cubes: Vec<CubeSample>,
}

/// Runs the whole data side of the pipeline for one scene with the default
/// mission, robot and lidar.
pub fn prepare_scene(id: &str, cfg: &SceneConfig) -> Result<PreparedScene> {
    let geom = RobotGeometry::default();
    let run = simulate(cfg, &default_mission(cfg), &geom, &LidarSpec::default())?;
    let (map, _) = build_map(&run.log.rays, cfg.resolution);
    let labels = fuse(&map, Some(&run.oracle), &run.log.poses, &geom)?;
    let cubes = split_cubes(&map, &labels);
    Ok(PreparedScene {
        id: id.to_string(),
        config: cfg.clone(),
        run,
        map,
        labels,
        cubes,
    })
}

/// Ensemble probabilities for the map's active voxels, optionally restricted
/// to a box `center ± extent / 2`.
pub fn predict_map(
    models: &mut [Model],
    map: &VoxelMap,
    region: Option<(Point3<f64>, Vector3<f64>)>,
) -> voxtrav_scnn::Result<FxHashMap<VoxelKey, f64>> {
    let sites = match region {
        Some((c, e)) => map.extract_feature_map(&c, &e),
        None => map.feature_cloud(),
    };
    if sites.is_empty() {
        return Ok(FxHashMap::default());
    }
    let probs = ensemble_predict(models, &sites)?;
    Ok(sites.iter().map(|(k, _)| *k).zip(probs).collect())
}

/// Geometric baseline decisions for every active voxel, as 0/1 probabilities.
pub fn ctc_predictions(map: &VoxelMap, cfg: &CtcConfig) -> FxHashMap<VoxelKey, f64> {
    map.active()
        .map(|(k, s)| (*k, if ctc_classify(s, cfg).is_traversable() { 1.0 } else { 0.0 }))
        .collect()
}

pub fn label_map(cloud: &LabeledVoxelCloud) -> LabelMap {
    cloud.to_map()
}
