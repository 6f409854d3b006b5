//! Ground-truth traversability labels fused from hand labels and robot
//! experience in a per-voxel log-odds collision layer.
//!
//! Hand labels initialize the layer with weak priors. Each recorded pose then
//! adds log-odds evidence: a free traverse argues against collision for every
//! voxel inside the robot box, a collision argues for it in the slab ahead of
//! the robot. Experience evidence is stronger than the priors, so a single
//! traverse or collision overrides a hand label.

mod io;
mod region;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use io::{
    load_hand_labels, load_pose_log, read_hand_labels, read_pose_log, save_hand_labels,
    save_pose_log, write_hand_labels, write_pose_log,
};
pub use region::{
    collision_region, BodyBox, OrientedBox, RobotGeometry, RobotPoseEvent,
    DEFAULT_FRONT_EXTENSION,
};

use crate::error::{Error, Result};
use crate::map::{log_odds, VoxelKey, VoxelMap};

/// Binary traversability. `TR` is the positive class in all metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Traversability {
    /// NT, class index 0.
    NonTraversable,
    /// TR, class index 1.
    Traversable,
}

impl Traversability {
    pub fn class_index(self) -> usize {
        match self {
            Traversability::NonTraversable => 0,
            Traversability::Traversable => 1,
        }
    }

    pub fn from_class_index(idx: usize) -> Self {
        if idx == 1 {
            Traversability::Traversable
        } else {
            Traversability::NonTraversable
        }
    }

    pub fn is_traversable(self) -> bool {
        self == Traversability::Traversable
    }

    pub fn flipped(self) -> Self {
        match self {
            Traversability::NonTraversable => Traversability::Traversable,
            Traversability::Traversable => Traversability::NonTraversable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Traversability::NonTraversable => "NT",
            Traversability::Traversable => "TR",
        }
    }
}

impl std::str::FromStr for Traversability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "TR" => Ok(Traversability::Traversable),
            "NT" => Ok(Traversability::NonTraversable),
            other => Err(Error::Parse(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Hand,
    Experience,
    /// Hand priors refined by experience.
    Fused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVoxelCloud {
    pub labels: Vec<(VoxelKey, Traversability)>,
    pub provenance: Provenance,
}

impl LabeledVoxelCloud {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            labels: Vec::new(),
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_map(&self) -> FxHashMap<VoxelKey, Traversability> {
        self.labels.iter().copied().collect()
    }
}

/// Collision probability given to hand-labeled traversable voxels.
pub const HAND_TR_COLLISION_PRIOR: f64 = 0.3;
/// Collision probability given to hand-labeled non-traversable voxels.
pub const HAND_NT_COLLISION_PRIOR: f64 = 0.7;
/// Observation model of a free traverse.
pub const EXPERIENCE_TR_P: f64 = 0.15;
/// Observation model of a collision.
pub const EXPERIENCE_NT_P: f64 = 0.85;
pub const COLLISION_CLAMP: f64 = 6.0;

/// Log-odds of non-traversability per voxel. Absent voxels carry 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollisionLayer {
    resolution: f64,
    cells: FxHashMap<VoxelKey, f64>,
}

impl CollisionLayer {
    pub fn new(resolution: f64) -> Self {
        Self {
            resolution,
            cells: FxHashMap::default(),
        }
    }

    pub fn for_map(map: &VoxelMap) -> Self {
        Self::new(map.resolution())
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, key: &VoxelKey) -> f64 {
        self.cells.get(key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelKey, &f64)> {
        self.cells.iter()
    }

    fn add(&mut self, key: VoxelKey, delta: f64) {
        let l = self.cells.entry(key).or_insert(0.0);
        *l = (*l + delta).clamp(-COLLISION_CLAMP, COLLISION_CLAMP);
    }

    /// Seeds the empty layer with the hand-label priors. Duplicate keys must
    /// agree; conflicting keys are reported together.
    pub fn init_from_hand_labels(&mut self, hand: &LabeledVoxelCloud) -> Result<()> {
        if !self.cells.is_empty() {
            return Err(Error::LayerNotEmpty);
        }
        let mut seen: BTreeMap<VoxelKey, Traversability> = BTreeMap::new();
        let mut conflicts = Vec::new();
        for &(key, label) in &hand.labels {
            match seen.insert(key, label) {
                Some(prev) if prev != label => conflicts.push(key),
                _ => {}
            }
        }
        if !conflicts.is_empty() {
            conflicts.sort_unstable();
            conflicts.dedup();
            return Err(Error::LabelConflict(conflicts));
        }
        for (key, label) in seen {
            let p = match label {
                Traversability::Traversable => HAND_TR_COLLISION_PRIOR,
                Traversability::NonTraversable => HAND_NT_COLLISION_PRIOR,
            };
            self.cells.insert(key, log_odds(p));
        }
        Ok(())
    }

    /// Log-odds increment applied to every voxel in the event's region.
    pub fn experience_log_odds(state: Traversability) -> f64 {
        match state {
            Traversability::Traversable => log_odds(EXPERIENCE_TR_P),
            Traversability::NonTraversable => log_odds(EXPERIENCE_NT_P),
        }
    }

    pub fn update_experience(&mut self, pose: &RobotPoseEvent, geom: &RobotGeometry) {
        let delta = Self::experience_log_odds(pose.state);
        for key in collision_region(pose, geom, self.resolution) {
            self.add(key, delta);
        }
    }

    /// Labels for the map's active voxels: positive log-odds is NT, negative is
    /// TR, zero or absent stays unlabeled. Sorted by key.
    pub fn finalize_labels(&self, map: &VoxelMap) -> LabeledVoxelCloud {
        let mut labels: Vec<_> = map
            .active()
            .filter_map(|(key, _)| {
                let l = self.get(key);
                if l > 0.0 {
                    Some((*key, Traversability::NonTraversable))
                } else if l < 0.0 {
                    Some((*key, Traversability::Traversable))
                } else {
                    None
                }
            })
            .collect();
        labels.sort_unstable_by_key(|(k, _)| *k);
        LabeledVoxelCloud {
            labels,
            provenance: Provenance::Fused,
        }
    }
}

/// Full label pipeline: hand priors, then every pose event in time order.
pub fn fuse_labels(
    map: &VoxelMap,
    hand: Option<&LabeledVoxelCloud>,
    events: &[RobotPoseEvent],
    geom: &RobotGeometry,
) -> Result<(CollisionLayer, LabeledVoxelCloud)> {
    let mut layer = CollisionLayer::for_map(map);
    if let Some(hand) = hand {
        layer.init_from_hand_labels(hand)?;
    }
    for e in events {
        layer.update_experience(e, geom);
    }
    let labels = layer.finalize_labels(map);
    Ok((layer, labels))
}
