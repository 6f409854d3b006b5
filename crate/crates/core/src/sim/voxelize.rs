use rustc_hash::FxHashMap;

use super::scene::{Scene, SceneElement};
use crate::labeling::{LabeledVoxelCloud, Provenance, Traversability};
use crate::map::VoxelKey;

/// Number of voxel columns covering the scene extent along each axis.
pub fn column_range(scene: &Scene, resolution: f64) -> (i32, i32) {
    (
        (scene.extent_x / resolution).ceil() as i32,
        (scene.extent_y / resolution).ceil() as i32,
    )
}

/// Voxels crossed by the ground surface within the scene extent.
pub fn ground_voxels(scene: &Scene, resolution: f64) -> Vec<VoxelKey> {
    let (ni, nj) = column_range(scene, resolution);
    let mut out = Vec::new();
    for i in 0..ni {
        for j in 0..nj {
            let x0 = i as f64 * resolution;
            let y0 = j as f64 * resolution;
            let (lo, hi) = scene
                .ground
                .height_range(x0, x0 + resolution, y0, y0 + resolution);
            let k_lo = (lo / resolution).floor() as i32;
            let k_hi = ((hi / resolution).ceil() as i32 - 1).max(k_lo);
            for k in k_lo..=k_hi {
                out.push(VoxelKey::new(i, j, k));
            }
        }
    }
    out
}

/// Voxels sharing positive volume with an element, clipped to the extent.
pub fn element_voxels(scene: &Scene, element: &SceneElement, resolution: f64) -> Vec<VoxelKey> {
    let (ni, nj) = column_range(scene, resolution);
    let (lo, hi) = element.shape.bounds();
    let a = VoxelKey::from_point(&lo, resolution);
    let b = VoxelKey::from_point(&hi, resolution);
    let mut out = Vec::new();
    for i in a.i.max(0)..=b.i.min(ni - 1) {
        for j in a.j.max(0)..=b.j.min(nj - 1) {
            for k in a.k..=b.k {
                let key = VoxelKey::new(i, j, k);
                if element.shape.overlaps_voxel(&key, resolution) {
                    out.push(key);
                }
            }
        }
    }
    out
}

/// Exact ground-truth labels of every voxel touched by the ground or an
/// element. Non-traversable wins wherever both classes touch a voxel.
pub fn ground_truth_voxelize(scene: &Scene, resolution: f64) -> LabeledVoxelCloud {
    let mut labels: FxHashMap<VoxelKey, Traversability> = FxHashMap::default();
    for key in ground_voxels(scene, resolution) {
        labels.insert(key, Traversability::Traversable);
    }
    for e in &scene.elements {
        for key in element_voxels(scene, e, resolution) {
            let slot = labels.entry(key).or_insert(e.traversability);
            if e.traversability == Traversability::NonTraversable {
                *slot = Traversability::NonTraversable;
            }
        }
    }
    let mut cloud = LabeledVoxelCloud::new(Provenance::Hand);
    cloud.labels = labels.into_iter().collect();
    cloud.labels.sort_unstable_by_key(|(k, _)| *k);
    cloud
}
