use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::config::SceneConfig;
use super::scene::{Heightfield, IntensityProfile, Scene, SceneElement, Shape};
use super::voxelize::{column_range, element_voxels, ground_voxels};
use crate::error::{Error, Result};
use crate::eval::ColumnIndex;
use crate::labeling::Traversability;

/// Accepted gap between the calibrated and requested mean density.
pub const DENSITY_TOLERANCE: f64 = 0.05;

const TRUNK_INTENSITY: IntensityProfile = IntensityProfile { mean: 35.0, std: 6.0 };
const LOG_INTENSITY: IntensityProfile = IntensityProfile { mean: 30.0, std: 6.0 };
const ROCK_INTENSITY: IntensityProfile = IntensityProfile { mean: 22.0, std: 5.0 };
const SHRUB_INTENSITY: IntensityProfile = IntensityProfile { mean: 60.0, std: 12.0 };
const GRASS_INTENSITY: IntensityProfile = IntensityProfile { mean: 78.0, std: 15.0 };
const GROUND_INTENSITY: IntensityProfile = IntensityProfile { mean: 12.0, std: 4.0 };

fn poisson_count(rng: &mut ChaCha8Rng, rate_per_m2: f64, area: f64) -> usize {
    let lambda = rate_per_m2 * area;
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

fn heightfield(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Heightfield {
    let mut hf = Heightfield::flat(cfg.extent_x, cfg.extent_y, 0.0);
    let amp = cfg.ground_amplitude;
    let (p1, p2, p3): (f64, f64, f64) = (
        rng.random_range(0.0..6.28),
        rng.random_range(0.0..6.28),
        rng.random_range(0.0..6.28),
    );
    let (k1, k2) = (rng.random_range(0.25..0.6), rng.random_range(0.25..0.6));
    for iy in 0..hf.ny {
        for ix in 0..hf.nx {
            let x = ix as f64 * hf.spacing;
            let y = iy as f64 * hf.spacing;
            let smooth = 0.55 * (k1 * x + p1).sin() * (k2 * y + p2).sin()
                + 0.3 * (0.7 * (x + y) + p3).sin();
            let noise: f64 = rng.random_range(-1.0..1.0);
            hf.heights[iy * hf.nx + ix] = amp * (smooth + 0.15 * noise);
        }
    }
    hf
}

fn random_xy(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> (f64, f64) {
    (
        rng.random_range(0.0..cfg.extent_x),
        rng.random_range(0.0..cfg.extent_y),
    )
}

fn trunks(cfg: &SceneConfig, ground: &Heightfield, rng: &mut ChaCha8Rng) -> Vec<SceneElement> {
    let n = poisson_count(rng, cfg.trunk_density, cfg.extent_x * cfg.extent_y);
    let mut placed: Vec<(f64, f64)> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..n {
        for _attempt in 0..30 {
            let (x, y) = random_xy(cfg, rng);
            if placed
                .iter()
                .any(|&(px, py)| (px - x).hypot(py - y) < 1.2)
            {
                continue;
            }
            placed.push((x, y));
            let radius = rng.random_range(0.08..0.25);
            let (lo, _) = ground.height_range(x - radius, x + radius, y - radius, y + radius);
            out.push(SceneElement {
                shape: Shape::Cylinder {
                    base: Point3::new(x, y, lo - 0.05),
                    radius,
                    height: rng.random_range(4.0..8.0),
                },
                traversability: Traversability::NonTraversable,
                p_pass: 0.0,
                intensity: TRUNK_INTENSITY,
                thin: false,
            });
            break;
        }
    }
    out
}

fn logs(cfg: &SceneConfig, ground: &Heightfield, rng: &mut ChaCha8Rng) -> Vec<SceneElement> {
    let n = poisson_count(rng, cfg.log_density, cfg.extent_x * cfg.extent_y);
    (0..n)
        .map(|_| {
            let (x, y) = random_xy(cfg, rng);
            let yaw: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let half_len = 0.5 * rng.random_range(1.0..3.0);
            let radius = rng.random_range(0.08..0.2);
            let d = Vector3::new(yaw.cos(), yaw.sin(), 0.0) * half_len;
            let (xa, ya) = (x - d.x, y - d.y);
            let (xb, yb) = (x + d.x, y + d.y);
            SceneElement {
                shape: Shape::Capsule {
                    a: Point3::new(xa, ya, ground.height(xa, ya) + radius * 0.8),
                    b: Point3::new(xb, yb, ground.height(xb, yb) + radius * 0.8),
                    radius,
                },
                traversability: Traversability::NonTraversable,
                p_pass: 0.0,
                intensity: LOG_INTENSITY,
                thin: false,
            }
        })
        .collect()
}

fn rocks(cfg: &SceneConfig, ground: &Heightfield, rng: &mut ChaCha8Rng) -> Vec<SceneElement> {
    let n = poisson_count(rng, cfg.rock_density, cfg.extent_x * cfg.extent_y);
    (0..n)
        .map(|_| {
            let (x, y) = random_xy(cfg, rng);
            let half = Vector3::new(
                rng.random_range(0.15..0.4),
                rng.random_range(0.15..0.4),
                rng.random_range(0.15..0.35),
            );
            SceneElement {
                shape: Shape::Box {
                    center: Point3::new(x, y, ground.height(x, y) + half.z - 0.05),
                    half,
                    yaw: rng.random_range(0.0..std::f64::consts::PI),
                },
                traversability: Traversability::NonTraversable,
                p_pass: 0.0,
                intensity: ROCK_INTENSITY,
                thin: false,
            }
        })
        .collect()
}

fn shrub(cfg: &SceneConfig, ground: &Heightfield, rng: &mut ChaCha8Rng) -> Vec<SceneElement> {
    let (cx, cy) = random_xy(cfg, rng);
    let stems = rng.random_range(3..=6);
    (0..stems)
        .map(|_| {
            let x = cx + rng.random_range(-0.25..0.25);
            let y = cy + rng.random_range(-0.25..0.25);
            let base = Point3::new(x, y, ground.height(x, y) - 0.02);
            let top = base
                + Vector3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(0.4..1.2),
                );
            SceneElement {
                shape: Shape::Capsule {
                    a: base,
                    b: top,
                    radius: rng.random_range(0.015..0.035),
                },
                traversability: Traversability::Traversable,
                p_pass: rng.random_range(0.5..0.8),
                intensity: SHRUB_INTENSITY,
                thin: true,
            }
        })
        .collect()
}

fn grass(cfg: &SceneConfig, ground: &Heightfield, rng: &mut ChaCha8Rng) -> SceneElement {
    let (x, y) = random_xy(cfg, rng);
    let radius = rng.random_range(0.2..0.6);
    let (lo, _) = ground.height_range(x - radius, x + radius, y - radius, y + radius);
    SceneElement {
        shape: Shape::BladeCluster {
            base: Point3::new(x, y, lo - 0.02),
            radius,
            height: rng.random_range(0.25..0.8),
        },
        traversability: Traversability::Traversable,
        p_pass: rng.random_range(0.3..0.9),
        intensity: GRASS_INTENSITY,
        thin: true,
    }
}

/// Running mean vegetation density over the in-extent columns.
struct DensityTracker {
    index: ColumnIndex,
    columns: usize,
    sum: f64,
}

impl DensityTracker {
    fn new(scene: &Scene, resolution: f64) -> Self {
        let (ni, nj) = column_range(scene, resolution);
        let mut t = Self {
            index: ColumnIndex::new(resolution),
            columns: (ni * nj) as usize,
            sum: 0.0,
        };
        for k in ground_voxels(scene, resolution) {
            t.add(k);
        }
        for e in &scene.elements {
            for k in element_voxels(scene, e, resolution) {
                t.add(k);
            }
        }
        t
    }

    fn add(&mut self, key: crate::map::VoxelKey) {
        let before = self.index.density(key.i, key.j).unwrap_or(0.0);
        if self.index.insert(key) {
            self.sum += self.index.density(key.i, key.j).unwrap_or(0.0) - before;
        }
    }

    fn mean(&self) -> f64 {
        self.sum / self.columns.max(1) as f64
    }
}

/// Builds a deterministic synthetic forest. With a non-zero target density,
/// grass clusters are added until the mean ground-truth vegetation density
/// reaches the target.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ground = heightfield(cfg, &mut rng);
    let mut elements = trunks(cfg, &ground, &mut rng);
    elements.extend(logs(cfg, &ground, &mut rng));
    elements.extend(rocks(cfg, &ground, &mut rng));
    let n_shrubs = poisson_count(&mut rng, cfg.shrub_density, cfg.extent_x * cfg.extent_y);
    for _ in 0..n_shrubs {
        elements.extend(shrub(cfg, &ground, &mut rng));
    }
    if cfg.target_density == 0.0 {
        let n = poisson_count(&mut rng, cfg.grass_density, cfg.extent_x * cfg.extent_y);
        for _ in 0..n {
            elements.push(grass(cfg, &ground, &mut rng));
        }
        return Ok(Scene::new(cfg.extent_x, cfg.extent_y, ground, GROUND_INTENSITY, elements));
    }

    let mut scene = Scene::new(cfg.extent_x, cfg.extent_y, ground, GROUND_INTENSITY, elements);
    let mut tracker = DensityTracker::new(&scene, cfg.resolution);
    let budget = (cfg.extent_x * cfg.extent_y * 40.0) as usize + 100;
    let mut added = 0;
    while tracker.mean() < cfg.target_density && added < budget {
        let e = grass(cfg, &scene.ground, &mut rng);
        for k in element_voxels(&scene, &e, cfg.resolution) {
            tracker.add(k);
        }
        scene.push_element(e);
        added += 1;
    }
    let reached = tracker.mean();
    if (reached - cfg.target_density).abs() > DENSITY_TOLERANCE {
        return Err(Error::Config(format!(
            "could not calibrate vegetation density to {} (reached {reached:.3})",
            cfg.target_density
        )));
    }
    log::debug!("calibrated density {reached:.3} with {added} grass clusters");
    Ok(scene)
}
