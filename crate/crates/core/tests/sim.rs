use nalgebra::{Point3, Vector3};
use voxtrav_core::eval::ColumnIndex;
use voxtrav_core::labeling::{fuse_labels, RobotGeometry, Traversability};
use voxtrav_core::map::{VoxelKey, VoxelMap};
use voxtrav_core::sim::*;

fn config(target: f64, seed: u64) -> SceneConfig {
    SceneConfig {
        extent_x: 8.0,
        extent_y: 8.0,
        seed,
        target_density: target,
        ..SceneConfig::default()
    }
}

fn bare(extent: f64) -> Scene {
    let cfg = SceneConfig {
        extent_x: extent,
        extent_y: extent,
        target_density: 0.0,
        ground_amplitude: 0.0,
        trunk_density: 0.0,
        log_density: 0.0,
        rock_density: 0.0,
        shrub_density: 0.0,
        grass_density: 0.0,
        ..SceneConfig::default()
    };
    generate_scene(&cfg).unwrap()
}

fn trunk(x: f64, y: f64, radius: f64) -> SceneElement {
    SceneElement {
        shape: Shape::Cylinder {
            base: Point3::new(x, y, -0.05),
            radius,
            height: 5.0,
        },
        traversability: Traversability::NonTraversable,
        p_pass: 0.0,
        intensity: IntensityProfile { mean: 30.0, std: 5.0 },
        thin: false,
    }
}

fn with_elements(base: Scene, elements: Vec<SceneElement>) -> Scene {
    Scene::new(base.extent_x, base.extent_y, base.ground, base.ground_intensity, elements)
}

#[test]
fn same_seed_gives_identical_scene() {
    let a = generate_scene(&config(0.4, 11)).unwrap();
    let b = generate_scene(&config(0.4, 11)).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    let c = generate_scene(&config(0.4, 12)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn calibrated_density_lands_near_target() {
    for (target, seed) in [(0.4, 1), (0.5, 2), (0.3, 3)] {
        let scene = generate_scene(&config(target, seed)).unwrap();
        let gt = ground_truth_voxelize(&scene, 0.1);
        let idx = ColumnIndex::from_keys(0.1, gt.labels.iter().map(|(k, _)| k));
        let rho = idx.mean_density();
        assert!(
            (rho - target).abs() <= DENSITY_TOLERANCE,
            "target {target} measured {rho}"
        );
    }
}

#[test]
fn zero_densities_give_bare_ground() {
    let scene = bare(4.0);
    assert!(scene.elements.is_empty());
    let gt = ground_truth_voxelize(&scene, 0.1);
    assert_eq!(gt.len(), 40 * 40);
    assert!(gt.labels.iter().all(|(_, l)| l.is_traversable()));
}

#[test]
fn trunk_voxelization_matches_dense_sampling() {
    let res = 0.1;
    let scene = with_elements(bare(4.0), vec![trunk(2.03, 1.97, 0.17)]);
    let gt = ground_truth_voxelize(&scene, res).to_map();
    let exact: std::collections::BTreeSet<VoxelKey> = gt
        .iter()
        .filter(|(_, l)| **l == Traversability::NonTraversable)
        .map(|(k, _)| *k)
        .collect();
    let sample = |radius: f64, lo_z: f64, hi_z: f64| {
        let mut set = std::collections::BTreeSet::new();
        let n = 120;
        for a in 0..=n {
            for b in 0..=n {
                let x = 2.03 - radius + 2.0 * radius * a as f64 / n as f64;
                let y = 1.97 - radius + 2.0 * radius * b as f64 / n as f64;
                if (x - 2.03).hypot(y - 1.97) > radius {
                    continue;
                }
                let mut z = lo_z;
                while z <= hi_z {
                    set.insert(VoxelKey::from_point(&Point3::new(x, y, z), res));
                    z += 0.02;
                }
            }
        }
        set
    };
    let inside = sample(0.17 - 1e-6, -0.05 + 1e-6, 4.95 - 1e-6);
    assert!(inside.is_subset(&exact));
    let inflated = sample(0.17 + 0.01, -0.06, 4.96);
    assert!(exact.is_subset(&inflated));
}

fn spec(sigma: f64) -> LidarSpec {
    LidarSpec {
        azimuth_steps: 360,
        range_sigma: sigma,
        ..LidarSpec::default()
    }
}

fn pose_at(scene: &Scene, x: f64, y: f64) -> SensorPose {
    SensorPose {
        t: 0.0,
        position: Point3::new(x, y, scene.ground_height(x, y) + 0.7),
        rotation: LidarSpec::default().mount_rotation(3),
    }
}

#[test]
fn noiseless_returns_lie_on_surfaces() {
    let scene = generate_scene(&config(0.4, 5)).unwrap();
    let rays = simulate_scan(&scene, &pose_at(&scene, 4.0, 4.0), &spec(0.0), 9);
    assert!(rays.len() > 1000);
    for r in &rays {
        let d = scene.surface_distance(&r.endpoint);
        assert!(d < 1e-6, "endpoint {:?} is {d} m off any surface", r.endpoint);
    }
}

#[test]
fn noisy_returns_stay_within_three_sigma() {
    let scene = generate_scene(&config(0.4, 6)).unwrap();
    let sigma = 0.01;
    let rays = simulate_scan(&scene, &pose_at(&scene, 4.0, 4.0), &spec(sigma), 10);
    let within = rays
        .iter()
        .filter(|r| scene.surface_distance(&r.endpoint) <= 3.0 * sigma)
        .count();
    assert!(within as f64 >= 0.99 * rays.len() as f64);
}

#[test]
fn vegetation_splits_beams() {
    let scene = generate_scene(&config(0.5, 7)).unwrap();
    let rays = simulate_scan(&scene, &pose_at(&scene, 4.0, 4.0), &spec(0.01), 1);
    assert!(rays.iter().any(|r| r.num_returns == 2));
    assert!(rays
        .windows(2)
        .filter(|w| w[0].num_returns == 2 && w[0].return_number == 1)
        .all(|w| w[1].return_number == 2
            && (w[1].endpoint - w[1].origin).norm() > (w[0].endpoint - w[0].origin).norm() - 0.06));
    let bare = bare(8.0);
    let rays = simulate_scan(&bare, &pose_at(&bare, 4.0, 4.0), &spec(0.01), 1);
    assert!(rays.iter().all(|r| r.num_returns == 1));
}

#[test]
fn scan_is_deterministic_per_seed() {
    let scene = generate_scene(&config(0.4, 8)).unwrap();
    let pose = pose_at(&scene, 3.0, 5.0);
    let a = simulate_scan(&scene, &pose, &spec(0.01), 4);
    let b = simulate_scan(&scene, &pose, &spec(0.01), 4);
    assert_eq!(a, b);
}

#[test]
fn mission_collides_with_blocking_trunk_and_detours() {
    let scene = with_elements(bare(8.0), vec![trunk(4.0, 4.0, 0.2)]);
    let mission = MissionSpec::new(vec![(1.0, 4.0), (7.0, 4.0)]);
    let lidar = LidarSpec {
        azimuth_steps: 120,
        ..LidarSpec::default()
    };
    let geom = RobotGeometry::default();
    let log = simulate_mission(&scene, &mission, &geom, &lidar, 3);
    assert_eq!(log.status, MissionStatus::Complete);
    let collisions: Vec<_> = log
        .poses
        .iter()
        .filter(|p| p.state == Traversability::NonTraversable)
        .collect();
    assert!(!collisions.is_empty());
    for c in &collisions {
        // trunk axis sits just beyond the front face
        let ahead = (Point3::new(4.0, 4.0, c.position.z) - c.position).dot(&c.heading());
        assert!(ahead > 0.5 && ahead < 0.5 + 0.2 + 0.2 + 0.06, "trunk {ahead} m ahead");
    }
    assert!(log.poses.windows(2).all(|w| w[0].t <= w[1].t));

    let mut map = VoxelMap::new(0.1);
    map.integrate_all(&log.rays);
    let (_, labels) = fuse_labels(&map, None, &log.poses, &geom).unwrap();
    let trunk_nt = labels.labels.iter().any(|(k, l)| {
        *l == Traversability::NonTraversable
            && (k.center(0.1).xy() - nalgebra::Point2::new(4.0, 4.0)).norm() < 0.35
    });
    assert!(trunk_nt, "trunk surface was not labelled non-traversable");
}

#[test]
fn unreachable_waypoint_reports_partial_mission() {
    // a wall of trunks across the route
    let walls: Vec<_> = (0..40).map(|i| trunk(4.0, 0.1 + 0.2 * i as f64, 0.12)).collect();
    let scene = with_elements(bare(8.0), walls);
    let mission = MissionSpec {
        max_collisions_per_waypoint: 2,
        ..MissionSpec::new(vec![(1.0, 4.0), (7.0, 4.0)])
    };
    let lidar = LidarSpec {
        azimuth_steps: 60,
        channels: 4,
        ..LidarSpec::default()
    };
    let log = simulate_mission(&scene, &mission, &RobotGeometry::default(), &lidar, 1);
    assert_eq!(log.status, MissionStatus::Partial { unreached: vec![1] });
}

#[test]
fn mount_rotation_tilts_and_advances() {
    let spec = LidarSpec::default();
    let a = spec.mount_rotation(0);
    let b = spec.mount_rotation(1);
    assert!(a.angle_to(&b) > 0.1);
    let up = a * Vector3::z();
    assert!((up.z - spec.mount_tilt_deg.to_radians().cos()).abs() < 1e-12);
}

fn level_pose(x: f64, y: f64, z: f64) -> SensorPose {
    SensorPose {
        t: 0.0,
        position: Point3::new(x, y, z),
        rotation: nalgebra::UnitQuaternion::identity(),
    }
}

#[test]
fn face_on_trunk_beam_returns_once_on_surface() {
    let scene = with_elements(bare(8.0), vec![trunk(4.0, 2.0, 0.2)]);
    let rays = simulate_beams(&scene, &level_pose(1.0, 2.0, 1.0), &[Vector3::x()], &spec(0.01), 3);
    assert_eq!(rays.len(), 1);
    assert_eq!((rays[0].return_number, rays[0].num_returns), (1, 1));
    assert!((rays[0].endpoint.x - 3.8).abs() <= 0.03);
}

#[test]
fn beam_into_empty_air_has_no_return() {
    let scene = bare(8.0);
    let up = Vector3::new(0.3, 0.0, 1.0);
    assert!(simulate_beams(&scene, &level_pose(4.0, 4.0, 1.0), &[up, Vector3::x()], &spec(0.01), 1).is_empty());
}

#[test]
fn grass_slab_passes_half_the_beams() {
    let slab = SceneElement {
        shape: Shape::BladeCluster {
            base: Point3::new(4.0, 4.0, 0.0),
            radius: 1.0,
            height: 2.0,
        },
        traversability: Traversability::Traversable,
        p_pass: 0.5,
        intensity: IntensityProfile { mean: 70.0, std: 10.0 },
        thin: false,
    };
    let scene = with_elements(bare(8.0), vec![slab]);
    let dirs = vec![Vector3::x(); 10_000];
    let rays = simulate_beams(&scene, &level_pose(1.0, 4.0, 1.0), &dirs, &spec(0.01), 5);
    let passed = 1.0 - rays.len() as f64 / 1e4;
    assert!((passed - 0.5).abs() <= 0.02, "pass fraction {passed}");
    assert!(rays.iter().all(|r| r.endpoint.x >= 3.0 - 0.05 && r.endpoint.x <= 5.0 + 0.05));
}

fn quick_lidar() -> LidarSpec {
    LidarSpec {
        azimuth_steps: 60,
        channels: 4,
        ..LidarSpec::default()
    }
}

#[test]
fn open_scene_mission_has_no_collisions() {
    let scene = bare(8.0);
    let mission = MissionSpec::lawnmower(8.0, 8.0, 3.0, 1.0);
    let log = simulate_mission(&scene, &mission, &RobotGeometry::default(), &quick_lidar(), 2);
    assert_eq!(log.status, MissionStatus::Complete);
    assert!(log.poses.iter().all(|p| p.state == Traversability::Traversable));
    assert!(log.poses.len() > 20);
}

#[test]
fn corridor_gap_is_passed_without_collision() {
    // trunk wall along x = 4 with a 1.4 m gap centred on y = 4
    let wall: Vec<_> = (0..40)
        .map(|i| 0.1 + 0.2 * i as f64)
        .filter(|y| (y - 4.0).abs() > 0.7)
        .map(|y| trunk(4.0, y, 0.12))
        .collect();
    let scene = with_elements(bare(8.0), wall);
    let through = MissionSpec::new(vec![(1.0, 4.0), (7.0, 4.0)]);
    let log = simulate_mission(&scene, &through, &RobotGeometry::default(), &quick_lidar(), 4);
    assert_eq!(log.status, MissionStatus::Complete);
    assert!(log.poses.iter().all(|p| p.state == Traversability::Traversable));
    // a route aimed straight at the wall hits it
    let blocked = MissionSpec::new(vec![(1.0, 1.5), (7.0, 1.5)]);
    let log = simulate_mission(&scene, &blocked, &RobotGeometry::default(), &quick_lidar(), 4);
    assert!(log.poses.iter().any(|p| p.state == Traversability::NonTraversable));
}

#[test]
fn mission_is_deterministic() {
    let scene = generate_scene(&config(0.4, 21)).unwrap();
    let mission = MissionSpec::lawnmower(8.0, 8.0, 4.0, 1.5);
    let a = simulate_mission(&scene, &mission, &RobotGeometry::default(), &quick_lidar(), 9);
    let b = simulate_mission(&scene, &mission, &RobotGeometry::default(), &quick_lidar(), 9);
    assert_eq!(a.rays, b.rays);
    assert_eq!(a.poses, b.poses);
    assert_eq!(a.status, b.status);
}

#[test]
fn trunk_inside_grass_is_non_traversable() {
    let grass = SceneElement {
        shape: Shape::BladeCluster {
            base: Point3::new(2.0, 2.0, -0.02),
            radius: 0.6,
            height: 0.6,
        },
        traversability: Traversability::Traversable,
        p_pass: 0.6,
        intensity: IntensityProfile { mean: 70.0, std: 10.0 },
        thin: true,
    };
    let scene = with_elements(bare(4.0), vec![grass, trunk(2.0, 2.0, 0.15)]);
    let gt = ground_truth_voxelize(&scene, 0.1).to_map();
    let at = |x: f64, y: f64, z: f64| gt[&VoxelKey::from_point(&Point3::new(x, y, z), 0.1)];
    assert_eq!(at(2.0, 2.0, 0.3), Traversability::NonTraversable);
    assert_eq!(at(2.45, 2.0, 0.3), Traversability::Traversable);
    assert_eq!(at(2.0, 2.0, 3.0), Traversability::NonTraversable);
}

#[test]
fn blocked_start_moves_to_the_nearest_clear_spot() {
    let scene = with_elements(bare(8.0), vec![trunk(1.0, 4.0, 0.3)]);
    let mission = MissionSpec::new(vec![(1.0, 4.0), (6.0, 4.0)]);
    let lidar = LidarSpec {
        azimuth_steps: 60,
        channels: 4,
        ..LidarSpec::default()
    };
    let log = simulate_mission(&scene, &mission, &RobotGeometry::default(), &lidar, 2);
    assert_eq!(log.status, MissionStatus::Complete);
    let first = log.poses.first().expect("pose events");
    assert!((first.position.xy() - nalgebra::Point2::new(1.0, 4.0)).norm() > 0.3);
}
