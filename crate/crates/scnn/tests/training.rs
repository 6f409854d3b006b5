use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxtrav_core::dataset::CubeSample;
use voxtrav_core::{FeatureVector, Traversability, VoxelKey};
use voxtrav_scnn::{train, TrainConfig};

/// Ground slab with pillars and unlabelled clutter, features loosely tied
/// to the label.
fn synthetic_cube(seed: u64) -> CubeSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cube = CubeSample {
        origin: VoxelKey::new(0, 0, 0),
        coords: Vec::new(),
        features: Vec::new(),
        labels: Vec::new(),
    };
    let pillars: Vec<(u8, u8)> = (0..6).map(|_| (rng.random_range(2..30), rng.random_range(2..30))).collect();
    for i in 0..32u8 {
        for j in 0..32u8 {
            let pillar = pillars.iter().any(|&(a, b)| a.abs_diff(i) <= 1 && b.abs_diff(j) <= 1);
            let top = if pillar { 12 } else if rng.random_bool(0.15) { 3 } else { 1 };
            for k in 0..top {
                if !pillar && k == 0 && rng.random_bool(0.6) {
                    continue;
                }
                let label = match (pillar, k) {
                    (true, _) => Some(Traversability::NonTraversable),
                    (false, 0) => Some(Traversability::Traversable),
                    _ if rng.random_bool(0.5) => Some(Traversability::Traversable),
                    _ => None,
                };
                let mut f = [0f32; 13];
                f.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                f[6] = if pillar { 20.0 } else { 5.0 } + rng.random_range(-3.0..3.0);
                f[7] = if pillar { 2.0 } else { 0.5 };
                cube.coords.push([i, j, k]);
                cube.features.push(FeatureVector(f));
                cube.labels.push(label);
            }
        }
    }
    cube
}

#[test]
fn two_cubes_overfit_within_two_hundred_epochs() {
    let cubes = vec![synthetic_cube(1), synthetic_cube(2)];
    let config = TrainConfig {
        max_epochs: 200,
        patience: 199,
        augment: false,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let (_, log) = train(&cubes, &cubes, &config).unwrap();
    let reached = log.epochs.iter().position(|e| e.train_loss < 0.05);
    assert!(reached.is_some(), "final record {:?}", log.epochs.last());
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        channels: vec![4, 8, 8],
        max_epochs: 6,
        patience: 2,
        batch_size: 2,
        lr: 1e-3,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn fixed_seed_reproduces_weights_exactly() {
    let cubes: Vec<CubeSample> = (10..14).map(synthetic_cube).collect();
    let (a, la) = train(&cubes[..3], &cubes[3..], &small_config(5)).unwrap();
    let (b, lb) = train(&cubes[..3], &cubes[3..], &small_config(5)).unwrap();
    let (c, _) = train(&cubes[..3], &cubes[3..], &small_config(6)).unwrap();
    let values = |m: &voxtrav_scnn::Model| -> Vec<f32> {
        m.net.params().iter().flat_map(|p| p.value.clone()).collect()
    };
    assert_eq!(values(&a), values(&b));
    assert_ne!(values(&a), values(&c));
    let strip = |l: &voxtrav_scnn::TrainLog| -> Vec<(f64, f64)> {
        l.epochs.iter().map(|e| (e.train_loss, e.val_loss)).collect()
    };
    assert_eq!(strip(&la), strip(&lb));
    assert_eq!(a.input, b.input);
}

#[test]
fn log_records_the_stop_and_keeps_the_best_epoch() {
    let cubes: Vec<CubeSample> = (20..23).map(synthetic_cube).collect();
    let config = TrainConfig {
        max_epochs: 40,
        patience: 2,
        lr: 3e-2,
        ..small_config(9)
    };
    let (mut model, log) = train(&cubes[..2], &cubes[2..], &config).unwrap();
    let best = log
        .epochs
        .iter()
        .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
        .unwrap();
    assert_eq!(best.epoch, log.best_epoch);
    if log.stopped_early {
        assert_eq!(log.epochs.len(), log.best_epoch + config.patience);
    } else {
        assert_eq!(log.epochs.len(), config.max_epochs);
    }
    // The returned weights are the best epoch's.
    let prepared: Vec<_> = cubes[2..]
        .iter()
        .map(|c| voxtrav_scnn::PreparedCube::new(c, &model.input))
        .collect();
    let val = voxtrav_scnn::train::evaluate_loss(&mut model.net, &prepared, 64).unwrap();
    assert!((val - log.best_val_loss).abs() < 1e-9, "{val} vs {}", log.best_val_loss);
    let mut csv = Vec::new();
    log.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("epoch,train_loss,val_loss,seconds\n"));
    assert_eq!(text.lines().count(), log.epochs.len() + 1);
}

#[test]
fn empty_splits_and_bad_configs_are_rejected() {
    let cubes = vec![synthetic_cube(30)];
    assert!(train(&[], &cubes, &small_config(1)).is_err());
    assert!(train(&cubes, &[], &small_config(1)).is_err());
    let bad = TrainConfig {
        patience: 10,
        max_epochs: 10,
        ..small_config(1)
    };
    assert!(train(&cubes, &cubes, &bad).is_err());
}

#[test]
fn augmented_cubes_below_the_site_floor_sit_out() {
    // exactly at the floor: any pruned site drops the cube for that epoch
    let mut cube = synthetic_cube(30);
    cube.coords.truncate(150);
    cube.features.truncate(150);
    cube.labels.truncate(150);
    let config = TrainConfig { max_epochs: 3, patience: 2, ..small_config(1) };
    let (_, log) = train(std::slice::from_ref(&cube), std::slice::from_ref(&cube), &config).unwrap();
    assert!(log.epochs.iter().all(|e| e.train_loss.is_nan() && e.val_loss.is_finite()), "{:?}", log.epochs);
    let config = TrainConfig { augment: false, ..config };
    let (_, log) = train(std::slice::from_ref(&cube), std::slice::from_ref(&cube), &config).unwrap();
    assert!(log.epochs.iter().all(|e| e.train_loss.is_finite()));
}
