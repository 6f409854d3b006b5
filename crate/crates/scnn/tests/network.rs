use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxtrav_core::eval::FeatureSet;
use voxtrav_core::{FeatureVector, Traversability, VoxelKey};
use voxtrav_scnn::param::Param;
use voxtrav_scnn::{
    decide, ensemble_predict, masked_cross_entropy, vote_fraction, Adam, AdamConfig, Coord, EarlyStopping,
    EnsembleConfig, InputTransform, Model, SparseTensor, StepOutcome, StopDecision, UNet, UNetConfig,
    DEFAULT_CHANNELS,
};

use Traversability::{NonTraversable as NT, Traversable as TR};

fn scattered(n: usize, extent: i32, batch: i32, rng: &mut ChaCha8Rng) -> Vec<Coord> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert([
            rng.random_range(0..batch),
            rng.random_range(0..extent),
            rng.random_range(0..extent),
            rng.random_range(0..extent / 2),
        ]);
    }
    set.into_iter().collect()
}

fn tensor<T: voxtrav_scnn::Real>(coords: Vec<Coord>, c: usize, rng: &mut ChaCha8Rng) -> SparseTensor<T> {
    let f = (0..coords.len() * c).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
    SparseTensor::new(coords, 1, c, f).unwrap()
}

#[test]
fn default_plan_lands_near_two_million_parameters() {
    let net = UNet::<f32>::new(UNetConfig::new(13, DEFAULT_CHANNELS.to_vec()).unwrap(), 0);
    let n = net.parameter_count();
    assert!((1_000_000..=3_000_000).contains(&n), "{n} parameters");
    assert_eq!(net.config.levels(), 5);
    assert_eq!(net.head.c_out, 2);
}

#[test]
fn output_coordinates_equal_input_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = UNet::<f32>::new(UNetConfig::new(4, vec![4, 6, 8, 8, 8]).unwrap(), 3);
    for train in [true, false] {
        let x = tensor::<f32>(scattered(300, 32, 2, &mut rng), 4, &mut rng);
        let y = net.forward(&x, train).unwrap();
        assert_eq!(y.coords, x.coords);
        assert_eq!(y.features.len(), 2 * x.len());
        assert!(y.features.iter().all(|v| v.is_finite()));
    }
    let empty = SparseTensor::<f32>::new(Vec::new(), 1, 4, Vec::new()).unwrap();
    assert!(net.forward(&empty, false).unwrap().is_empty());
}

#[test]
fn duplicated_batches_get_identical_logits_in_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut net = UNet::<f32>::new(UNetConfig::new(3, vec![4, 6, 8]).unwrap(), 5);
    // Give the running statistics non-trivial values first.
    let warm = tensor::<f32>(scattered(200, 16, 1, &mut rng), 3, &mut rng);
    net.forward(&warm, true).unwrap();
    let single = tensor::<f32>(scattered(150, 16, 1, &mut rng), 3, &mut rng);
    let mut coords = single.coords.clone();
    coords.extend(single.coords.iter().map(|c| [1, c[1], c[2], c[3]]));
    let mut f = single.features.clone();
    f.extend_from_slice(&single.features);
    let double = SparseTensor::new(coords, 1, 3, f).unwrap();
    let a = net.forward(&single, false).unwrap();
    let b = net.forward(&double, false).unwrap();
    let n = single.len() * 2;
    assert_eq!(&b.features[..n], &a.features[..]);
    assert_eq!(&b.features[n..], &a.features[..]);
}

#[test]
fn network_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = tensor::<f64>(scattered(80, 10, 1, &mut rng), 3, &mut rng);
    let labels: Vec<Option<Traversability>> = (0..x.len())
        .map(|_| match rng.random_range(0..3) {
            0 => None,
            1 => Some(NT),
            _ => Some(TR),
        })
        .collect();
    let mut net = UNet::<f64>::new(UNetConfig::new(3, vec![3, 4, 5]).unwrap(), 11);
    let loss = |net: &UNet<f64>, x: &SparseTensor<f64>| -> f64 {
        let mut n = net.clone();
        let y = n.forward(x, true).unwrap();
        masked_cross_entropy(&y.features, &labels).unwrap().0
    };
    let reference = net.clone();
    net.zero_grad();
    let y = net.forward(&x, true).unwrap();
    let (_, g) = masked_cross_entropy(&y.features, &labels).unwrap();
    let gx = net.backward(&g).unwrap();
    let eps = 1e-6;
    let close = |num: f64, ana: f64| (num - ana).abs() <= 1e-4 * num.abs().max(ana.abs()).max(1e-4);
    for i in (0..x.features.len()).step_by(7) {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp.features[i] += eps;
        xm.features[i] -= eps;
        let num = (loss(&reference, &xp) - loss(&reference, &xm)) / (2.0 * eps);
        assert!(close(num, gx[i]), "input {i}: {num} vs {}", gx[i]);
    }
    let grads: Vec<Param<f64>> = net.params().into_iter().cloned().collect();
    for (pi, p) in grads.iter().enumerate() {
        for i in (0..p.len()).step_by(p.len() / 3 + 1) {
            let mut plus = reference.clone();
            plus.params_mut()[pi].value[i] += eps;
            let mut minus = reference.clone();
            minus.params_mut()[pi].value[i] -= eps;
            let num = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * eps);
            assert!(close(num, p.grad[i]), "{} [{i}]: {num} vs {}", p.name, p.grad[i]);
        }
    }
}

#[test]
fn cross_entropy_examples_and_masking() {
    let (l, _) = masked_cross_entropy(&[10.0f64, -10.0], &[Some(NT)]).unwrap();
    assert!(l < 3e-9 && l > 1e-9, "{l}");
    let (l, _) = masked_cross_entropy(&[0.0f64, 0.0], &[Some(TR)]).unwrap();
    assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    assert!(masked_cross_entropy(&[0.0f64, 0.0], &[None]).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels = [Some(TR), None, Some(NT), None, Some(TR)];
    let logits: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
    let (l0, g) = masked_cross_entropy(&logits, &labels).unwrap();
    for s in [1, 3] {
        assert_eq!(g[2 * s], 0.0);
        assert_eq!(g[2 * s + 1], 0.0);
        let mut moved = logits.clone();
        moved[2 * s] += 5.0;
        moved[2 * s + 1] -= 2.0;
        assert_eq!(masked_cross_entropy(&moved, &labels).unwrap().0, l0);
    }
    for i in 0..logits.len() {
        let (mut p, mut m) = (logits.clone(), logits.clone());
        p[i] += 1e-5;
        m[i] -= 1e-5;
        let num = (masked_cross_entropy(&p, &labels).unwrap().0 - masked_cross_entropy(&m, &labels).unwrap().0) / 2e-5;
        assert!((num - g[i]).abs() < 1e-5, "{num} vs {}", g[i]);
    }
}

#[test]
fn ties_resolve_to_non_traversable() {
    assert_eq!(decide(&[0.3, 0.3]), NT);
    assert_eq!(decide(&[0.3, 0.30001]), TR);
    assert_eq!(decide(&[1.0, -1.0]), NT);
}

fn scalar(v: f64, g: f64) -> Param<f64> {
    let mut p = Param::filled("p", vec![1], v);
    p.grad[0] = g;
    p
}

#[test]
fn adam_first_step_and_decay() {
    let mut p = scalar(0.0, 1.0);
    let mut adam = Adam::new(AdamConfig::new(1e-4, 9e-4));
    assert_eq!(adam.step(&mut [&mut p]), StepOutcome::Applied);
    assert!((p.value[0] + 1e-4 / (1.0 + 1e-8)).abs() < 1e-15, "{}", p.value[0]);

    let mut p = scalar(0.7, 0.0);
    let mut adam = Adam::new(AdamConfig::new(1e-4, 0.0));
    adam.step(&mut [&mut p]);
    assert_eq!(p.value[0], 0.7);

    let mut p = scalar(2.0, 0.0);
    let mut adam = Adam::new(AdamConfig::new(1e-2, 0.5));
    for step in 1..=3 {
        adam.step(&mut [&mut p]);
        assert!((p.value[0] - 2.0 * (1.0 - 5e-3f64).powi(step)).abs() < 1e-12);
    }

    let mut p = scalar(1.0, f64::NAN);
    let mut adam = Adam::new(AdamConfig::new(1e-2, 0.5));
    assert_eq!(adam.step(&mut [&mut p]), StepOutcome::Skipped);
    assert_eq!((p.value[0], adam.steps, adam.skipped), (1.0, 0, 1));
}

#[test]
fn early_stopping_fires_exactly_patience_epochs_after_the_best() {
    let mut stop = EarlyStopping::new(5);
    let losses = [1.0, 0.8, 0.6, 0.61, 0.6, 0.7, 0.65, 0.9, 0.5];
    let mut stopped = None;
    for (e, &l) in losses.iter().enumerate() {
        if stop.update(e + 1, l) == StopDecision::Stop {
            stopped = Some(e + 1);
            break;
        }
    }
    assert_eq!(stop.best_epoch, 3);
    assert_eq!(stopped, Some(8));
}

#[test]
fn votes_average_binary_decisions() {
    let mut votes = vec![vec![TR]; 7];
    votes.extend(vec![vec![NT]; 3]);
    assert!((vote_fraction(&votes)[0] - 0.7).abs() < 1e-15);
    assert!(EnsembleConfig::with_seeds(vec![1, 1]).is_err());
    assert!(EnsembleConfig::new(0, 1).is_err());
    assert_eq!(EnsembleConfig::new(10, 3).unwrap().n_models(), 10);
}

fn sites(n: usize, rng: &mut ChaCha8Rng) -> Vec<(VoxelKey, FeatureVector)> {
    scattered(n, 24, 1, rng)
        .into_iter()
        .map(|c| {
            let mut f = [0f32; 13];
            f.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            (VoxelKey::new(c[1] - 12, c[2] - 12, c[3]), FeatureVector(f))
        })
        .collect()
}

#[test]
fn ensemble_probabilities_are_vote_fractions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = sites(400, &mut rng);
    let make = |seed| Model::new(InputTransform::identity(FeatureSet::Full), vec![4, 6, 8], seed).unwrap();
    let mut one = vec![make(1)];
    let p = ensemble_predict(&mut one, &s).unwrap();
    assert_eq!(p.len(), s.len());
    assert!(p.iter().all(|&v| v == 0.0 || v == 1.0));

    let mut same = vec![make(2), make(2), make(2)];
    assert!(ensemble_predict(&mut same, &s).unwrap().iter().all(|&v| v == 0.0 || v == 1.0));

    let mut mixed: Vec<Model> = (10..14).map(make).collect();
    let p = ensemble_predict(&mut mixed, &s).unwrap();
    assert!(p.iter().all(|&v| (v * 4.0).fract() == 0.0 && (0.0..=1.0).contains(&v)));
    assert!(ensemble_predict(&mut [], &s).is_err());
}
