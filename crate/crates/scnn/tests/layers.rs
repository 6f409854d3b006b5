use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxtrav_scnn::kmap::{offset, CENTER, KERNEL_VOLUME};
use voxtrav_scnn::tensor::downsample_coords;
use voxtrav_scnn::{build_kernel_map, BatchNorm, ConvKind, Coord, KernelMap, SparseConv};

fn block(n: i32, keep: f64, rng: &mut ChaCha8Rng) -> Vec<Coord> {
    let mut c = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if rng.random_bool(keep) {
                    c.push([0, i, j, k]);
                }
            }
        }
    }
    if c.is_empty() {
        c.push([0, 0, 0, 0]);
    }
    c
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Dense convolution evaluated at `out` coordinates: zero padding, and input
/// taps at `out + δ·fine`.
fn dense_oracle(
    input: &[Coord],
    features: &[f64],
    out: &[Coord],
    fine: i32,
    conv: &SparseConv<f64>,
) -> Vec<f64> {
    let (ci, co) = (conv.c_in, conv.c_out);
    let grid: HashMap<Coord, usize> = input.iter().enumerate().map(|(r, c)| (*c, r)).collect();
    let mut y = Vec::new();
    for o in out {
        let mut acc = conv.bias.value.clone();
        for d in 0..conv.volume {
            let delta = if conv.volume == 1 { [0, 0, 0] } else { offset(d) };
            let q = [o[0], o[1] + delta[0] * fine, o[2] + delta[1] * fine, o[3] + delta[2] * fine];
            if let Some(&p) = grid.get(&q) {
                for a in 0..ci {
                    for b in 0..co {
                        acc[b] += features[p * ci + a] * conv.weight.value[(d * ci + a) * co + b];
                    }
                }
            }
        }
        y.extend(acc);
    }
    y
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

fn f32_conv(conv: &SparseConv<f64>) -> SparseConv<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut c = SparseConv::<f32>::new("c", conv.c_in, conv.c_out, conv.volume, &mut rng);
    c.weight.value = conv.weight.value.iter().map(|&v| v as f32).collect();
    c.bias.value = conv.bias.value.iter().map(|&v| v as f32).collect();
    c
}

fn check_against_oracle(
    input: &[Coord],
    features: &[f64],
    out: &[Coord],
    fine: i32,
    kmap: &KernelMap,
    conv: &SparseConv<f64>,
) {
    let expected = dense_oracle(input, features, out, fine, conv);
    let got = f32_conv(conv)
        .apply(&features.iter().map(|&v| v as f32).collect::<Vec<_>>(), kmap)
        .unwrap();
    let got: Vec<f64> = got.iter().map(|&v| v as f64).collect();
    assert!(close(&got, &expected, 1e-5), "sparse output differs from dense oracle");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn every_conv_kind_matches_a_dense_oracle(seed in any::<u64>(), n in 2i32..=8, dense in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = if dense { 1.0 } else { 0.4 };
        let coords = block(n, keep, &mut rng);
        let ci = rng.random_range(1..6);
        let co = rng.random_range(1..6);
        let mut conv = SparseConv::<f64>::new("c", ci, co, KERNEL_VOLUME, &mut rng);
        conv.bias.value = random(co, &mut rng);
        let x = random(coords.len() * ci, &mut rng);

        let same = build_kernel_map(&coords, 1, &coords, 1, ConvKind::SameSite).unwrap();
        check_against_oracle(&coords, &x, &coords, 1, &same, &conv);

        let coarse = downsample_coords(&coords, 1);
        let down = build_kernel_map(&coords, 1, &coarse, 2, ConvKind::Strided).unwrap();
        check_against_oracle(&coords, &x, &coarse, 1, &down, &conv);

        let xc = random(coarse.len() * ci, &mut rng);
        let up = build_kernel_map(&coarse, 2, &coords, 1, ConvKind::Transposed).unwrap();
        check_against_oracle(&coarse, &xc, &coords, 1, &up, &conv);
        prop_assert_eq!(&up, &down.transpose());

        let mut head = SparseConv::<f64>::new("h", ci, co, 1, &mut rng);
        head.bias.value = random(co, &mut rng);
        check_against_oracle(&coords, &x, &coords, 1, &same, &head);
    }
}

#[test]
fn single_site_same_conv_has_only_the_centre_pair() {
    let c = [[0, 3, -2, 5]];
    let m = build_kernel_map(&c, 1, &c, 1, ConvKind::SameSite).unwrap();
    assert_eq!(m.pair_count(), 1);
    assert_eq!(m.pairs[CENTER], vec![(0, 0)]);
    assert!(m.center_identity);
}

#[test]
fn neighbouring_sites_pair_across_one_offset_each_way() {
    let c = [[0, 0, 0, 0], [0, 1, 0, 0]];
    let m = build_kernel_map(&c, 1, &c, 1, ConvKind::SameSite).unwrap();
    // Brute force over every (input, output, offset) triple.
    let mut expected = vec![Vec::new(); KERNEL_VOLUME];
    for (r, o) in c.iter().enumerate() {
        for (d, list) in expected.iter_mut().enumerate() {
            let q = offset(d);
            for (p, i) in c.iter().enumerate() {
                if [o[1] + q[0], o[2] + q[1], o[3] + q[2]] == [i[1], i[2], i[3]] {
                    list.push((p as u32, r as u32));
                }
            }
        }
    }
    assert_eq!(m.pairs, expected);
    assert_eq!(m.pair_count(), 4);
    assert_eq!(m.pairs[CENTER], vec![(0, 0), (1, 1)]);
}

#[test]
fn batches_never_pair() {
    let c = [[0, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 1]];
    let m = build_kernel_map(&c, 1, &c, 1, ConvKind::SameSite).unwrap();
    assert_eq!(m.pair_count(), 5);
}

#[test]
fn strided_map_on_a_dense_block_halves_each_axis() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = block(4, 1.0, &mut rng);
    let coarse = downsample_coords(&c, 1);
    assert_eq!(coarse.len(), 8);
    let m = build_kernel_map(&c, 1, &coarse, 2, ConvKind::Strided).unwrap();
    assert_eq!(m.n_out, 8);
    for (d, list) in m.pairs.iter().enumerate() {
        let q = offset(d);
        for &(p, r) in list {
            let (i, o) = (c[p as usize], coarse[r as usize]);
            assert_eq!([i[1], i[2], i[3]], [o[1] + q[0], o[2] + q[1], o[3] + q[2]]);
        }
    }
    // Every fine site lands in the coarse cell it floors into.
    assert!(c.iter().all(|f| coarse.contains(&[0, f[1] / 2 * 2, f[2] / 2 * 2, f[3] / 2 * 2])));
}

#[test]
fn identity_and_zero_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = block(4, 0.5, &mut rng);
    let m = build_kernel_map(&c, 1, &c, 1, ConvKind::SameSite).unwrap();
    let x = random(c.len() * 3, &mut rng);
    let mut conv = SparseConv::<f64>::new("c", 3, 3, KERNEL_VOLUME, &mut rng);
    conv.weight.value.iter_mut().for_each(|w| *w = 0.0);
    for a in 0..3 {
        conv.weight.value[(CENTER * 3 + a) * 3 + a] = 1.0;
    }
    assert_eq!(conv.apply(&x, &m).unwrap(), x);
    conv.weight.value.iter_mut().for_each(|w| *w = 0.0);
    conv.bias.value = vec![0.5, -1.0, 2.0];
    let y = conv.apply(&x, &m).unwrap();
    assert!(y.chunks(3).all(|r| r == [0.5, -1.0, 2.0]));
}

#[test]
fn shape_and_context_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = [[0, 0, 0, 0]];
    let m = Arc::new(build_kernel_map(&c, 1, &c, 1, ConvKind::SameSite).unwrap());
    let mut conv = SparseConv::<f64>::new("c", 2, 2, KERNEL_VOLUME, &mut rng);
    assert!(conv.forward(&[1.0], &m, true).is_err());
    assert!(conv.backward(&[1.0, 1.0]).is_err());
    conv.forward(&[1.0, 2.0], &m, false).unwrap();
    assert!(conv.backward(&[1.0, 1.0]).is_err(), "evaluation mode keeps no context");
}

// ---------------------------------------------------------------------------
// Finite-difference checks in double precision.

const EPS: f64 = 1e-3;
const REL: f64 = 1e-4;

fn grad_close(numeric: f64, analytic: f64) -> bool {
    (numeric - analytic).abs() <= REL * numeric.abs().max(analytic.abs()).max(1e-3)
}

fn conv_loss(conv: &SparseConv<f64>, x: &[f64], m: &KernelMap, r: &[f64]) -> f64 {
    conv.apply(x, m).unwrap().iter().zip(r).map(|(a, b)| a * b).sum()
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let coords = block(5, 0.5, &mut rng);
    assert!(coords.len() >= 50, "{} sites", coords.len());
    let coarse = downsample_coords(&coords, 1);
    let cases = [
        (coords.clone(), 1, coords.clone(), 1, ConvKind::SameSite),
        (coords.clone(), 1, coarse.clone(), 2, ConvKind::Strided),
        (coarse.clone(), 2, coords.clone(), 1, ConvKind::Transposed),
    ];
    for (input, si, output, so, kind) in cases {
        let m = Arc::new(build_kernel_map(&input, si, &output, so, kind).unwrap());
        let (ci, co) = (3, 2);
        let mut conv = SparseConv::<f64>::new("c", ci, co, KERNEL_VOLUME, &mut rng);
        conv.bias.value = random(co, &mut rng);
        let x = random(input.len() * ci, &mut rng);
        let r = random(output.len() * co, &mut rng);
        conv.forward(&x, &m, true).unwrap();
        let gx = conv.backward(&r).unwrap();
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += EPS;
            xm[i] -= EPS;
            let num = (conv_loss(&conv, &xp, &m, &r) - conv_loss(&conv, &xm, &m, &r)) / (2.0 * EPS);
            assert!(grad_close(num, gx[i]), "{kind:?} input {i}: {num} vs {}", gx[i]);
        }
        for i in 0..conv.weight.value.len() {
            let w = conv.weight.value[i];
            conv.weight.value[i] = w + EPS;
            let lp = conv_loss(&conv, &x, &m, &r);
            conv.weight.value[i] = w - EPS;
            let lm = conv_loss(&conv, &x, &m, &r);
            conv.weight.value[i] = w;
            let num = (lp - lm) / (2.0 * EPS);
            assert!(grad_close(num, conv.weight.grad[i]), "{kind:?} weight {i}");
        }
        for b in 0..co {
            let col: f64 = r.chunks(co).map(|row| row[b]).sum();
            assert!((conv.bias.grad[b] - col).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_output_gradient_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coords = block(4, 0.6, &mut rng);
    let m = Arc::new(build_kernel_map(&coords, 1, &coords, 1, ConvKind::SameSite).unwrap());
    let mut conv = SparseConv::<f64>::new("c", 2, 3, KERNEL_VOLUME, &mut rng);
    let x = random(coords.len() * 2, &mut rng);
    conv.forward(&x, &m, true).unwrap();
    let gx = conv.backward(&vec![0.0; coords.len() * 3]).unwrap();
    assert!(gx.iter().chain(&conv.weight.grad).chain(&conv.bias.grad).all(|&g| g == 0.0));
}

#[test]
fn batch_norm_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, c) = (60, 4);
    let x = random(n * c, &mut rng);
    let r = random(n * c, &mut rng);
    let mut bn = BatchNorm::<f64>::new("bn", c);
    bn.gamma.value = random(c, &mut rng);
    bn.beta.value = random(c, &mut rng);
    let loss = |bn: &BatchNorm<f64>, x: &[f64]| -> f64 {
        let mut b = bn.clone();
        b.forward(x, true).unwrap().iter().zip(&r).map(|(a, b)| a * b).sum()
    };
    let mut trained = bn.clone();
    trained.forward(&x, true).unwrap();
    let gx = trained.backward(&r).unwrap();
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += EPS;
        xm[i] -= EPS;
        let num = (loss(&bn, &xp) - loss(&bn, &xm)) / (2.0 * EPS);
        assert!(grad_close(num, gx[i]), "input {i}: {num} vs {}", gx[i]);
    }
    for ch in 0..c {
        let mut p = bn.clone();
        p.gamma.value[ch] += EPS;
        let mut q = bn.clone();
        q.gamma.value[ch] -= EPS;
        let num = (loss(&p, &x) - loss(&q, &x)) / (2.0 * EPS);
        assert!(grad_close(num, trained.gamma.grad[ch]));
        let mut p = bn.clone();
        p.beta.value[ch] += EPS;
        let mut q = bn.clone();
        q.beta.value[ch] -= EPS;
        let num = (loss(&p, &x) - loss(&q, &x)) / (2.0 * EPS);
        assert!(grad_close(num, trained.beta.grad[ch]));
    }
}

#[test]
fn batch_norm_standardizes_in_training_and_is_stateless_in_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, c) = (500, 3);
    let x: Vec<f32> = (0..n * c).map(|i| rng.random_range(-2.0..5.0) * (1 + i % c) as f32).collect();
    let mut bn = BatchNorm::<f32>::new("bn", c);
    let y = bn.forward(&x, true).unwrap();
    for ch in 0..c {
        let col: Vec<f64> = y.chunks(c).map(|r| r[ch] as f64).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-5, "mean {mean}");
        assert!((var - 1.0).abs() < 1e-4, "var {var}");
    }
    let a = bn.forward(&x, false).unwrap();
    let b = bn.forward(&x, false).unwrap();
    assert_eq!(a, b);
    assert!(bn.forward(&x[..c], true).is_err(), "one site cannot be batch-normalized");
}

#[test]
fn running_statistics_move_by_the_momentum() {
    let mut bn = BatchNorm::<f64>::new("bn", 1);
    bn.forward(&[1.0, 3.0], true).unwrap();
    assert!((bn.running_mean.value[0] - 0.2).abs() < 1e-12);
    // Unbiased batch variance 2.0 folded into the unit prior.
    assert!((bn.running_var.value[0] - (0.9 + 0.1 * 2.0)).abs() < 1e-12);
}
