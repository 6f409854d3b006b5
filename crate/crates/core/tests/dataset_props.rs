use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voxtrav_core::dataset::*;
use voxtrav_core::{FeatureVector, Traversability, VoxelKey, FEATURE_DIM};

fn site(key: VoxelKey, n: usize) -> Site {
    let mut f = [0f32; FEATURE_DIM];
    f[0] = n as f32;
    let label = match n % 3 {
        0 => None,
        1 => Some(Traversability::Traversable),
        _ => Some(Traversability::NonTraversable),
    };
    Site { key, features: FeatureVector(f), label }
}

fn full_cube(n: usize) -> CubeSample {
    let sites: Vec<Site> = (0..n)
        .map(|s| {
            let (i, j, k) = (s % 32, (s / 32) % 32, s / 1024);
            site(VoxelKey::new(i as i32, j as i32, k as i32), s)
        })
        .collect();
    let mut cubes = split_sites(&sites);
    assert_eq!(cubes.len(), 1);
    cubes.remove(0)
}

/// The eight mirror/rotation plans, without pruning or translation.
fn planar_plans() -> Vec<AugmentPlan> {
    let mut out = Vec::new();
    for mirror_x in [false, true] {
        for q in 0..4 {
            out.push(AugmentPlan { mirror_x, quarter_turns: q, ..AugmentPlan::identity() });
        }
    }
    out
}

fn site_set(cube: &CubeSample) -> BTreeSet<([u8; 3], u32)> {
    cube.coords.iter().zip(&cube.features).map(|(c, f)| (*c, f.0[0] as u32)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tiles_partition_the_keys(raw in prop::collection::btree_set((-80i32..80, -80i32..80, -20i32..40), 1..600)) {
        let keys: Vec<VoxelKey> = raw.iter().map(|&(i, j, k)| VoxelKey::new(i, j, k)).collect();
        let tiles = tile_keys(&keys);
        let mut seen = BTreeSet::new();
        for (origin, members) in &tiles {
            for k in members {
                prop_assert!(seen.insert(*k), "{k:?} in two tiles");
                let d = [k.i - origin.i, k.j - origin.j, k.k - origin.k];
                prop_assert!(d.iter().all(|v| (0..CUBE_SIZE).contains(v)));
            }
        }
        prop_assert_eq!(seen.len(), keys.len());
        // origins sit on the lattice anchored at the minimum key
        let min = keys.iter().fold(keys[0], |a, k| VoxelKey::new(a.i.min(k.i), a.j.min(k.j), a.k.min(k.k)));
        for o in tiles.keys() {
            prop_assert!((o.i - min.i) % CUBE_SIZE == 0 && (o.j - min.j) % CUBE_SIZE == 0 && (o.k - min.k) % CUBE_SIZE == 0);
        }
    }

    #[test]
    fn cubes_keep_exactly_the_tiles_at_the_floor(blocks in prop::collection::vec(100usize..220, 1..5)) {
        // block b fills the start of tile (b, 0, 0) with the given site count
        let mut sites = Vec::new();
        for (b, &n) in blocks.iter().enumerate() {
            for s in 0..n {
                let key = VoxelKey::new(32 * b as i32 + (s % 32) as i32, (s / 32) as i32, 0);
                sites.push(site(key, sites.len()));
            }
        }
        let cubes = split_sites(&sites);
        let kept: Vec<usize> = blocks.iter().copied().filter(|&n| n >= MIN_CUBE_SITES).collect();
        prop_assert_eq!(cubes.iter().map(CubeSample::len).collect::<Vec<_>>(), kept);
        let by_key: HashMap<VoxelKey, &Site> = sites.iter().map(|s| (s.key, s)).collect();
        for cube in &cubes {
            for s in 0..cube.len() {
                let src = by_key[&cube.key(s)];
                prop_assert_eq!(cube.features[s], src.features);
                prop_assert_eq!(cube.labels[s], src.label);
            }
        }
    }

    #[test]
    fn planar_plans_form_a_closed_group(a in 0usize..8, b in 0usize..8) {
        let plans = planar_plans();
        let cube = full_cube(4000);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let twice = plans[b].apply(&plans[a].apply(&cube, &mut rng), &mut rng);
        prop_assert_eq!(twice.len(), cube.len());
        let target = site_set(&twice);
        let matches = plans.iter().filter(|p| site_set(&p.apply(&cube, &mut rng)) == target).count();
        prop_assert_eq!(matches, 1);
    }

    #[test]
    fn augmented_sites_keep_their_labels(seed in any::<u64>()) {
        let cube = full_cube(3000);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = augment(&cube, &mut rng);
        let src: HashMap<u32, (FeatureVector, Option<Traversability>)> = (0..cube.len())
            .map(|s| (cube.features[s].0[0] as u32, (cube.features[s], cube.labels[s])))
            .collect();
        let mut coords = BTreeSet::new();
        for s in 0..out.len() {
            let (f, l) = src[&(out.features[s].0[0] as u32)];
            prop_assert_eq!(out.features[s], f);
            prop_assert_eq!(out.labels[s], l);
            prop_assert!(coords.insert(out.coords[s]));
        }
    }
}

#[test]
fn quarter_turns_compose_cyclically() {
    let cube = full_cube(5000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let turn = |q: u8| AugmentPlan { quarter_turns: q, ..AugmentPlan::identity() };
    let mut current = cube.clone();
    for n in 1..=8u8 {
        current = turn(1).apply(&current, &mut rng);
        assert_eq!(site_set(&current), site_set(&turn(n % 4).apply(&cube, &mut rng)), "after {n} turns");
    }
    assert_eq!(site_set(&current), site_set(&cube));
}

#[test]
fn site_floor_boundary() {
    let at = |n: usize| -> Vec<Site> {
        (0..n).map(|s| site(VoxelKey::new((s % 32) as i32, (s / 32) as i32, 3), s)).collect()
    };
    assert!(split_sites(&at(149)).is_empty());
    assert_eq!(split_sites(&at(150)).len(), 1);
}

#[test]
fn pruning_retains_ninety_five_percent_of_ten_thousand_sites() {
    let cube = full_cube(10_000);
    let plan = AugmentPlan { prune_probability: AugmentPlan::PRUNE, ..AugmentPlan::identity() };
    for seed in 0..20 {
        let kept = plan.apply(&cube, &mut ChaCha8Rng::seed_from_u64(seed)).len() as f64 / 10_000.0;
        assert!((kept - 0.95).abs() <= 0.01, "seed {seed}: {kept}");
    }
}
