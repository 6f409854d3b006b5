use rand::Rng;

use super::{CubeSample, CUBE_SIZE};

/// Shift of all sites by `amount` voxels along one signed axis
/// (`axis` 0..3, `negative` flips the sign).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Translation {
    pub axis: usize,
    pub negative: bool,
    pub amount: i32,
}

/// The random choices of one augmentation pass. Pruning draws per site at
/// apply time; everything else is fixed by the plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentPlan {
    pub prune_probability: f64,
    pub mirror_x: bool,
    pub mirror_y: bool,
    /// Counter-clockwise quarter turns about the vertical axis.
    pub quarter_turns: u8,
    pub translation: Option<Translation>,
}

impl AugmentPlan {
    pub const PRUNE: f64 = 0.05;
    pub const MIRROR: f64 = 0.5;
    pub const TRANSLATE: f64 = 0.5;
    pub const MAX_SHIFT: i32 = 10;

    pub fn identity() -> Self {
        Self {
            prune_probability: 0.0,
            mirror_x: false,
            mirror_y: false,
            quarter_turns: 0,
            translation: None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mirror_x = rng.random_bool(Self::MIRROR);
        let mirror_y = rng.random_bool(Self::MIRROR);
        let quarter_turns = rng.random_range(0..4u8);
        let translation = rng.random_bool(Self::TRANSLATE).then(|| {
            let dir = rng.random_range(0..6usize);
            Translation {
                axis: dir / 2,
                negative: dir % 2 == 1,
                amount: rng.random_range(1..=Self::MAX_SHIFT),
            }
        });
        Self {
            prune_probability: Self::PRUNE,
            mirror_x,
            mirror_y,
            quarter_turns,
            translation,
        }
    }

    /// Maps one local coordinate; `None` when it leaves the cube.
    pub fn map_coord(&self, c: [u8; 3]) -> Option<[u8; 3]> {
        let last = CUBE_SIZE - 1;
        let [mut i, mut j, mut k] = c.map(|v| v as i32);
        if self.mirror_x {
            i = last - i;
        }
        if self.mirror_y {
            j = last - j;
        }
        for _ in 0..self.quarter_turns % 4 {
            (i, j) = (last - j, i);
        }
        if let Some(t) = self.translation {
            let d = if t.negative { -t.amount } else { t.amount };
            match t.axis {
                0 => i += d,
                1 => j += d,
                _ => k += d,
            }
        }
        let inside = |v: i32| (0..CUBE_SIZE).contains(&v);
        (inside(i) && inside(j) && inside(k)).then(|| [i as u8, j as u8, k as u8])
    }

    /// Prunes, mirrors, rotates and translates the cube's sites. Features and
    /// labels travel with their sites unchanged.
    pub fn apply<R: Rng + ?Sized>(&self, cube: &CubeSample, rng: &mut R) -> CubeSample {
        let mut out = CubeSample {
            origin: cube.origin,
            coords: Vec::with_capacity(cube.len()),
            features: Vec::with_capacity(cube.len()),
            labels: Vec::with_capacity(cube.len()),
        };
        for s in 0..cube.len() {
            if self.prune_probability > 0.0 && rng.random_bool(self.prune_probability) {
                continue;
            }
            if let Some(c) = self.map_coord(cube.coords[s]) {
                out.coords.push(c);
                out.features.push(cube.features[s]);
                out.labels.push(cube.labels[s]);
            }
        }
        out
    }
}

/// Draws a fresh plan and applies it.
pub fn augment<R: Rng + ?Sized>(cube: &CubeSample, rng: &mut R) -> CubeSample {
    AugmentPlan::sample(rng).apply(cube, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::Traversability;
    use crate::map::{FeatureVector, VoxelKey};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize, seed: u64) -> CubeSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < n {
            seen.insert([rng.random_range(0..32u8), rng.random_range(0..32u8), rng.random_range(0..32u8)]);
        }
        let coords: Vec<_> = seen.into_iter().collect();
        CubeSample {
            origin: VoxelKey::new(0, 0, 0),
            features: coords
                .iter()
                .map(|c| FeatureVector([c[0] as f32, c[1] as f32, c[2] as f32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]))
                .collect(),
            labels: coords
                .iter()
                .map(|c| Some(if c[2] % 2 == 0 { Traversability::Traversable } else { Traversability::NonTraversable }))
                .collect(),
            coords,
        }
    }

    fn site_set(c: &CubeSample) -> std::collections::BTreeSet<[u8; 3]> {
        c.coords.iter().copied().collect()
    }

    #[test]
    fn identity_plan_is_identity() {
        let c = cube(500, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(AugmentPlan::identity().apply(&c, &mut rng), c);
    }

    #[test]
    fn two_quarter_turns_equal_a_half_turn() {
        let c = cube(800, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let quarter = AugmentPlan { quarter_turns: 1, ..AugmentPlan::identity() };
        let half = AugmentPlan { quarter_turns: 2, ..AugmentPlan::identity() };
        let twice = quarter.apply(&quarter.apply(&c, &mut rng), &mut rng);
        assert_eq!(site_set(&twice), site_set(&half.apply(&c, &mut rng)));
        // direct oracle for the half turn
        let direct: std::collections::BTreeSet<_> = c.coords.iter().map(|&[i, j, k]| [31 - i, 31 - j, k]).collect();
        assert_eq!(site_set(&twice), direct);
    }

    #[test]
    fn prune_keeps_ninety_five_percent() {
        let c = cube(10_000, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let plan = AugmentPlan { prune_probability: AugmentPlan::PRUNE, ..AugmentPlan::identity() };
        let kept = plan.apply(&c, &mut rng).len() as f64 / 1e4;
        assert!((kept - 0.95).abs() <= 0.01, "kept {kept}");
    }

    #[test]
    fn translation_discards_sites_leaving_the_cube() {
        let c = cube(2000, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = AugmentPlan {
            translation: Some(Translation { axis: 2, negative: true, amount: 10 }),
            ..AugmentPlan::identity()
        };
        let out = plan.apply(&c, &mut rng);
        let expected = c.coords.iter().filter(|c| c[2] >= 10).count();
        assert_eq!(out.len(), expected);
        assert!(out.coords.iter().all(|c| c[2] < 22));
    }

    #[test]
    fn labels_follow_their_sites() {
        let c = cube(3000, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let out = augment(&c, &mut rng);
            out.validate().unwrap();
            for s in 0..out.len() {
                // the first three features record the pre-image coordinates
                let f = out.features[s].0;
                let pre = [f[0] as u8, f[1] as u8, f[2] as u8];
                let src = c.coords.iter().position(|&x| x == pre).unwrap();
                assert_eq!(out.labels[s], c.labels[src]);
            }
        }
    }
}
