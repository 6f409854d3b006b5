use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxtrav_core::dataset::{AugmentPlan, CubeSample, MIN_CUBE_SITES};
use voxtrav_core::eval::FeatureSet;
use voxtrav_core::Traversability;

use crate::error::{Error, Result};
use crate::loss::masked_cross_entropy;
use crate::model::{InputTransform, Model};
use crate::optim::{Adam, AdamConfig, StepOutcome};
use crate::tensor::SparseTensor;
use crate::unet::{UNet, DEFAULT_CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    /// Cubes per batch.
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Fresh random augmentation of every training cube each epoch.
    pub augment: bool,
    pub channels: Vec<usize>,
    pub feature_set: FeatureSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 9e-4,
            batch_size: 64,
            patience: 5,
            max_epochs: 250,
            seed: 0,
            augment: true,
            channels: DEFAULT_CHANNELS.to_vec(),
            feature_set: FeatureSet::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning rate must be positive and weight decay non-negative");
        }
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return bad("batch size, patience and epoch limit must be positive");
        }
        if self.patience >= self.max_epochs {
            return bad("patience must be smaller than the epoch limit");
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return bad("channel plan must be non-empty and positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub skipped_steps: u64,
}

impl TrainLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,train_loss,val_loss,seconds")?;
        for e in &self.epochs {
            writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.seconds)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops once the validation loss has failed to improve for `patience`
/// consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            return StopDecision::Improved;
        }
        self.bad_epochs += 1;
        if self.bad_epochs >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

/// A cube with its features already projected and standardized.
#[derive(Debug, Clone)]
pub struct PreparedCube {
    pub coords: Vec<[u8; 3]>,
    pub features: Vec<f32>,
    pub labels: Vec<Option<Traversability>>,
}

impl PreparedCube {
    pub fn new(cube: &CubeSample, transform: &InputTransform) -> Self {
        let mut features = Vec::with_capacity(cube.len() * transform.dim());
        for f in &cube.features {
            transform.apply_into(f, &mut features);
        }
        Self {
            coords: cube.coords.clone(),
            features,
            labels: cube.labels.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Same draw order as [`AugmentPlan::apply`].
    pub fn augmented<R: Rng + ?Sized>(&self, plan: &AugmentPlan, rng: &mut R) -> Self {
        let dim = if self.is_empty() { 0 } else { self.features.len() / self.len() };
        let mut out = PreparedCube {
            coords: Vec::with_capacity(self.len()),
            features: Vec::with_capacity(self.features.len()),
            labels: Vec::with_capacity(self.len()),
        };
        for s in 0..self.len() {
            if plan.prune_probability > 0.0 && rng.random_bool(plan.prune_probability) {
                continue;
            }
            if let Some(c) = plan.map_coord(self.coords[s]) {
                out.coords.push(c);
                out.features.extend_from_slice(&self.features[s * dim..(s + 1) * dim]);
                out.labels.push(self.labels[s]);
            }
        }
        out
    }
}

/// Concatenates cubes into one tensor at cube-local coordinates, using the
/// position in `cubes` as batch index.
pub fn assemble_batch(cubes: &[&PreparedCube], dim: usize) -> Result<(SparseTensor<f32>, Vec<Option<Traversability>>)> {
    let n: usize = cubes.iter().map(|c| c.len()).sum();
    let mut coords = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (b, cube) in cubes.iter().enumerate() {
        for c in &cube.coords {
            coords.push([b as i32, c[0] as i32, c[1] as i32, c[2] as i32]);
        }
        features.extend_from_slice(&cube.features);
        labels.extend_from_slice(&cube.labels);
    }
    Ok((SparseTensor::new(coords, 1, dim, features)?, labels))
}

/// Loss summed over labelled sites of a batch, with their count.
fn batch_loss(net: &mut UNet<f32>, cubes: &[&PreparedCube], dim: usize) -> Result<Option<(f64, usize)>> {
    let (x, labels) = assemble_batch(cubes, dim)?;
    let labelled = labels.iter().filter(|l| l.is_some()).count();
    if labelled == 0 {
        return Ok(None);
    }
    let logits = net.forward(&x, false)?;
    let (loss, _) = masked_cross_entropy(&logits.features, &labels)?;
    Ok(Some((loss * labelled as f64, labelled)))
}

/// Mean loss per labelled site over all `cubes` in evaluation mode.
pub fn evaluate_loss(net: &mut UNet<f32>, cubes: &[PreparedCube], batch_size: usize) -> Result<f64> {
    let dim = net.config.in_channels;
    let (mut sum, mut count) = (0.0, 0usize);
    for chunk in cubes.chunks(batch_size) {
        let refs: Vec<&PreparedCube> = chunk.iter().collect();
        if let Some((s, c)) = batch_loss(net, &refs, dim)? {
            sum += s;
            count += c;
        }
    }
    if count == 0 {
        return Err(Error::NoLabels);
    }
    Ok(sum / count as f64)
}

/// Trains one network and returns it with the weights of its best
/// validation epoch. Input statistics come from the training cubes only.
pub fn train(train: &[CubeSample], val: &[CubeSample], config: &TrainConfig) -> Result<(Model, TrainLog)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let transform = InputTransform::fit(config.feature_set, train.iter().flat_map(|c| c.features.iter()))?;
    let train_cubes: Vec<PreparedCube> = train.iter().map(|c| PreparedCube::new(c, &transform)).collect();
    let val_cubes: Vec<PreparedCube> = val.iter().map(|c| PreparedCube::new(c, &transform)).collect();
    let mut model = Model::new(transform, config.channels.clone(), config.seed)?;
    let dim = model.input.dim();
    let mut best = model.net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5DEE_CE66_D1CE_F00D);
    let mut adam = Adam::new(AdamConfig::new(config.lr, config.weight_decay));
    let mut stopper = EarlyStopping::new(config.patience);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..train_cubes.len()).collect();
    for epoch in 1..=config.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let augmented: Vec<PreparedCube>;
            let refs: Vec<&PreparedCube> = if config.augment {
                // cubes pushed below the site floor sit this epoch out
                augmented = chunk
                    .iter()
                    .map(|&i| {
                        let plan = AugmentPlan::sample(&mut rng);
                        train_cubes[i].augmented(&plan, &mut rng)
                    })
                    .filter(|c| c.len() >= MIN_CUBE_SITES)
                    .collect();
                augmented.iter().collect()
            } else {
                chunk.iter().map(|&i| &train_cubes[i]).collect()
            };
            if refs.is_empty() {
                continue;
            }
            let (x, labels) = assemble_batch(&refs, dim)?;
            let labelled = labels.iter().filter(|l| l.is_some()).count();
            if labelled == 0 || x.len() < 2 {
                continue;
            }
            model.net.zero_grad();
            let logits = match model.net.forward(&x, true) {
                Err(Error::TooFewSites(n)) => {
                    log::warn!("epoch {epoch}: skipped a batch with {n} sites at a coarse level");
                    continue;
                }
                r => r?,
            };
            let (loss, grad) = masked_cross_entropy(&logits.features, &labels)?;
            model.net.backward(&grad)?;
            if adam.step(&mut model.net.params_mut()) == StepOutcome::Skipped {
                log::warn!("epoch {epoch}: skipped a step with a non-finite gradient");
            }
            sum += loss * labelled as f64;
            count += labelled;
        }
        let train_loss = if count > 0 { sum / count as f64 } else { f64::NAN };
        let val_loss = evaluate_loss(&mut model.net, &val_cubes, config.batch_size)?;
        let seconds = start.elapsed().as_secs_f64();
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds,
        });
        log::info!("seed {} epoch {epoch}: train {train_loss:.4} val {val_loss:.4} ({seconds:.1}s)", config.seed);
        match stopper.update(epoch, val_loss) {
            StopDecision::Improved => best.load_state(&model.net),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                log.stopped_early = true;
                break;
            }
        }
    }
    model.net.load_state(&best);
    log.best_epoch = stopper.best_epoch;
    log.best_val_loss = stopper.best;
    log.skipped_steps = adam.skipped;
    Ok((model, log))
}
