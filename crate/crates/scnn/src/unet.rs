use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conv::SparseConv;
use crate::error::{Error, Result};
use crate::kmap::{build_kernel_map, ConvKind, KernelMap, KERNEL_VOLUME};
use crate::norm::{relu_backward, relu_in_place, BatchNorm};
use crate::param::{Buffer, Param};
use crate::real::Real;
use crate::tensor::{concat_channels, downsample_coords, split_channels, Coord, SparseTensor};

/// Encoder widths per level, mirrored by the decoder.
pub const DEFAULT_CHANNELS: [usize; 5] = [16, 32, 64, 96, 128];
/// Logits per site.
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UNetConfig {
    pub in_channels: usize,
    pub channels: Vec<usize>,
}

impl UNetConfig {
    pub fn new(in_channels: usize, channels: Vec<usize>) -> Result<Self> {
        if in_channels == 0 || channels.is_empty() || channels.contains(&0) {
            return Err(Error::Config(format!(
                "invalid network shape: {in_channels} inputs, channels {channels:?}"
            )));
        }
        Ok(Self { in_channels, channels })
    }

    pub fn levels(&self) -> usize {
        self.channels.len()
    }
}

/// Coordinates and kernel maps for every level of one input.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub coords: Vec<Vec<Coord>>,
    pub same: Vec<Arc<KernelMap>>,
    /// `down[l]` maps level `l` to level `l + 1`.
    pub down: Vec<Arc<KernelMap>>,
    /// `up[l]` maps level `l + 1` back onto the cached coordinates of level `l`.
    pub up: Vec<Arc<KernelMap>>,
}

impl Hierarchy {
    pub fn build(coords: &[Coord], levels: usize) -> Result<Self> {
        let mut h = Hierarchy {
            coords: vec![coords.to_vec()],
            same: Vec::with_capacity(levels),
            down: Vec::with_capacity(levels.saturating_sub(1)),
            up: Vec::with_capacity(levels.saturating_sub(1)),
        };
        for l in 0..levels {
            let s = 1 << l;
            let c = &h.coords[l];
            h.same.push(Arc::new(build_kernel_map(c, s, c, s, ConvKind::SameSite)?));
            if l + 1 < levels {
                let coarse = downsample_coords(c, s);
                let down = build_kernel_map(c, s, &coarse, 2 * s, ConvKind::Strided)?;
                h.up.push(Arc::new(down.transpose()));
                h.down.push(Arc::new(down));
                h.coords.push(coarse);
            }
        }
        Ok(h)
    }
}

/// Convolution followed by batch normalization and ReLU.
#[derive(Debug, Clone)]
pub struct ConvBlock<T> {
    pub conv: SparseConv<T>,
    pub bn: BatchNorm<T>,
    output: Option<Vec<T>>,
}

impl<T: Real> ConvBlock<T> {
    pub fn new(name: &str, c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            conv: SparseConv::new(&format!("{name}.conv"), c_in, c_out, KERNEL_VOLUME, rng),
            bn: BatchNorm::new(&format!("{name}.bn"), c_out),
            output: None,
        }
    }

    pub fn forward(&mut self, x: &[T], kmap: &Arc<KernelMap>, train: bool) -> Result<Vec<T>> {
        let z = self.conv.forward(x, kmap, train)?;
        let mut y = self.bn.forward(&z, train)?;
        relu_in_place(&mut y);
        self.output = train.then(|| y.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &[T]) -> Result<Vec<T>> {
        let y = self
            .output
            .take()
            .ok_or_else(|| Error::Shape("block backward without a training forward pass".into()))?;
        let mut g = dy.to_vec();
        relu_backward(&y, &mut g);
        let g = self.bn.backward(&g)?;
        self.conv.backward(&g)
    }
}

/// Sparse U-Net: stem, strided encoder stages, transposed decoder stages
/// with skip concatenation, and a 1×1×1 head.
#[derive(Debug, Clone)]
pub struct UNet<T> {
    pub config: UNetConfig,
    pub stem: ConvBlock<T>,
    pub down: Vec<ConvBlock<T>>,
    pub enc: Vec<ConvBlock<T>>,
    pub up: Vec<ConvBlock<T>>,
    pub dec: Vec<ConvBlock<T>>,
    pub head: SparseConv<T>,
    trained_levels: Option<usize>,
}

impl<T: Real> UNet<T> {
    pub fn new(config: UNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config.channels.clone();
        let l = c.len();
        let stem = ConvBlock::new("stem", config.in_channels, c[0], &mut rng);
        let mut down = Vec::new();
        let mut enc = Vec::new();
        for i in 1..l {
            down.push(ConvBlock::new(&format!("down{i}"), c[i - 1], c[i], &mut rng));
            enc.push(ConvBlock::new(&format!("enc{i}"), c[i], c[i], &mut rng));
        }
        let mut up = Vec::new();
        let mut dec = Vec::new();
        for i in 0..l - 1 {
            up.push(ConvBlock::new(&format!("up{i}"), c[i + 1], c[i], &mut rng));
            dec.push(ConvBlock::new(&format!("dec{i}"), 2 * c[i], c[i], &mut rng));
        }
        let head = SparseConv::new("head", c[0], NUM_CLASSES, 1, &mut rng);
        Self {
            config,
            stem,
            down,
            enc,
            up,
            dec,
            head,
            trained_levels: None,
        }
    }

    /// Logits at exactly the input coordinates. Training mode keeps what
    /// [`Self::backward`] needs.
    pub fn forward(&mut self, input: &SparseTensor<T>, train: bool) -> Result<SparseTensor<T>> {
        if input.stride != 1 {
            return Err(Error::Stride(format!("network input at stride {}", input.stride)));
        }
        if input.channels != self.config.in_channels {
            return Err(Error::Shape(format!(
                "network expects {} input channels, got {}",
                self.config.in_channels, input.channels
            )));
        }
        self.trained_levels = None;
        if input.is_empty() {
            return Ok(SparseTensor {
                coords: Vec::new(),
                stride: 1,
                channels: NUM_CLASSES,
                features: Vec::new(),
            });
        }
        let levels = self.config.levels();
        let h = Hierarchy::build(&input.coords, levels)?;
        let mut skips = Vec::with_capacity(levels);
        skips.push(self.stem.forward(&input.features, &h.same[0], train)?);
        for l in 1..levels {
            let x = self.down[l - 1].forward(&skips[l - 1], &h.down[l - 1], train)?;
            let x = self.enc[l - 1].forward(&x, &h.same[l], train)?;
            skips.push(x);
        }
        let mut x = skips.pop().expect("at least one level");
        for l in (0..levels - 1).rev() {
            let u = self.up[l].forward(&x, &h.up[l], train)?;
            let c = self.config.channels[l];
            let cat = concat_channels(&u, c, &skips[l], c);
            x = self.dec[l].forward(&cat, &h.same[l], train)?;
        }
        let logits = self.head.forward(&x, &h.same[0], train)?;
        if train {
            self.trained_levels = Some(levels);
        }
        Ok(SparseTensor {
            coords: input.coords.clone(),
            stride: 1,
            channels: NUM_CLASSES,
            features: logits,
        })
    }

    /// Accumulates parameter gradients from logit gradients and returns the
    /// gradient with respect to the input features.
    pub fn backward(&mut self, grad_logits: &[T]) -> Result<Vec<T>> {
        let levels = self
            .trained_levels
            .take()
            .ok_or_else(|| Error::Shape("network backward without a training forward pass".into()))?;
        let mut g = self.head.backward(grad_logits)?;
        let mut skip_grads: Vec<Vec<T>> = Vec::with_capacity(levels);
        for l in 0..levels - 1 {
            let c = self.config.channels[l];
            let gcat = self.dec[l].backward(&g)?;
            let (gu, gs) = split_channels(&gcat, c, c);
            skip_grads.push(gs);
            g = self.up[l].backward(&gu)?;
        }
        for l in (1..levels).rev() {
            g = self.enc[l - 1].backward(&g)?;
            g = self.down[l - 1].backward(&g)?;
            for (a, b) in g.iter_mut().zip(&skip_grads[l - 1]) {
                *a += *b;
            }
        }
        self.stem.backward(&g)
    }

    fn blocks(&self) -> impl Iterator<Item = &ConvBlock<T>> {
        std::iter::once(&self.stem)
            .chain(&self.down)
            .chain(&self.enc)
            .chain(&self.up)
            .chain(&self.dec)
    }

    fn blocks_mut(&mut self) -> (impl Iterator<Item = &mut ConvBlock<T>>, &mut SparseConv<T>) {
        let blocks = std::iter::once(&mut self.stem)
            .chain(&mut self.down)
            .chain(&mut self.enc)
            .chain(&mut self.up)
            .chain(&mut self.dec);
        (blocks, &mut self.head)
    }

    /// Trainable tensors in a fixed order.
    pub fn params(&self) -> Vec<&Param<T>> {
        let mut out = Vec::new();
        for b in self.blocks() {
            out.extend(b.conv.params());
            out.extend(b.bn.params());
        }
        out.extend(self.head.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let (blocks, head) = self.blocks_mut();
        let mut out = Vec::new();
        for b in blocks {
            out.extend(b.conv.params_mut());
            out.extend(b.bn.params_mut());
        }
        out.extend(head.params_mut());
        out
    }

    pub fn buffers(&self) -> Vec<&Buffer<T>> {
        self.blocks().flat_map(|b| b.bn.buffers()).collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Buffer<T>> {
        self.blocks_mut().0.flat_map(|b| b.bn.buffers_mut()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Copies every parameter and buffer value from `other`.
    pub fn load_state(&mut self, other: &UNet<T>) {
        for (d, s) in self.params_mut().into_iter().zip(other.params()) {
            d.value.copy_from_slice(&s.value);
        }
        for (d, s) in self.buffers_mut().into_iter().zip(other.buffers()) {
            d.value.copy_from_slice(&s.value);
        }
    }
}
