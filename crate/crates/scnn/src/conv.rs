use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kmap::{KernelMap, CENTER, KERNEL_VOLUME};
use crate::param::Param;
use crate::real::{gemm, Real};

/// Sparse convolution with weights laid out `[offset][c_in][c_out]`.
///
/// A 1×1×1 convolution stores a single offset and reads only the centre list
/// of its kernel map.
#[derive(Debug, Clone)]
pub struct SparseConv<T> {
    pub c_in: usize,
    pub c_out: usize,
    pub volume: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    saved: Option<(Vec<T>, Arc<KernelMap>)>,
}

impl<T: Real> SparseConv<T> {
    pub fn new<R: Rng + ?Sized>(name: &str, c_in: usize, c_out: usize, volume: usize, rng: &mut R) -> Self {
        assert!(volume == 1 || volume == KERNEL_VOLUME);
        Self {
            c_in,
            c_out,
            volume,
            weight: Param::kaiming(format!("{name}.weight"), vec![volume, c_in, c_out], volume * c_in, rng),
            bias: Param::filled(format!("{name}.bias"), vec![c_out], T::zero()),
            saved: None,
        }
    }

    fn kernel(&self, w: usize) -> &[T] {
        let n = self.c_in * self.c_out;
        &self.weight.value[w * n..(w + 1) * n]
    }

    /// Output rows start at the bias and accumulate `in[p] · W[δ]` over pairs.
    /// In training mode the input is kept for [`Self::backward`].
    pub fn forward(&mut self, input: &[T], kmap: &Arc<KernelMap>, train: bool) -> Result<Vec<T>> {
        let out = self.apply(input, kmap)?;
        self.saved = train.then(|| (input.to_vec(), Arc::clone(kmap)));
        Ok(out)
    }

    /// Stateless forward pass.
    pub fn apply(&self, input: &[T], kmap: &KernelMap) -> Result<Vec<T>> {
        if input.len() != kmap.n_in * self.c_in {
            return Err(Error::Shape(format!(
                "convolution input has {} values, expected {} sites × {} channels",
                input.len(),
                kmap.n_in,
                self.c_in
            )));
        }
        let (ci, co) = (self.c_in, self.c_out);
        let mut out = Vec::with_capacity(kmap.n_out * co);
        for _ in 0..kmap.n_out {
            out.extend_from_slice(&self.bias.value);
        }
        let mut a = Vec::new();
        let mut c = Vec::new();
        for (w, list) in lists(self.volume, kmap) {
            if list.is_empty() {
                continue;
            }
            let m = list.len();
            if kmap.center_identity && std::ptr::eq(list, kmap.pairs[CENTER].as_slice()) {
                gemm(m, ci, co, input, false, self.kernel(w), false, T::one(), &mut out);
                continue;
            }
            gather(input, ci, list.iter().map(|p| p.0), &mut a);
            c.clear();
            c.resize(m * co, T::zero());
            gemm(m, ci, co, &a, false, self.kernel(w), false, T::zero(), &mut c);
            scatter_add(&c, co, list.iter().map(|p| p.1), &mut out);
        }
        Ok(out)
    }

    /// Accumulates weight and bias gradients and returns the input gradient.
    pub fn backward(&mut self, grad_out: &[T]) -> Result<Vec<T>> {
        let (input, kmap) = self
            .saved
            .take()
            .ok_or_else(|| Error::Shape("convolution backward without a saved forward pass".into()))?;
        if grad_out.len() != kmap.n_out * self.c_out {
            return Err(Error::Shape(format!(
                "output gradient has {} values, expected {} × {}",
                grad_out.len(),
                kmap.n_out,
                self.c_out
            )));
        }
        let (ci, co) = (self.c_in, self.c_out);
        for r in 0..kmap.n_out {
            for (b, g) in self.bias.grad.iter_mut().zip(&grad_out[r * co..(r + 1) * co]) {
                *b += *g;
            }
        }
        let mut grad_in = vec![T::zero(); kmap.n_in * ci];
        let (mut a, mut g, mut gi) = (Vec::new(), Vec::new(), Vec::new());
        let n = ci * co;
        for (w, list) in lists(self.volume, &kmap) {
            if list.is_empty() {
                continue;
            }
            let m = list.len();
            let kernel = self.weight.value[w * n..(w + 1) * n].to_vec();
            let wgrad = &mut self.weight.grad[w * n..(w + 1) * n];
            if kmap.center_identity && std::ptr::eq(list, kmap.pairs[CENTER].as_slice()) {
                gemm(ci, m, co, &input, true, grad_out, false, T::one(), wgrad);
                gemm(m, co, ci, grad_out, false, &kernel, true, T::one(), &mut grad_in);
                continue;
            }
            gather(&input, ci, list.iter().map(|p| p.0), &mut a);
            gather(grad_out, co, list.iter().map(|p| p.1), &mut g);
            gemm(ci, m, co, &a, true, &g, false, T::one(), wgrad);
            gi.clear();
            gi.resize(m * ci, T::zero());
            gemm(m, co, ci, &g, false, &kernel, true, T::zero(), &mut gi);
            scatter_add(&gi, ci, list.iter().map(|p| p.0), &mut grad_in);
        }
        Ok(grad_in)
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param<T>; 2] {
        [&self.weight, &self.bias]
    }
}

/// Weight slot and pair list for each offset the convolution reads.
fn lists(volume: usize, kmap: &KernelMap) -> impl Iterator<Item = (usize, &[(u32, u32)])> {
    let all = if volume == 1 { CENTER..CENTER + 1 } else { 0..KERNEL_VOLUME };
    all.map(move |d| (if volume == 1 { 0 } else { d }, kmap.pairs[d].as_slice()))
}

fn gather<T: Real>(src: &[T], width: usize, rows: impl Iterator<Item = u32>, dst: &mut Vec<T>) {
    dst.clear();
    for r in rows {
        let r = r as usize;
        dst.extend_from_slice(&src[r * width..(r + 1) * width]);
    }
}

fn scatter_add<T: Real>(src: &[T], width: usize, rows: impl Iterator<Item = u32>, dst: &mut [T]) {
    for (i, r) in rows.enumerate() {
        let r = r as usize;
        for (d, s) in dst[r * width..(r + 1) * width].iter_mut().zip(&src[i * width..(i + 1) * width]) {
            *d += *s;
        }
    }
}
