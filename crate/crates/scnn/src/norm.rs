use crate::error::{Error, Result};
use crate::param::{Buffer, Param};
use crate::real::Real;

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// Per-channel batch normalization over active sites.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub channels: usize,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Buffer<T>,
    pub running_var: Buffer<T>,
    saved: Option<Saved<T>>,
}

#[derive(Debug, Clone)]
struct Saved<T> {
    x_hat: Vec<T>,
    inv_std: Vec<f64>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            channels,
            gamma: Param::filled(format!("{name}.gamma"), vec![channels], T::one()),
            beta: Param::filled(format!("{name}.beta"), vec![channels], T::zero()),
            running_mean: Buffer {
                name: format!("{name}.running_mean"),
                value: vec![T::zero(); channels],
            },
            running_var: Buffer {
                name: format!("{name}.running_var"),
                value: vec![T::one(); channels],
            },
            saved: None,
        }
    }

    /// Training mode normalizes with batch statistics and folds them into the
    /// running estimates; evaluation mode uses the running estimates only.
    pub fn forward(&mut self, x: &[T], train: bool) -> Result<Vec<T>> {
        let c = self.channels;
        if x.len() % c != 0 {
            return Err(Error::Shape(format!("{} values for {c} channels", x.len())));
        }
        let n = x.len() / c;
        if !train {
            self.saved = None;
            let mut y = x.to_vec();
            for ch in 0..c {
                let inv = 1.0 / (self.running_var.value[ch].f64() + BN_EPS).sqrt();
                let (m, g, b) = (
                    self.running_mean.value[ch].f64(),
                    self.gamma.value[ch].f64(),
                    self.beta.value[ch].f64(),
                );
                for r in 0..n {
                    let v = &mut y[r * c + ch];
                    *v = T::of(g * (v.f64() - m) * inv + b);
                }
            }
            return Ok(y);
        }
        if n < 2 {
            return Err(Error::TooFewSites(n));
        }
        let mut mean = vec![0f64; c];
        for r in 0..n {
            for ch in 0..c {
                mean[ch] += x[r * c + ch].f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0f64; c];
        for r in 0..n {
            for ch in 0..c {
                let d = x[r * c + ch].f64() - mean[ch];
                var[ch] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut x_hat = vec![T::zero(); x.len()];
        let mut y = vec![T::zero(); x.len()];
        for r in 0..n {
            for ch in 0..c {
                let i = r * c + ch;
                let h = (x[i].f64() - mean[ch]) * inv_std[ch];
                x_hat[i] = T::of(h);
                y[i] = T::of(self.gamma.value[ch].f64() * h + self.beta.value[ch].f64());
            }
        }
        let unbias = n as f64 / (n as f64 - 1.0);
        for ch in 0..c {
            let rm = &mut self.running_mean.value[ch];
            *rm = T::of(BN_MOMENTUM * rm.f64() + (1.0 - BN_MOMENTUM) * mean[ch]);
            let rv = &mut self.running_var.value[ch];
            *rv = T::of(BN_MOMENTUM * rv.f64() + (1.0 - BN_MOMENTUM) * var[ch] * unbias);
        }
        self.saved = Some(Saved { x_hat, inv_std });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &[T]) -> Result<Vec<T>> {
        let Saved { x_hat, inv_std } = self
            .saved
            .take()
            .ok_or_else(|| Error::Shape("batch norm backward without a training forward pass".into()))?;
        let c = self.channels;
        if dy.len() != x_hat.len() {
            return Err(Error::Shape("batch norm gradient size".into()));
        }
        let n = dy.len() / c;
        let mut sum_dy = vec![0f64; c];
        let mut sum_dy_xh = vec![0f64; c];
        for r in 0..n {
            for ch in 0..c {
                let i = r * c + ch;
                sum_dy[ch] += dy[i].f64();
                sum_dy_xh[ch] += dy[i].f64() * x_hat[i].f64();
            }
        }
        for ch in 0..c {
            self.beta.grad[ch] += T::of(sum_dy[ch]);
            self.gamma.grad[ch] += T::of(sum_dy_xh[ch]);
        }
        let nf = n as f64;
        let mut dx = vec![T::zero(); dy.len()];
        for r in 0..n {
            for ch in 0..c {
                let i = r * c + ch;
                let k = self.gamma.value[ch].f64() * inv_std[ch] / nf;
                dx[i] = T::of(k * (nf * dy[i].f64() - sum_dy[ch] - x_hat[i].f64() * sum_dy_xh[ch]));
            }
        }
        Ok(dx)
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> [&Param<T>; 2] {
        [&self.gamma, &self.beta]
    }

    pub fn buffers(&self) -> [&Buffer<T>; 2] {
        [&self.running_mean, &self.running_var]
    }

    pub fn buffers_mut(&mut self) -> [&mut Buffer<T>; 2] {
        [&mut self.running_mean, &mut self.running_var]
    }
}

pub fn relu_in_place<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes gradient entries whose forward output was clipped.
pub fn relu_backward<T: Real>(output: &[T], grad: &mut [T]) {
    for (g, y) in grad.iter_mut().zip(output) {
        if *y <= T::zero() {
            *g = T::zero();
        }
    }
}
