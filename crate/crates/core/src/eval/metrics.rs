use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::labeling::Traversability;
use crate::map::VoxelKey;

pub type LabelMap = FxHashMap<VoxelKey, Traversability>;

/// Binary confusion counts with traversable as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn add(&mut self, predicted: Traversability, label: Traversability) {
        match (predicted.is_traversable(), label.is_traversable()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Counts under the opposite positive-class convention.
    pub fn swapped(&self) -> Self {
        Self::new(self.tn, self.fn_, self.tp, self.fp)
    }

    /// Matthews correlation coefficient; zero when any marginal is empty.
    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if denom == 0.0 {
            return 0.0;
        }
        ((tp * tn - fp * fn_) / denom.sqrt()).clamp(-1.0, 1.0)
    }

    /// Whether the MCC denominator vanishes.
    pub fn mcc_degenerate(&self) -> bool {
        self.tp + self.fp == 0 || self.tp + self.fn_ == 0 || self.tn + self.fp == 0 || self.tn + self.fn_ == 0
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / n as f64
        }
    }
}

pub fn mcc(c: &ConfusionCounts) -> f64 {
    c.mcc()
}

pub fn f1(c: &ConfusionCounts) -> f64 {
    c.f1()
}

/// Scores predictions over the keys present in both maps.
pub fn confusion(predictions: &LabelMap, labels: &LabelMap) -> Result<ConfusionCounts> {
    let mut c = ConfusionCounts::default();
    let (small, large, pred_first) = if predictions.len() <= labels.len() {
        (predictions, labels, true)
    } else {
        (labels, predictions, false)
    };
    for (k, a) in small {
        if let Some(b) = large.get(k) {
            if pred_first {
                c.add(*a, *b);
            } else {
                c.add(*b, *a);
            }
        }
    }
    if c.total() == 0 {
        return Err(Error::Empty("overlap between predictions and labels"));
    }
    Ok(c)
}

/// Thresholds per-voxel traversable probabilities: `p >= threshold` is
/// traversable.
pub fn threshold_probabilities(probs: &FxHashMap<VoxelKey, f64>, threshold: f64) -> LabelMap {
    probs
        .iter()
        .map(|(k, &p)| {
            let l = if p >= threshold {
                Traversability::Traversable
            } else {
                Traversability::NonTraversable
            };
            (*k, l)
        })
        .collect()
}

/// Mean and sample standard deviation of per-fold scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    /// False when fewer than two values made the deviation undefined.
    pub std_defined: bool,
}

pub fn kfold_report(values: &[f64]) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::Empty("fold metrics"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Ok(MetricSummary { mean, std: 0.0, std_defined: false });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MetricSummary { mean, std: var.sqrt(), std_defined: true })
}
