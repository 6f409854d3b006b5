use std::io::Write;

use rustc_hash::FxHashMap;

use super::density::ColumnIndex;
use super::metrics::{ConfusionCounts, LabelMap, MetricSummary};
use crate::error::Result;
use crate::map::{RayRecord, VoxelKey, VoxelMap};

/// Scores of the voxels whose column density falls in `[lo, hi)` (the last
/// bin is closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub counts: ConfusionCounts,
    pub mcc: f64,
    /// The MCC denominator vanished and `mcc` is the zero convention.
    pub degenerate: bool,
}

/// MCC per equal-width vegetation-density bin. Every scored voxel takes the
/// density of its column, wherever it sits in the column; voxels in columns
/// missing from `index` are skipped.
pub fn mcc_by_density(
    predictions: &LabelMap,
    labels: &LabelMap,
    index: &ColumnIndex,
    bins: usize,
) -> Vec<DensityBin> {
    let bins = bins.max(1);
    let densities = index.densities();
    let mut counts = vec![ConfusionCounts::default(); bins];
    for (k, pred) in predictions {
        let (Some(label), Some(rho)) = (labels.get(k), densities.get(&(k.i, k.j))) else {
            continue;
        };
        let b = ((rho * bins as f64).floor() as usize).min(bins - 1);
        counts[b].add(*pred, *label);
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| DensityBin {
            lo: b as f64 / bins as f64,
            hi: (b + 1) as f64 / bins as f64,
            counts: c,
            mcc: c.mcc(),
            degenerate: c.mcc_degenerate(),
        })
        .collect()
}

/// Anything that maps a voxel map to per-voxel traversable probabilities.
pub trait VoxelClassifier {
    fn classify(&self, map: &VoxelMap) -> FxHashMap<VoxelKey, f64>;
}

impl<F: Fn(&VoxelMap) -> FxHashMap<VoxelKey, f64>> VoxelClassifier for F {
    fn classify(&self, map: &VoxelMap) -> FxHashMap<VoxelKey, f64> {
        self(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalPoint {
    pub t: f64,
    pub coverage: f64,
    /// `(mcc, f1)`; absent when nothing labelled has been observed yet.
    pub scores: Option<(f64, f64)>,
}

pub const DEFAULT_SNAPSHOT_INTERVAL: f64 = 5.0;

/// Replays rays into a fresh map and scores the classifier at every
/// `interval` seconds plus once after the final ray. Scores use labelled
/// keys active in the snapshot; probabilities `>= 0.5` are traversable.
pub fn temporal_eval(
    rays: &[RayRecord],
    resolution: f64,
    classifier: &dyn VoxelClassifier,
    labels: &LabelMap,
    interval: f64,
) -> Vec<TemporalPoint> {
    let mut order: Vec<usize> = (0..rays.len()).collect();
    order.sort_by(|&a, &b| rays[a].t.total_cmp(&rays[b].t));
    let mut map = VoxelMap::new(resolution);
    let mut out = Vec::new();
    let t_end = order.last().map(|&i| rays[i].t).unwrap_or(0.0);
    let mut next = interval;
    let mut cursor = 0;
    loop {
        let cutoff = next.min(t_end);
        while cursor < order.len() && rays[order[cursor]].t <= cutoff {
            // malformed rays are dropped exactly as in offline fusion
            let _ = map.integrate_ray(&rays[order[cursor]]);
            cursor += 1;
        }
        let done = cursor == order.len();
        let t = if done { t_end } else { next };
        out.push(score_snapshot(&map, t, classifier, labels));
        if done {
            break;
        }
        next += interval;
    }
    out
}

fn score_snapshot(map: &VoxelMap, t: f64, classifier: &dyn VoxelClassifier, labels: &LabelMap) -> TemporalPoint {
    let observed = labels
        .keys()
        .filter(|k| map.get(k).is_some_and(|s| s.is_active()))
        .count();
    let coverage = if labels.is_empty() { 0.0 } else { observed as f64 / labels.len() as f64 };
    if observed == 0 {
        return TemporalPoint { t, coverage, scores: None };
    }
    let probs = classifier.classify(map);
    let preds = super::metrics::threshold_probabilities(&probs, 0.5);
    let mut c = ConfusionCounts::default();
    for (k, l) in labels {
        if map.get(k).is_some_and(|s| s.is_active()) {
            if let Some(p) = preds.get(k) {
                c.add(*p, *l);
            }
        }
    }
    let scores = (c.total() > 0).then(|| (c.mcc(), c.f1()));
    TemporalPoint { t, coverage, scores }
}

pub fn write_temporal_csv<W: Write>(points: &[TemporalPoint], mut out: W) -> Result<()> {
    writeln!(out, "t,mcc,f1,coverage")?;
    for p in points {
        match p.scores {
            Some((m, f)) => writeln!(out, "{},{m},{f},{}", p.t, p.coverage)?,
            None => writeln!(out, "{},,,{}", p.t, p.coverage)?,
        }
    }
    Ok(())
}

pub fn write_density_csv<W: Write>(bins: &[DensityBin], mut out: W) -> Result<()> {
    writeln!(out, "bin_lo,bin_hi,mcc,count")?;
    for b in bins {
        writeln!(out, "{},{},{},{}", b.lo, b.hi, b.mcc, b.counts.total())?;
    }
    Ok(())
}

/// Per-fold rows followed by mean and standard deviation rows.
pub fn write_kfold_csv<W: Write>(
    folds: &[(f64, f64)],
    mcc: &MetricSummary,
    f1: &MetricSummary,
    mut out: W,
) -> Result<()> {
    writeln!(out, "fold,mcc,f1")?;
    for (i, (m, f)) in folds.iter().enumerate() {
        writeln!(out, "{i},{m},{f}")?;
    }
    writeln!(out, "mean,{},{}", mcc.mean, f1.mean)?;
    writeln!(out, "std,{},{}", mcc.std, f1.std)?;
    Ok(())
}
