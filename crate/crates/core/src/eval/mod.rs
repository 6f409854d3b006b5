//! Evaluation protocols: confusion-based metrics, vegetation density, the
//! geometric baseline, feature ablations, 2D compression and temporal runs.

mod compress;
mod ctc;
mod density;
mod features;
mod metrics;
mod protocols;

pub use compress::{compress_2d, Grid2d};
pub use ctc::{ctc_classify, ctc_classify_covariance, CtcConfig, SurfaceShape};
pub use density::{vegetation_density, ColumnIndex};
pub use features::{derived_features, AblationFeatures, DerivedFeatures, FeatureSet};
pub use metrics::{
    confusion, f1, kfold_report, mcc, threshold_probabilities, ConfusionCounts, LabelMap,
    MetricSummary,
};
pub use protocols::{
    mcc_by_density, temporal_eval, write_density_csv, write_kfold_csv, write_temporal_csv,
    DensityBin, TemporalPoint, VoxelClassifier, DEFAULT_SNAPSHOT_INTERVAL,
};
