//! Sparse 3D convolutional U-Net ensembles over voxel feature maps.
//!
//! Convolutions run only at active sites: each layer enumerates the input
//! rows feeding every output row per kernel offset, then applies the
//! offset's weight matrix with a gather, a GEMM and a scatter. Networks are
//! trained per ensemble member and vote per voxel at inference.

pub mod conv;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod kmap;
pub mod loss;
pub mod model;
pub mod norm;
pub mod optim;
pub mod param;
pub mod real;
pub mod tensor;
pub mod train;
pub mod unet;

pub use conv::SparseConv;
pub use ensemble::{ensemble_predict, train_ensemble, vote_fraction, EnsembleConfig, DEFAULT_ENSEMBLE_SIZE};
pub use error::{Error, Result};
pub use io::{load_model, read_model, save_model, write_model};
pub use kmap::{build_kernel_map, ConvKind, KernelMap};
pub use loss::{decide, masked_cross_entropy};
pub use model::{InputTransform, Model};
pub use norm::BatchNorm;
pub use optim::{Adam, AdamConfig, StepOutcome};
pub use param::{Buffer, Param};
pub use real::Real;
pub use tensor::{Coord, SparseTensor};
pub use train::{assemble_batch, train, EarlyStopping, PreparedCube, StopDecision, TrainConfig, TrainLog};
pub use unet::{Hierarchy, UNet, UNetConfig, DEFAULT_CHANNELS, NUM_CLASSES};
