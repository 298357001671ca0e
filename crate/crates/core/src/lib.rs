//! Transfer-based multifidelity regression for manufacturing process data.
//!
//! A weighted epsilon-SVR with a Gaussian RBF kernel is trained on plentiful
//! data from a cheap analytical process model (the *source*) and adapted to
//! scarce ground-truth measurements (the *target*) with TrAdaBoost.R2. The
//! [`protocol`] module measures how many target samples transfer learning
//! needs to match learning on target data alone.
//!
//! The modules, bottom-up:
//!
//! - [`dataset`]: samples, CSV I/O, scaling, splits, sub-grids, RMSE
//! - [`sourcegen`]: the `W = F A / (S h)` source model and a synthetic target
//! - [`svr`]: weighted epsilon-SVR, SMO solver, grid-search cross-validation
//! - [`transfer`]: TrAdaBoost.R2 and weighted-median prediction
//! - [`protocol`]: learning curves, plateau detection, transfer sweeps, reports
//! - [`config`]: JSON run configuration shared by the CLI and examples
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod config;
pub mod dataset;
pub mod model;
pub mod protocol;
pub mod rng;
pub mod sourcegen;
pub mod svr;
pub mod transfer;

pub use dataset::{Dataset, Origin, Sample, Scaler};
pub use protocol::{BenchmarkConfig, BenchmarkReport};
pub use sourcegen::{GridSpec, SourceModelConfig, SyntheticTargetConfig};
pub use svr::{SvrModel, SvrParams};
pub use transfer::{TransferConfig, TransferEnsemble};
