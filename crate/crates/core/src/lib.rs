//! Path signatures for irregularly sampled, partially observed time series.
//!
//! The crate covers the whole pipeline: long-format ingestion and
//! subsampling ([`timeseries`]), path construction from missing data
//! ([`imputation`], [`gp`]), truncated signatures with exact gradients
//! ([`signature`]), a shallow signature classifier trained with Adam
//! ([`model`]), and the benchmark harness with its metrics ([`harness`],
//! [`metrics`]).

pub mod error;
pub mod gp;
pub mod harness;
pub mod imputation;
pub mod metrics;
pub mod model;
mod linalg;
pub mod path;
pub mod seed;
pub mod signature;
pub mod timeseries;

pub use error::{Error, Result};
pub use gp::{GpOptions, GpPosterior, RbfHyperparams};
pub use harness::{emit_report, run_experiment, ExperimentConfig, MetricsReport, SynthSpec};
pub use imputation::ImputationKind;
pub use metrics::ClassificationMetrics;
pub use path::{time_augment, PiecewiseLinearPath};
pub use signature::{
    chen_mul, levy_area, oracle_signature, sig_segment, signature, signature_backward,
    TruncatedSignature,
};
pub use timeseries::{IrregularTimeSeries, LabeledDataset, Split, StandardizationStats};
