//! Numerical laboratory for classification at the statistical accuracy limit.
//!
//! The crate generates statistically controlled synthetic classification
//! data, computes the Bayes-optimal accuracy implied by class overlap,
//! trains three classifier families against that limit, and quantifies how
//! well classes cluster in raw data and in network-layer embeddings.

pub mod classify;
pub mod dataset;
pub mod dsc;
pub mod embed;
pub mod error;
pub mod features;
pub mod limit;
pub mod linalg;
pub mod metrics;
pub mod mnist;
pub mod neuralnet;
pub mod rng;

pub use dataset::{LabeledDataset, Split};
pub use error::{Error, Result};
