//! Subcommand implementations.

pub mod embed;
pub mod features;
pub mod gdv;
pub mod generate;
pub mod limit;
pub mod sweep;
pub mod transform;

use acclim_core::classify::PerceptronConfig;
use acclim_core::error::Result;
use acclim_core::neuralnet::TrainConfig;

use crate::config::RunConfig;

/// Perceptron configuration from the shared `hidden_size`, `train_epochs`,
/// `batch_size` keys.
pub(crate) fn perceptron_config(cfg: &RunConfig, seed: u64) -> Result<PerceptronConfig> {
    Ok(PerceptronConfig {
        hidden_size: cfg.get_usize("hidden_size")?,
        train: TrainConfig {
            batch_size: cfg.get_usize("batch_size")?,
            max_epochs: cfg.get_usize("train_epochs")?,
            seed,
            ..TrainConfig::default()
        },
    })
}
