//! `gdv`: class-separability score of a dataset CSV.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use acclim_core::error::{Error, Result};
use acclim_core::metrics::gdv_seeded;
use acclim_core::LabeledDataset;

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};

pub const DEFAULTS: &[(&str, &str)] = &[("input", ""), ("subsample", "10000")];

pub fn paper_scale(_cfg: &mut RunConfig) {}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let input = cfg.get_str("input")?;
    if input.is_empty() {
        return Err(Error::Config(
            "gdv needs --input <dataset.csv> (or --set input=...)".into(),
        ));
    }
    let reader = BufReader::new(File::open(input)?);
    let data = LabeledDataset::read_csv(reader)?;
    let value = gdv_seeded(
        &data.features.view(),
        &data.labels,
        cfg.get_usize("subsample")?,
        master,
    )?;
    write_csv(
        &out.join("gdv.csv"),
        "n,dims,classes,gdv",
        &[format!(
            "{},{},{},{}",
            data.len(),
            data.dim(),
            data.n_classes(),
            fmt(value)
        )],
        &cfg.hash(),
    )?;
    println!("{value}");
    Ok(())
}
