//! `transform`: classifier accuracies after element-wise feature
//! transforms of a two-class Gaussian problem.

use std::path::Path;

use acclim_core::classify::{evaluate, fit_classifier, ClassifierKind};
use acclim_core::error::Result;
use acclim_core::features::{apply_transform, Transform};
use acclim_core::limit::{confusion_grid, GridSpec, MixtureProblem};
use acclim_core::rng::{derive_seed, rng_from_seed};

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};

pub const DEFAULTS: &[(&str, &str)] = &[
    ("transforms", "identity,sine,signum,cosine"),
    ("distance", "1.0"),
    ("rho0", "0"),
    ("rho1", "0"),
    ("n_data", "10000"),
    ("train_fraction", "0.8"),
    ("grid_extent", "8"),
    ("grid_spacing", "0.02"),
    ("hidden_size", "100"),
    ("train_epochs", "50"),
    ("batch_size", "128"),
];

pub fn paper_scale(cfg: &mut RunConfig) {
    cfg.set("grid_spacing", "0.01");
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let problem = MixtureProblem::two_class_2d(
        cfg.get_f64("distance")?,
        cfg.get_f64("rho0")?,
        cfg.get_f64("rho1")?,
    )?;
    let extent = cfg.get_f64("grid_extent")?;
    let grid = GridSpec::cube(2, -extent, extent, cfg.get_f64("grid_spacing")?)?;
    let a_max = confusion_grid(&problem, &grid)?.accuracy();

    let mut rng = rng_from_seed(derive_seed(master, 0));
    let mut data = problem.sample_dataset(cfg.get_usize("n_data")?, &mut rng)?;
    data.split_random(cfg.get_f64("train_fraction")?, &mut rng)?;
    let train = data.train_set()?;
    let test = data.test_set()?;

    let transforms: Vec<Transform> = cfg
        .get_str("transforms")?
        .split(',')
        .map(Transform::parse)
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (ti, t) in transforms.iter().enumerate() {
        let train_t = apply_transform(*t, &train);
        let test_t = apply_transform(*t, &test);
        let pc = super::perceptron_config(cfg, derive_seed(master, 100 + ti as u64))?;
        let a_nb = evaluate(
            &fit_classifier(ClassifierKind::NaiveBayes, &train_t, &pc)?,
            &test_t,
        )?
        .accuracy;
        let a_cmvg = evaluate(
            &fit_classifier(ClassifierKind::Cmvg, &train_t, &pc)?,
            &test_t,
        )?
        .accuracy;
        let a_perc = evaluate(
            &fit_classifier(ClassifierKind::Perceptron, &train_t, &pc)?,
            &test_t,
        )?
        .accuracy;
        eprintln!(
            "transform: {} nb={a_nb:.4} cmvg={a_cmvg:.4} perceptron={a_perc:.4} (raw limit {a_max:.4})",
            t.name()
        );
        rows.push(format!(
            "{},{},{},{},{}",
            t.name(),
            fmt(a_max),
            fmt(a_nb),
            fmt(a_cmvg),
            fmt(a_perc)
        ));
    }
    write_csv(
        &out.join("transform_accuracy.csv"),
        "transform,a_max_raw,a_naive_bayes,a_cmvg,a_perceptron",
        &rows,
        &cfg.hash(),
    )?;
    Ok(())
}
