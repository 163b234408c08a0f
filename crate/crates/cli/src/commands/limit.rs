//! `limit`: accuracy limit versus class distance, with the three
//! classifiers (and naive Bayes behind random dimensionality expansion)
//! evaluated against it.

use std::path::Path;

use acclim_core::classify::{
    evaluate, fit_classifier, rde_fit_predict, ClassifierKind,
};
use acclim_core::error::{Error, Result};
use acclim_core::limit::{confusion_grid, confusion_mc, GridSpec, MixtureProblem};
use acclim_core::rng::{derive_seed, rng_from_seed};

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};
use crate::plot::{line_chart, Series};

pub const DEFAULTS: &[(&str, &str)] = &[
    ("problem", "correlated"),
    ("rho0", "0.75"),
    ("rho1", "-0.75"),
    ("d_values", "0:5:0.5"),
    ("method", "grid"),
    ("grid_extent", "8"),
    ("grid_spacing", "0.02"),
    ("mc_samples", "100000"),
    ("n_data", "10000"),
    ("train_fraction", "0.8"),
    ("rde_dim", "20"),
    ("hidden_size", "100"),
    ("train_epochs", "50"),
    ("batch_size", "128"),
    ("plot", "true"),
];

pub fn paper_scale(cfg: &mut RunConfig) {
    cfg.set("grid_spacing", "0.01");
    cfg.set("mc_samples", "1000000");
}

pub(crate) fn build_problem(cfg: &RunConfig, distance: f64) -> Result<MixtureProblem> {
    match cfg.get_str("problem")? {
        "spherical" => MixtureProblem::spherical_pair(distance),
        "correlated" => {
            MixtureProblem::two_class_2d(distance, cfg.get_f64("rho0")?, cfg.get_f64("rho1")?)
        }
        other => Err(Error::Config(format!(
            "problem must be `spherical` or `correlated`, got `{other}`"
        ))),
    }
}

pub(crate) fn accuracy_limit(cfg: &RunConfig, problem: &MixtureProblem, seed: u64) -> Result<f64> {
    match cfg.get_str("method")? {
        "grid" => {
            let extent = cfg.get_f64("grid_extent")?;
            let grid = GridSpec::cube(problem.dim(), -extent, extent, cfg.get_f64("grid_spacing")?)?;
            Ok(confusion_grid(problem, &grid)?.accuracy())
        }
        "mc" => {
            let mut rng = rng_from_seed(seed);
            Ok(confusion_mc(problem, cfg.get_usize("mc_samples")?, &mut rng)?
                .matrix
                .accuracy())
        }
        other => Err(Error::Config(format!(
            "method must be `grid` or `mc`, got `{other}`"
        ))),
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let d_values = cfg.get_f64_list("d_values")?;
    let n_data = cfg.get_usize("n_data")?;
    let train_fraction = cfg.get_f64("train_fraction")?;
    let rde_dim = cfg.get_usize("rde_dim")?;

    let mut rows = Vec::new();
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = [
        "a_max",
        "a_perceptron",
        "a_nb",
        "a_nb_rde",
        "a_cmvg",
    ]
    .iter()
    .map(|name| (name.to_string(), Vec::new()))
    .collect();

    for (i, &d) in d_values.iter().enumerate() {
        let problem = build_problem(cfg, d)?;
        let a_max = accuracy_limit(cfg, &problem, derive_seed(master, 1000 + i as u64))?;

        let mut rng = rng_from_seed(derive_seed(master, i as u64));
        let mut data = problem.sample_dataset(n_data, &mut rng)?;
        data.split_random(train_fraction, &mut rng)?;
        let train = data.train_set()?;
        let test = data.test_set()?;

        let pc = super::perceptron_config(cfg, derive_seed(master, 2000 + i as u64))?;
        let a_perc = evaluate(&fit_classifier(ClassifierKind::Perceptron, &train, &pc)?, &test)?
            .accuracy;
        let a_nb =
            evaluate(&fit_classifier(ClassifierKind::NaiveBayes, &train, &pc)?, &test)?.accuracy;
        let a_cmvg =
            evaluate(&fit_classifier(ClassifierKind::Cmvg, &train, &pc)?, &test)?.accuracy;
        let a_nb_rde = rde_fit_predict(
            ClassifierKind::NaiveBayes,
            &train,
            &test,
            rde_dim,
            derive_seed(master, 3000 + i as u64),
            &pc,
        )?
        .accuracy;

        for (curve, value) in curves
            .iter_mut()
            .zip([a_max, a_perc, a_nb, a_nb_rde, a_cmvg])
        {
            curve.1.push((d, value));
        }
        rows.push(format!(
            "{},{},{},{},{},{}",
            fmt(d),
            fmt(a_max),
            fmt(a_perc),
            fmt(a_nb),
            fmt(a_nb_rde),
            fmt(a_cmvg)
        ));
        eprintln!("limit: d={d:.2} a_max={a_max:.4} perceptron={a_perc:.4} nb={a_nb:.4} nb_rde={a_nb_rde:.4} cmvg={a_cmvg:.4}");
    }

    write_csv(
        &out.join("limit_curve.csv"),
        "d,a_max,a_perceptron,a_nb,a_nb_rde,a_cmvg",
        &rows,
        &cfg.hash(),
    )?;
    if cfg.get_bool("plot")? {
        let series: Vec<Series> = curves
            .into_iter()
            .map(|(label, points)| Series { label, points })
            .collect();
        line_chart(
            &out.join("limit_curve.svg"),
            "accuracy limit and classifier accuracies vs class distance",
            "distance d",
            "accuracy",
            &series,
        )?;
    }
    Ok(())
}
