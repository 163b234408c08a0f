//! `sweep`: classifier accuracies over a D/S/C grid of the
//! superstatistical generator, with per-repetition and mean tables.

use std::path::Path;

use acclim_core::classify::{evaluate, fit_classifier, ClassifierKind};
use acclim_core::dsc::{generate_repetition_with_split, DscControl};
use acclim_core::error::{Error, Result};
use acclim_core::rng::derive_seed;

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};
use crate::plot::{line_chart, Series};

pub const DEFAULTS: &[(&str, &str)] = &[
    ("d_values", "5"),
    ("s_values", "0,0.5,1,1.5,2,2.5,3"),
    ("c_values", "0"),
    ("n_rep", "20"),
    ("n_vec", "10000"),
    ("train_fraction", "0.8"),
    ("classifiers", "naive_bayes,cmvg,perceptron"),
    ("hidden_size", "100"),
    ("train_epochs", "50"),
    ("batch_size", "128"),
    ("plot", "true"),
];

pub fn paper_scale(cfg: &mut RunConfig) {
    cfg.set("n_rep", "100");
}

fn parse_classifiers(raw: &str) -> Result<Vec<ClassifierKind>> {
    raw.split(',')
        .map(|s| match s.trim() {
            "naive_bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
            "cmvg" => Ok(ClassifierKind::Cmvg),
            "perceptron" => Ok(ClassifierKind::Perceptron),
            other => Err(Error::Config(format!("unknown classifier `{other}`"))),
        })
        .collect()
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let d_values = cfg.get_f64_list("d_values")?;
    let s_values = cfg.get_f64_list("s_values")?;
    let c_values = cfg.get_f64_list("c_values")?;
    let n_rep = cfg.get_usize("n_rep")?;
    let n_vec = cfg.get_usize("n_vec")?;
    let train_fraction = cfg.get_f64("train_fraction")?;
    let classifiers = parse_classifiers(cfg.get_str("classifiers")?)?;

    let mut run_rows = Vec::new();
    let mut mean_rows = Vec::new();
    // (axis value per varying dimension, classifier) -> mean, for plotting
    let mut mean_points: Vec<(f64, f64, f64, ClassifierKind, f64)> = Vec::new();

    let mut cell_idx: u64 = 0;
    for &d in &d_values {
        for &s in &s_values {
            for &c in &c_values {
                let control = DscControl {
                    dims: d.round() as usize,
                    separation: s,
                    correlation: c,
                    n_rep,
                    n_vec,
                    seed: derive_seed(master, cell_idx),
                };
                control.validate()?;
                let mut sums: Vec<(f64, usize)> = vec![(0.0, 0); classifiers.len()];
                for rep in 0..n_rep {
                    let repetition =
                        match generate_repetition_with_split(&control, rep, train_fraction) {
                            Ok(r) => r,
                            Err(e) => {
                                for kind in &classifiers {
                                    run_rows.push(format!(
                                        "{},{},{},{rep},{},NaN,failed:{e}",
                                        fmt(d),
                                        fmt(s),
                                        fmt(c),
                                        kind.name()
                                    ));
                                }
                                continue;
                            }
                        };
                    let (train, test) =
                        match (repetition.dataset.train_set(), repetition.dataset.test_set()) {
                            (Ok(a), Ok(b)) => (a, b),
                            _ => continue,
                        };
                    for (ki, kind) in classifiers.iter().enumerate() {
                        let pc = super::perceptron_config(
                            cfg,
                            derive_seed(control.seed, 0x5EED_0000 + rep as u64),
                        )?;
                        let outcome = fit_classifier(*kind, &train, &pc)
                            .and_then(|model| evaluate(&model, &test));
                        match outcome {
                            Ok(eval) => {
                                sums[ki].0 += eval.accuracy;
                                sums[ki].1 += 1;
                                run_rows.push(format!(
                                    "{},{},{},{rep},{},{},ok",
                                    fmt(d),
                                    fmt(s),
                                    fmt(c),
                                    kind.name(),
                                    fmt(eval.accuracy)
                                ));
                            }
                            Err(e) => {
                                run_rows.push(format!(
                                    "{},{},{},{rep},{},NaN,failed:{e}",
                                    fmt(d),
                                    fmt(s),
                                    fmt(c),
                                    kind.name()
                                ));
                            }
                        }
                    }
                }
                for (ki, kind) in classifiers.iter().enumerate() {
                    let (acc, n_ok) = sums[ki];
                    let mean = if n_ok > 0 { acc / n_ok as f64 } else { f64::NAN };
                    mean_rows.push(format!(
                        "{},{},{},{},{},{n_ok}",
                        fmt(d),
                        fmt(s),
                        fmt(c),
                        kind.name(),
                        fmt(mean)
                    ));
                    mean_points.push((d, s, c, *kind, mean));
                    eprintln!(
                        "sweep: D={d} S={s} C={c} {} mean={mean:.4} ({n_ok}/{n_rep})",
                        kind.name()
                    );
                }
                cell_idx += 1;
            }
        }
    }

    let hash = cfg.hash();
    write_csv(
        &out.join("sweep_runs.csv"),
        "d,s,c,rep,classifier,accuracy,status",
        &run_rows,
        &hash,
    )?;
    write_csv(
        &out.join("sweep_mean.csv"),
        "d,s,c,classifier,mean_accuracy,n_ok",
        &mean_rows,
        &hash,
    )?;

    if cfg.get_bool("plot")? {
        // plot only when exactly one axis varies
        let varying = [
            (d_values.len() > 1, 0usize, "D"),
            (s_values.len() > 1, 1usize, "S"),
            (c_values.len() > 1, 2usize, "C"),
        ];
        let active: Vec<_> = varying.iter().filter(|v| v.0).collect();
        if active.len() == 1 {
            let (_, axis, label) = *active[0];
            let series: Vec<Series> = classifiers
                .iter()
                .map(|kind| Series {
                    label: kind.name().to_string(),
                    points: mean_points
                        .iter()
                        .filter(|p| p.3 == *kind)
                        .map(|p| {
                            let x = match axis {
                                0 => p.0,
                                1 => p.1,
                                _ => p.2,
                            };
                            (x, p.4)
                        })
                        .collect(),
                })
                .collect();
            line_chart(
                &out.join("sweep_mean.svg"),
                &format!("mean accuracy vs {label}"),
                label,
                "accuracy",
                &series,
            )?;
        }
    }
    Ok(())
}
