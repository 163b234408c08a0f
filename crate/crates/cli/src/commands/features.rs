//! `features`: epoch feature extraction and stage classification, on
//! synthetic epochs or a user-supplied epoch CSV.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use acclim_core::classify::{evaluate, fit_classifier, ClassifierKind};
use acclim_core::error::{Error, Result};
use acclim_core::features::{
    extract_features, read_epochs_csv, synth_epochs, Epoch, FeatureSpec, StageProfile,
};
use acclim_core::rng::{derive_seed, rng_from_seed};

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};

pub const DEFAULTS: &[(&str, &str)] = &[
    ("source", "synthetic"),
    ("epochs_csv", ""),
    ("feature", "fourier"),
    ("frequencies", "5,10,15,20,25,30"),
    ("lags", "1,3,5,7,9,11"),
    ("classifier", "naive_bayes"),
    ("profiles", "separable"),
    ("n_per_class", "60"),
    ("epoch_len", "7680"),
    ("sample_rate", "256"),
    ("train_fraction", "0.8"),
    ("hidden_size", "100"),
    ("train_epochs", "50"),
    ("batch_size", "128"),
    ("write_features", "true"),
];

pub fn paper_scale(cfg: &mut RunConfig) {
    cfg.set("n_per_class", "200");
}

/// Built-in stage profiles: distinct oscillation bands per stage, or five
/// identical stages as the indistinguishable control.
pub(crate) fn builtin_profiles(name: &str) -> Result<Vec<StageProfile>> {
    let separable = vec![
        StageProfile {
            label: 0,
            oscillations: vec![(18.0, 1.2), (10.0, 0.3)],
            noise_sigma: 1.0,
            noise_cutoff_hz: 30.0,
        },
        StageProfile {
            label: 1,
            oscillations: vec![(6.0, 1.0)],
            noise_sigma: 0.8,
            noise_cutoff_hz: 30.0,
        },
        StageProfile {
            label: 2,
            oscillations: vec![(9.0, 1.0)],
            noise_sigma: 0.6,
            noise_cutoff_hz: 30.0,
        },
        StageProfile {
            label: 3,
            oscillations: vec![(13.0, 1.2)],
            noise_sigma: 0.5,
            noise_cutoff_hz: 30.0,
        },
        StageProfile {
            label: 4,
            oscillations: vec![(2.0, 1.5)],
            noise_sigma: 0.4,
            noise_cutoff_hz: 30.0,
        },
    ];
    match name {
        "separable" => Ok(separable),
        "identical" => {
            let template = separable[2].clone();
            Ok((0..5)
                .map(|label| StageProfile {
                    label,
                    ..template.clone()
                })
                .collect())
        }
        other => Err(Error::Config(format!(
            "profiles must be `separable` or `identical`, got `{other}`"
        ))),
    }
}

fn feature_spec(cfg: &RunConfig) -> Result<FeatureSpec> {
    match cfg.get_str("feature")? {
        "fourier" => Ok(FeatureSpec::Fourier {
            frequencies_hz: cfg.get_f64_list("frequencies")?,
        }),
        "autocorrelation" | "autocorr" => Ok(FeatureSpec::Autocorrelation {
            lags: cfg.get_usize_list("lags")?,
        }),
        other => Err(Error::Config(format!(
            "feature must be `fourier` or `autocorrelation`, got `{other}`"
        ))),
    }
}

fn classifier_kind(cfg: &RunConfig) -> Result<ClassifierKind> {
    match cfg.get_str("classifier")? {
        "naive_bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
        "cmvg" => Ok(ClassifierKind::Cmvg),
        "perceptron" => Ok(ClassifierKind::Perceptron),
        other => Err(Error::Config(format!("unknown classifier `{other}`"))),
    }
}

fn load_epochs(cfg: &RunConfig, master: u64) -> Result<Vec<Epoch>> {
    match cfg.get_str("source")? {
        "synthetic" => {
            let profiles = builtin_profiles(cfg.get_str("profiles")?)?;
            synth_epochs(
                &profiles,
                cfg.get_usize("n_per_class")?,
                cfg.get_usize("epoch_len")?,
                cfg.get_f64("sample_rate")?,
                derive_seed(master, 0),
            )
        }
        "csv" => {
            let path = cfg.get_str("epochs_csv")?;
            if path.is_empty() {
                return Err(Error::Config(
                    "source=csv needs --epochs <file> (or --set epochs_csv=...)".into(),
                ));
            }
            let reader = BufReader::new(File::open(path)?);
            read_epochs_csv(reader, cfg.get_f64("sample_rate")?)
        }
        other => Err(Error::Config(format!(
            "source must be `synthetic` or `csv`, got `{other}`"
        ))),
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let epochs = load_epochs(cfg, master)?;
    let spec = feature_spec(cfg)?;
    let extraction = extract_features(&epochs, &spec)?;
    for (idx, err) in &extraction.failures {
        eprintln!("features: epoch {idx} skipped: {err}");
    }

    let hash = cfg.hash();
    if cfg.get_bool("write_features")? {
        let mut buf = Vec::new();
        extraction.dataset.write_csv(&mut buf)?;
        buf.extend_from_slice(format!("#manifest:{hash}\n").as_bytes());
        std::fs::write(out.join("features.csv"), buf)?;
    }

    let mut data = extraction.dataset;
    let mut rng = rng_from_seed(derive_seed(master, 1));
    data.split_random(cfg.get_f64("train_fraction")?, &mut rng)?;
    let train = data.train_set()?;
    let test = data.test_set()?;
    let kind = classifier_kind(cfg)?;
    let pc = super::perceptron_config(cfg, derive_seed(master, 2))?;
    let model = fit_classifier(kind, &train, &pc)?;
    let eval = evaluate(&model, &test)?;

    write_csv(
        &out.join("report.csv"),
        "classifier,feature,n_train,n_test,n_failed,accuracy",
        &[format!(
            "{},{},{},{},{},{}",
            kind.name(),
            spec.kind_name(),
            train.len(),
            test.len(),
            extraction.failures.len(),
            fmt(eval.accuracy)
        )],
        &hash,
    )?;

    let k = eval.confusion.k();
    let header = std::iter::once("assigned".to_string())
        .chain((0..k).map(|i| format!("true_{i}")))
        .collect::<Vec<_>>()
        .join(",");
    let rows: Vec<String> = (0..k)
        .map(|j| {
            std::iter::once(format!("assigned_{j}"))
                .chain((0..k).map(|i| fmt(eval.confusion.probs()[(j, i)])))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    write_csv(&out.join("confusion.csv"), &header, &rows, &hash)?;
    eprintln!(
        "features: {} on {} features -> accuracy {:.4} ({} test epochs)",
        kind.name(),
        spec.kind_name(),
        eval.accuracy,
        test.len()
    );
    Ok(())
}
