//! `embed`: per-layer clustering profiles (GDV + MDS) of the supervised
//! head and the unsupervised autoencoder on image or epoch-spectrum data.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use acclim_core::embed::{
    layer_gdv_profile, spectra_to_matrix, spectrum_preprocess, train_autoencoder, train_head,
    z_normalize_recording, AutoencoderSpec, HeadSpec, ProfileOptions,
};
use acclim_core::error::{Error, Result};
use acclim_core::features::read_epochs_csv;
use acclim_core::mnist;
use acclim_core::neuralnet::{self, TrainConfig};
use acclim_core::rng::{derive_seed, shuffled_indices};
use ndarray::Array2;

use crate::config::RunConfig;
use crate::csvio::{fmt, write_csv};
use crate::plot::scatter_classes;

pub const DEFAULTS: &[(&str, &str)] = &[
    ("dataset", "synthetic"),
    ("images", ""),
    ("labels", ""),
    ("epochs_csv", ""),
    ("mode", "head"),
    ("n_per_class", "1200"),
    ("train_n", "10000"),
    ("eval_n", "2000"),
    ("train_epochs", "30"),
    ("batch_size", "128"),
    ("val_fraction", "0.1"),
    ("sample_rate", "256"),
    ("mds", "true"),
    ("mds_points", "800"),
];

pub fn paper_scale(cfg: &mut RunConfig) {
    cfg.set("train_epochs", "50");
    cfg.set("mds_points", "2000");
}

fn load_data(cfg: &RunConfig, master: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    match cfg.get_str("dataset")? {
        "synthetic" => {
            let n_per_class = cfg.get_usize("n_per_class")?;
            Ok(mnist::synthetic_digits(n_per_class, derive_seed(master, 10)))
        }
        "idx" => {
            let images = cfg.get_str("images")?;
            let labels = cfg.get_str("labels")?;
            if images.is_empty() || labels.is_empty() {
                return Err(Error::Config(
                    "dataset=idx needs --images and --labels paths".into(),
                ));
            }
            let x = mnist::load_idx_images(&PathBuf::from(images))?;
            let y = mnist::load_idx_labels(&PathBuf::from(labels))?;
            if x.nrows() != y.len() {
                return Err(Error::Format(format!(
                    "{} images but {} labels",
                    x.nrows(),
                    y.len()
                )));
            }
            Ok((x, y))
        }
        "epochs" => {
            let path = cfg.get_str("epochs_csv")?;
            if path.is_empty() {
                return Err(Error::Config(
                    "dataset=epochs needs --epochs <file> (or --set epochs_csv=...)".into(),
                ));
            }
            let reader = BufReader::new(File::open(path)?);
            let mut epochs = read_epochs_csv(reader, cfg.get_f64("sample_rate")?)?;
            let labels: Vec<usize> = epochs
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    e.label
                        .ok_or_else(|| Error::Input(format!("epoch {i} has no stage label")))
                })
                .collect::<Result<Vec<_>>>()?;
            z_normalize_recording(&mut epochs)?;
            let spectra = spectrum_preprocess(&epochs)?;
            Ok((spectra_to_matrix(&spectra), labels))
        }
        other => Err(Error::Config(format!(
            "dataset must be `synthetic`, `idx`, or `epochs`, got `{other}`"
        ))),
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let master = cfg.seed()?;
    let (features, labels) = load_data(cfg, master)?;
    let n = features.nrows();
    let train_n = cfg.get_usize("train_n")?.min(n);
    let eval_n = cfg.get_usize("eval_n")?;
    if train_n == 0 || train_n + eval_n > n {
        return Err(Error::Config(format!(
            "cannot take {train_n} training and {eval_n} evaluation rows from {n} samples"
        )));
    }
    let order = shuffled_indices(n, derive_seed(master, 20));
    let take = |idx: &[usize]| -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((idx.len(), features.ncols()));
        let mut y = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&features.row(i));
            y.push(labels[i]);
        }
        (x, y)
    };
    let (train_x, train_y) = take(&order[..train_n]);
    let (eval_x, eval_y) = take(&order[train_n..train_n + eval_n]);
    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;

    let modes: Vec<&str> = match cfg.get_str("mode")? {
        "both" => vec!["head", "autoencoder"],
        m @ ("head" | "autoencoder") => vec![m],
        other => {
            return Err(Error::Config(format!(
                "mode must be `head`, `autoencoder`, or `both`, got `{other}`"
            )))
        }
    };

    let train_cfg = TrainConfig {
        batch_size: cfg.get_usize("batch_size")?,
        max_epochs: cfg.get_usize("train_epochs")?,
        validation_fraction: cfg.get_f64("val_fraction")?,
        seed: derive_seed(master, 30),
        ..TrainConfig::default()
    };
    let opts = ProfileOptions {
        with_mds: cfg.get_bool("mds")?,
        mds_cap: cfg.get_usize("mds_points")?,
        seed: derive_seed(master, 40),
    };
    let hash = cfg.hash();

    for mode in modes {
        let model = match mode {
            "head" => {
                let spec = HeadSpec {
                    encoder_sizes: [features.ncols(), 128, 64, 16],
                    n_classes,
                };
                train_head(&train_x.view(), &train_y, &spec, &train_cfg)?
            }
            _ => {
                let d = features.ncols();
                let spec = AutoencoderSpec {
                    layer_sizes: [d, 128, 64, 16, 64, 128, d],
                };
                train_autoencoder(&train_x.view(), &spec, &train_cfg)?
            }
        };

        let profile = layer_gdv_profile(&model, &eval_x.view(), &eval_y, &opts)?;
        let rows: Vec<String> = profile
            .gdv
            .iter()
            .zip(&profile.dropped_dims)
            .enumerate()
            .map(|(layer, (g, dropped))| format!("L{layer},{},{dropped}", fmt(*g)))
            .collect();
        write_csv(
            &out.join(format!("gdv_profile_{mode}.csv")),
            "layer,gdv,constant_dims_excluded",
            &rows,
            &hash,
        )?;
        eprintln!("embed[{mode}]: GDV profile {:?}", profile.gdv);

        if mode == "head" {
            let predictions = neuralnet::predict_classes(&model, &eval_x.view())?;
            let correct = predictions
                .iter()
                .zip(&eval_y)
                .filter(|(p, t)| p == t)
                .count();
            let accuracy = correct as f64 / eval_y.len() as f64;
            write_csv(
                &out.join("head_accuracy.csv"),
                "accuracy,n_eval",
                &[format!("{},{}", fmt(accuracy), eval_y.len())],
                &hash,
            )?;
            eprintln!("embed[head]: eval accuracy {accuracy:.4}");
        }

        if let Some(mds_list) = &profile.mds {
            for (layer, mds) in mds_list.iter().enumerate() {
                let kept: Vec<usize> = match &mds.subsample {
                    Some(idx) => idx.clone(),
                    None => (0..eval_y.len()).collect(),
                };
                let rows: Vec<String> = kept
                    .iter()
                    .enumerate()
                    .map(|(r, &src)| {
                        format!(
                            "{},{},{}",
                            fmt(mds.coords[(r, 0)]),
                            fmt(mds.coords[(r, 1)]),
                            eval_y[src]
                        )
                    })
                    .collect();
                write_csv(
                    &out.join(format!("mds_{mode}_l{layer}.csv")),
                    "x,y,label",
                    &rows,
                    &hash,
                )?;
                let points: Vec<(f64, f64, usize)> = kept
                    .iter()
                    .enumerate()
                    .map(|(r, &src)| (mds.coords[(r, 0)], mds.coords[(r, 1)], eval_y[src]))
                    .collect();
                scatter_classes(
                    &out.join(format!("mds_{mode}_l{layer}.svg")),
                    &format!("{mode} layer L{layer} (GDV {:.3})", profile.gdv[layer]),
                    &points,
                )?;
            }
        }
    }
    Ok(())
}
