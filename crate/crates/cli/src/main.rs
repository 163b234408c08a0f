//! Experiment harness: reproducible accuracy-limit, sweep, transform,
//! feature and embedding runs.
//!
//! Every subcommand resolves a configuration (defaults -> optional
//! `--paper-scale` preset -> config file -> `--set` overrides -> flags),
//! requires a master seed, writes CSV tables tagged with the config hash,
//! and drops a `manifest.toml` from which the run can be re-executed
//! byte-identically.

mod config;
mod csvio;
mod plot;

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use acclim_core::error::Error;
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "acclim",
    version,
    about = "Synthetic classification data, Bayes-optimal accuracy limits, classifiers, and clustering metrics"
)]
struct Cli {
    /// TOML config file (a previous run's manifest.toml also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. --set n_rep=50.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Output directory (created if missing). Default: runs/<command>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed; mandatory (here, via --set seed=..., or a config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Full-scale settings (fine grids, 100 repetitions). Minutes to hours.
    #[arg(long, global = true)]
    paper_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy limit vs class distance, with classifier accuracies.
    Limit,
    /// Classifier accuracies over a D/S/C grid of the data generator.
    Sweep,
    /// Classifier accuracies under element-wise feature transforms.
    Transform,
    /// Epoch feature extraction and stage classification.
    Features {
        /// Epoch CSV (label,s1,...,sN); implies source=csv.
        #[arg(long)]
        epochs: Option<PathBuf>,
    },
    /// Per-layer GDV profiles and MDS projections.
    Embed {
        /// IDX image file; implies dataset=idx together with --labels.
        #[arg(long)]
        images: Option<PathBuf>,
        /// IDX label file.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Epoch CSV; implies dataset=epochs.
        #[arg(long)]
        epochs: Option<PathBuf>,
        /// head | autoencoder | both
        #[arg(long)]
        mode: Option<String>,
    },
    /// GDV of a dataset CSV.
    Gdv {
        /// Dataset CSV (f1,...,fD,label).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate DSC datasets as CSV.
    Generate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Limit => "limit",
            Command::Sweep => "sweep",
            Command::Transform => "transform",
            Command::Features { .. } => "features",
            Command::Embed { .. } => "embed",
            Command::Gdv { .. } => "gdv",
            Command::Generate => "generate",
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Format(_) | Error::Io(_) => 3,
        Error::Numeric(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let name = cli.command.name();
    let defaults: &[(&str, &str)] = match cli.command {
        Command::Limit => commands::limit::DEFAULTS,
        Command::Sweep => commands::sweep::DEFAULTS,
        Command::Transform => commands::transform::DEFAULTS,
        Command::Features { .. } => commands::features::DEFAULTS,
        Command::Embed { .. } => commands::embed::DEFAULTS,
        Command::Gdv { .. } => commands::gdv::DEFAULTS,
        Command::Generate => commands::generate::DEFAULTS,
    };
    let mut cfg = RunConfig::new(name, defaults);
    if cli.paper_scale {
        match cli.command {
            Command::Limit => commands::limit::paper_scale(&mut cfg),
            Command::Sweep => commands::sweep::paper_scale(&mut cfg),
            Command::Transform => commands::transform::paper_scale(&mut cfg),
            Command::Features { .. } => commands::features::paper_scale(&mut cfg),
            Command::Embed { .. } => commands::embed::paper_scale(&mut cfg),
            Command::Gdv { .. } => commands::gdv::paper_scale(&mut cfg),
            Command::Generate => commands::generate::paper_scale(&mut cfg),
        }
    }
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    for spec in &cli.sets {
        cfg.apply_set(spec)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed);
    }
    match &cli.command {
        Command::Features { epochs } => {
            if let Some(path) = epochs {
                cfg.set("source", "csv");
                cfg.set("epochs_csv", path.display());
            }
        }
        Command::Embed {
            images,
            labels,
            epochs,
            mode,
        } => {
            if let Some(path) = images {
                cfg.set("dataset", "idx");
                cfg.set("images", path.display());
            }
            if let Some(path) = labels {
                cfg.set("labels", path.display());
            }
            if let Some(path) = epochs {
                cfg.set("dataset", "epochs");
                cfg.set("epochs_csv", path.display());
            }
            if let Some(m) = mode {
                cfg.set("mode", m);
            }
        }
        Command::Gdv { input } => {
            if let Some(path) = input {
                cfg.set("input", path.display());
            }
        }
        _ => {}
    }
    // fail fast when no seed is configured
    cfg.seed()?;

    let out = cli
        .out
        .unwrap_or_else(|| PathBuf::from("runs").join(name));
    std::fs::create_dir_all(&out)?;

    let started = Instant::now();
    match &cli.command {
        Command::Limit => commands::limit::run(&cfg, &out)?,
        Command::Sweep => commands::sweep::run(&cfg, &out)?,
        Command::Transform => commands::transform::run(&cfg, &out)?,
        Command::Features { .. } => commands::features::run(&cfg, &out)?,
        Command::Embed { .. } => commands::embed::run(&cfg, &out)?,
        Command::Gdv { .. } => commands::gdv::run(&cfg, &out)?,
        Command::Generate => commands::generate::run(&cfg, &out)?,
    }
    let manifest = cfg.write_manifest(&out, started.elapsed().as_secs_f64())?;
    eprintln!("manifest: {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
