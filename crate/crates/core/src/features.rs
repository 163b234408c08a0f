//! Element-wise feature transforms and epoch-level signal features.
//!
//! The transforms feed the invariance experiments: invertible element-wise
//! maps leave the accuracy limit untouched, information-destroying ones
//! lower it. The Fourier and autocorrelation features compress fixed-length
//! signal epochs (30 s at 256 Hz by default) into a handful of
//! interpretable values; a synthetic epoch generator stands in for private
//! recordings in tests and demos.

use std::io::{BufRead, Write};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Element-wise feature transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Sine,
    Cosine,
    Signum,
    Identity,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::Sine => "sine",
            Transform::Cosine => "cosine",
            Transform::Signum => "signum",
            Transform::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sine" | "sin" => Ok(Transform::Sine),
            "cosine" | "cos" => Ok(Transform::Cosine),
            "signum" | "sgn" => Ok(Transform::Signum),
            "identity" | "id" => Ok(Transform::Identity),
            other => Err(Error::Config(format!("unknown transform `{other}`"))),
        }
    }

    /// Apply to one value. `signum` maps exact zero to +1; for continuous
    /// features that input occurs with probability zero.
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Transform::Sine => x.sin(),
            Transform::Cosine => x.cos(),
            Transform::Signum => {
                if x < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Transform::Identity => x,
        }
    }
}

/// Apply a transform element-wise to every feature; labels and split carry
/// over unchanged.
pub fn apply_transform(t: Transform, data: &LabeledDataset) -> LabeledDataset {
    let features = data.features.mapv(|v| t.apply(v));
    let mut out = LabeledDataset::new(features, data.labels.clone()).expect("shape preserved");
    out.split = data.split.clone();
    out
}

/// Default epoch geometry: 30 seconds at 256 Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 256.0;
pub const DEFAULT_EPOCH_LEN: usize = 7680;

/// Sleep-stage names mapped onto labels 0..=4.
pub const STAGE_NAMES: [&str; 5] = ["Wake", "REM", "N1", "N2", "N3"];

/// Parse a stage label: an integer, or one of the stage names.
pub fn parse_stage_label(s: &str) -> Option<usize> {
    if let Ok(v) = s.parse::<usize>() {
        return Some(v);
    }
    STAGE_NAMES
        .iter()
        .position(|name| name.eq_ignore_ascii_case(s))
}

/// A fixed-length window of a signal with an optional stage label.
#[derive(Debug, Clone)]
pub struct Epoch {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub label: Option<usize>,
}

impl Epoch {
    pub fn new(samples: Vec<f64>, sample_rate: f64, label: Option<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("epoch has no samples".into()));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::Domain(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("epoch contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }
}

/// Magnitude of the epoch's Fourier component at `freq` (Hz), computed by
/// the direct trigonometric sums with `t_n = n / sample_rate`, `n = 1..N`.
pub fn fourier_feature(epoch: &Epoch, freq: f64) -> Result<f64> {
    if !(freq > 0.0 && freq <= epoch.nyquist()) {
        return Err(Error::Domain(format!(
            "frequency {freq} Hz outside (0, {}]",
            epoch.nyquist()
        )));
    }
    let omega = 2.0 * std::f64::consts::PI * freq / epoch.sample_rate;
    let mut cos_sum = 0.0;
    let mut sin_sum = 0.0;
    for (n, &x) in epoch.samples.iter().enumerate() {
        let phase = omega * (n + 1) as f64;
        cos_sum += x * phase.cos();
        sin_sum += x * phase.sin();
    }
    Ok((cos_sum * cos_sum + sin_sum * sin_sum).sqrt())
}

fn autocorr_at(epoch: &Epoch, lag: usize) -> Result<f64> {
    let n = epoch.len();
    let mean = epoch.samples.iter().sum::<f64>() / n as f64;
    let var = epoch
        .samples
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    if var <= 0.0 {
        return Err(Error::Domain(
            "autocorrelation of a constant epoch is undefined".into(),
        ));
    }
    let valid = n - lag;
    let mut acc = 0.0;
    for t in 0..valid {
        acc += (epoch.samples[t] - mean) * (epoch.samples[t + lag] - mean);
    }
    let r = acc / valid as f64 / var;
    // the windowed estimator can poke marginally past +-1 for lags close
    // to the epoch length; clamp to the definitional range
    Ok(r.clamp(-1.0, 1.0))
}

/// Normalized autocorrelation coefficient at an integer sample lag.
pub fn autocorr_feature(epoch: &Epoch, lag: usize) -> Result<f64> {
    if lag == 0 || lag >= epoch.len() {
        return Err(Error::Domain(format!(
            "lag must lie in [1, {}), got {lag}",
            epoch.len()
        )));
    }
    autocorr_at(epoch, lag)
}

/// Which epoch features to extract.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpec {
    Fourier { frequencies_hz: Vec<f64> },
    Autocorrelation { lags: Vec<usize> },
}

impl FeatureSpec {
    /// Six equally spaced frequencies: 5, 10, ..., 30 Hz.
    pub fn default_fourier() -> Self {
        FeatureSpec::Fourier {
            frequencies_hz: (1..=6).map(|i| 5.0 * i as f64).collect(),
        }
    }

    /// Six lags: 1, 3, ..., 11 samples.
    pub fn default_autocorrelation() -> Self {
        FeatureSpec::Autocorrelation {
            lags: (0..6).map(|i| 1 + 2 * i).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureSpec::Fourier { frequencies_hz } => frequencies_hz.len(),
            FeatureSpec::Autocorrelation { lags } => lags.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureSpec::Fourier { .. } => "fourier",
            FeatureSpec::Autocorrelation { .. } => "autocorrelation",
        }
    }

    fn extract_one(&self, epoch: &Epoch) -> Result<Vec<f64>> {
        match self {
            FeatureSpec::Fourier { frequencies_hz } => frequencies_hz
                .iter()
                .map(|&f| fourier_feature(epoch, f))
                .collect(),
            FeatureSpec::Autocorrelation { lags } => {
                lags.iter().map(|&l| autocorr_feature(epoch, l)).collect()
            }
        }
    }
}

/// Feature extraction outcome: the dataset of successful epochs plus the
/// indices and errors of failed ones.
pub struct Extraction {
    pub dataset: LabeledDataset,
    pub failures: Vec<(usize, Error)>,
}

/// Extract one feature row per epoch, in input order; failing epochs are
/// recorded with their index and skipped.
pub fn extract_features(epochs: &[Epoch], spec: &FeatureSpec) -> Result<Extraction> {
    if epochs.is_empty() {
        return Err(Error::Input("no epochs to extract features from".into()));
    }
    if spec.dim() == 0 {
        return Err(Error::Config("feature spec selects no features".into()));
    }
    let results: Vec<Result<(Vec<f64>, usize)>> = epochs
        .par_iter()
        .map(|epoch| {
            let label = epoch
                .label
                .ok_or_else(|| Error::Input("epoch has no label".into()))?;
            Ok((spec.extract_one(epoch)?, label))
        })
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut failures = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok((row, label)) => {
                rows.push(row);
                labels.push(label);
            }
            Err(e) => failures.push((i, e)),
        }
    }
    if rows.is_empty() {
        return Err(Error::Input(format!(
            "every epoch failed feature extraction ({} failures)",
            failures.len()
        )));
    }
    let d = spec.dim();
    let mut features = ndarray::Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    Ok(Extraction {
        dataset: LabeledDataset::new(features, labels)?,
        failures,
    })
}

/// Synthetic stage description: oscillatory components on top of low-pass
/// filtered noise.
#[derive(Debug, Clone)]
pub struct StageProfile {
    pub label: usize,
    /// `(frequency in Hz, amplitude)` sinusoidal components.
    pub oscillations: Vec<(f64, f64)>,
    /// RMS amplitude of the background noise.
    pub noise_sigma: f64,
    /// One-pole low-pass cutoff for the background noise.
    pub noise_cutoff_hz: f64,
}

/// Generate labeled synthetic epochs, `n_per_class` per profile, in
/// profile-major order. Deterministic for a fixed seed.
pub fn synth_epochs(
    profiles: &[StageProfile],
    n_per_class: usize,
    epoch_len: usize,
    sample_rate: f64,
    seed: u64,
) -> Result<Vec<Epoch>> {
    if profiles.len() < 2 {
        return Err(Error::Config("need at least 2 stage profiles".into()));
    }
    if n_per_class == 0 || epoch_len == 0 || !(sample_rate > 0.0) {
        return Err(Error::Config("empty epoch geometry".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|p| (0..n_per_class).map(move |i| (p, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(p, i)| {
            let profile = &profiles[p];
            let mut rng = rng_from_seed(derive_seed(seed, (p as u64) << 32 | i as u64));
            let mut samples = vec![0.0f64; epoch_len];
            // low-pass filtered white noise, renormalized to noise_sigma RMS
            let alpha =
                (-2.0 * std::f64::consts::PI * profile.noise_cutoff_hz / sample_rate).exp();
            let mut state = 0.0;
            for s in samples.iter_mut() {
                let white: f64 = rng.sample(StandardNormal);
                state = alpha * state + (1.0 - alpha) * white;
                *s = state;
            }
            let rms = (samples.iter().map(|v| v * v).sum::<f64>() / epoch_len as f64).sqrt();
            if rms > 0.0 {
                let scale = profile.noise_sigma / rms;
                for s in samples.iter_mut() {
                    *s *= scale;
                }
            }
            for &(freq, amp) in &profile.oscillations {
                let phase0: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
                let omega = 2.0 * std::f64::consts::PI * freq / sample_rate;
                for (n, s) in samples.iter_mut().enumerate() {
                    *s += amp * (omega * (n + 1) as f64 + phase0).sin();
                }
            }
            Epoch::new(samples, sample_rate, Some(profile.label))
        })
        .collect()
}

/// Write epochs as CSV with header `label,s1,...,sN`.
pub fn write_epochs_csv<W: Write>(epochs: &[Epoch], w: &mut W) -> Result<()> {
    if epochs.is_empty() {
        return Err(Error::Input("no epochs to write".into()));
    }
    let n = epochs[0].len();
    let header: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    writeln!(w, "label,{}", header.join(","))?;
    for epoch in epochs {
        if epoch.len() != n {
            return Err(Error::Shape("epochs differ in length".into()));
        }
        let label = epoch
            .label
            .map(|l| l.to_string())
            .unwrap_or_else(|| "-".into());
        let cells: Vec<String> = epoch.samples.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{label},{}", cells.join(","))?;
    }
    Ok(())
}

/// Read epochs written by [`write_epochs_csv`]; labels may be integers,
/// stage names, or `-` for unlabeled epochs.
pub fn read_epochs_csv<R: BufRead>(r: R, sample_rate: f64) -> Result<Vec<Epoch>> {
    let mut epochs = Vec::new();
    let mut saw_header = false;
    let mut len: Option<usize> = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if !line.starts_with("label,") {
                return Err(Error::Format(format!(
                    "epoch CSV must start with a `label,s1,...` header, got `{line}`"
                )));
            }
            saw_header = true;
            continue;
        }
        let mut cells = line.split(',');
        let label_cell = cells.next().unwrap_or("");
        let label = if label_cell == "-" || label_cell.is_empty() {
            None
        } else {
            Some(parse_stage_label(label_cell).ok_or_else(|| {
                Error::Format(format!("line {}: bad label `{label_cell}`", lineno + 1))
            })?)
        };
        let samples: Vec<f64> = cells
            .map(|c| {
                c.parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: bad sample `{c}`: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match len {
            None => len = Some(samples.len()),
            Some(prev) if prev != samples.len() => {
                return Err(Error::Format(format!(
                    "line {}: epoch length {} differs from {}",
                    lineno + 1,
                    samples.len(),
                    prev
                )))
            }
            _ => {}
        }
        epochs.push(Epoch::new(samples, sample_rate, label)?);
    }
    if epochs.is_empty() {
        return Err(Error::Format("epoch CSV contains no epochs".into()));
    }
    Ok(epochs)
}
