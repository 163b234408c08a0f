//! Distance-preserving projections and layer-wise clustering analysis.
//!
//! Classical (Torgerson) MDS embeds points by eigendecomposing the
//! double-centered squared-distance matrix. The autoencoder and the
//! supervised classifier head share the same 784-128-64-16 encoder shape;
//! per-layer GDV profiles quantify how class clustering changes through
//! those layers.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::features::Epoch;
use crate::linalg::symmetric_eigen;
use crate::metrics;
use crate::neuralnet::{self, Activation, LayerSpec, MlpModel, TrainConfig};
use crate::rng::{derive_seed, rng_from_seed};

/// Inputs larger than this are seeded-subsampled before the O(N^2) MDS.
pub const MDS_SUBSAMPLE_CAP: usize = 2000;

const MDS_SUBSAMPLE_SEED: u64 = 0x3D5;

/// Result of a classical MDS projection.
#[derive(Debug, Clone)]
pub struct MdsResult {
    /// `n x target_dim` coordinates.
    pub coords: Array2<f64>,
    /// Full eigenvalue spectrum of the double-centered Gram matrix,
    /// descending.
    pub eigenvalues: Vec<f64>,
    /// Row indices that were kept when the input had to be subsampled.
    pub subsample: Option<Vec<usize>>,
    /// True when one of the leading `target_dim` eigenvalues was negative
    /// beyond tolerance and had to be clipped.
    pub degenerate: bool,
}

/// Classical MDS with the default subsample cap.
pub fn classical_mds(points: &ArrayView2<f64>, target_dim: usize) -> Result<MdsResult> {
    classical_mds_seeded(points, target_dim, MDS_SUBSAMPLE_CAP, MDS_SUBSAMPLE_SEED)
}

/// Classical MDS: double-center the squared Euclidean distances, take the
/// top `target_dim` eigenpairs, scale eigenvectors by the eigenvalue roots.
pub fn classical_mds_seeded(
    points: &ArrayView2<f64>,
    target_dim: usize,
    cap: usize,
    seed: u64,
) -> Result<MdsResult> {
    if target_dim == 0 {
        return Err(Error::Config("MDS target dimension must be >= 1".into()));
    }
    let n_input = points.nrows();
    if n_input < target_dim + 1 {
        return Err(Error::Input(format!(
            "MDS needs at least {} points for {target_dim} output dimensions, got {n_input}",
            target_dim + 1
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("MDS: non-finite coordinates".into()));
    }

    let (work, subsample): (Array2<f64>, Option<Vec<usize>>) = if n_input > cap && cap > target_dim
    {
        let mut idx: Vec<usize> = (0..n_input).collect();
        idx.shuffle(&mut rng_from_seed(seed));
        idx.truncate(cap);
        idx.sort_unstable();
        let mut sub = Array2::zeros((cap, points.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            sub.row_mut(r).assign(&points.row(i));
        }
        (sub, Some(idx))
    } else {
        (points.to_owned(), None)
    };
    let n = work.nrows();
    let d = work.ncols();

    // squared Euclidean distances
    let mut sq = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for k in 0..d {
                let diff = work[(i, k)] - work[(j, k)];
                acc += diff * diff;
            }
            sq[(i, j)] = acc;
            sq[(j, i)] = acc;
        }
    }

    // Torgerson double centering: B = -1/2 J D^2 J
    let mut row_mean = vec![0.0f64; n];
    for i in 0..n {
        row_mean[i] = sq.row(i).sum() / n as f64;
    }
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut gram = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand);
        }
    }

    let eig = symmetric_eigen(&gram.view())?;
    let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let tol = 1e-9 * lambda_max.max(1.0);
    let degenerate = eig.values[..target_dim].iter().any(|&v| v < -tol);
    let mut coords = Array2::zeros((n, target_dim));
    for k in 0..target_dim {
        let scale = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            coords[(i, k)] = eig.vectors[(i, k)] * scale;
        }
    }
    Ok(MdsResult {
        coords,
        eigenvalues: eig.values,
        subsample,
        degenerate,
    })
}

/// Number of spectrum components kept per epoch.
pub const SPECTRUM_DIM: usize = 784;

/// Epoch length required by the spectrum pipeline.
pub const SPECTRUM_EPOCH_LEN: usize = 7680;

/// Square roots of the lowest-frequency FFT magnitudes of one epoch,
/// globally min-max normalized to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SpectrumVector(pub Vec<f64>);

/// Z-transform the samples of a whole recording (all epochs pooled) to
/// zero mean and unit variance.
pub fn z_normalize_recording(epochs: &mut [Epoch]) -> Result<()> {
    let n: usize = epochs.iter().map(|e| e.len()).sum();
    if n == 0 {
        return Err(Error::Input("no samples to normalize".into()));
    }
    let mean = epochs
        .iter()
        .flat_map(|e| e.samples.iter())
        .sum::<f64>()
        / n as f64;
    let var = epochs
        .iter()
        .flat_map(|e| e.samples.iter())
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    if var <= 0.0 {
        return Err(Error::Domain("recording has zero variance".into()));
    }
    let inv = 1.0 / var.sqrt();
    for epoch in epochs {
        for s in &mut epoch.samples {
            *s = (*s - mean) * inv;
        }
    }
    Ok(())
}

/// FFT each 7680-sample epoch, keep the square roots of the magnitudes of
/// the 784 lowest-frequency amplitudes, and normalize the whole list to
/// `[0, 1]`.
pub fn spectrum_preprocess(epochs: &[Epoch]) -> Result<Vec<SpectrumVector>> {
    if epochs.is_empty() {
        return Err(Error::Input("no epochs to preprocess".into()));
    }
    for (i, e) in epochs.iter().enumerate() {
        if e.len() != SPECTRUM_EPOCH_LEN {
            return Err(Error::Shape(format!(
                "epoch {i} has {} samples, the spectrum pipeline needs {SPECTRUM_EPOCH_LEN}",
                e.len()
            )));
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(SPECTRUM_EPOCH_LEN);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(epochs.len());
    let mut buf = vec![Complex::new(0.0f64, 0.0); SPECTRUM_EPOCH_LEN];
    for epoch in epochs {
        for (b, &s) in buf.iter_mut().zip(&epoch.samples) {
            *b = Complex::new(s, 0.0);
        }
        fft.process(&mut buf);
        vectors.push(buf[..SPECTRUM_DIM].iter().map(|c| c.norm().sqrt()).collect());
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vectors.iter().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let range = hi - lo;
    for vec in &mut vectors {
        for v in vec.iter_mut() {
            *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
        }
    }
    Ok(vectors.into_iter().map(SpectrumVector).collect())
}

/// Stack spectrum vectors into an `n x 784` matrix.
pub fn spectra_to_matrix(spectra: &[SpectrumVector]) -> Array2<f64> {
    let mut out = Array2::zeros((spectra.len(), SPECTRUM_DIM));
    for (i, s) in spectra.iter().enumerate() {
        for (j, &v) in s.0.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Mirror-symmetric autoencoder shape with a 16-unit bottleneck.
///
/// Hidden layers are relu; the reconstruction layer is linear so that no
/// output unit can be permanently stuck at zero under the zero-bias
/// initialization.
#[derive(Debug, Clone)]
pub struct AutoencoderSpec {
    pub layer_sizes: [usize; 7],
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        Self {
            layer_sizes: [784, 128, 64, 16, 64, 128, 784],
        }
    }
}

impl AutoencoderSpec {
    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.iter().any(|&v| v == 0) {
            return Err(Error::Config("autoencoder layer sizes must be >= 1".into()));
        }
        if s[0] != s[6] || s[1] != s[5] || s[2] != s[4] {
            return Err(Error::Config(
                "autoencoder layer sizes must be mirror-symmetric".into(),
            ));
        }
        if s[3] != 16 {
            return Err(Error::Config(format!(
                "autoencoder bottleneck must be 16 units, got {}",
                s[3]
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let s = &self.layer_sizes;
        (0..6)
            .map(|i| {
                let activation = if i == 5 { Activation::Linear } else { Activation::Relu };
                LayerSpec::new(s[i], s[i + 1], activation)
            })
            .collect()
    }
}

/// Classifier head sharing the autoencoder's encoder shape, with a softmax
/// output layer.
#[derive(Debug, Clone)]
pub struct HeadSpec {
    pub encoder_sizes: [usize; 4],
    pub n_classes: usize,
}

impl HeadSpec {
    pub fn new(n_classes: usize) -> Self {
        Self {
            encoder_sizes: [784, 128, 64, 16],
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder_sizes.iter().any(|&v| v == 0) || self.n_classes < 2 {
            return Err(Error::Config("invalid head shape".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.encoder_sizes[0]
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let s = &self.encoder_sizes;
        vec![
            LayerSpec::new(s[0], s[1], Activation::Relu),
            LayerSpec::new(s[1], s[2], Activation::Relu),
            LayerSpec::new(s[2], s[3], Activation::Relu),
            LayerSpec::new(s[3], self.n_classes, Activation::Softmax),
        ]
    }
}

fn check_unit_interval(data: &ArrayView2<f64>) -> Result<()> {
    if data
        .iter()
        .any(|&v| !v.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&v))
    {
        return Err(Error::Domain(
            "input values must lie in [0, 1] (normalize first)".into(),
        ));
    }
    Ok(())
}

/// Train the autoencoder to reconstruct its input under mean squared error.
pub fn train_autoencoder(
    data: &ArrayView2<f64>,
    spec: &AutoencoderSpec,
    cfg: &TrainConfig,
) -> Result<MlpModel> {
    spec.validate()?;
    if data.ncols() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "data has {} columns, autoencoder expects {}",
            data.ncols(),
            spec.input_dim()
        )));
    }
    check_unit_interval(data)?;
    let mut cfg = cfg.clone();
    cfg.loss = neuralnet::Loss::MeanSquaredError;
    let model = neuralnet::init_model(&spec.layer_specs(), derive_seed(cfg.seed, 0xAE))?;
    let outcome = neuralnet::train(model, data, data, &cfg)?;
    Ok(outcome.model)
}

/// Train the supervised head with categorical crossentropy.
pub fn train_head(
    data: &ArrayView2<f64>,
    labels: &[usize],
    spec: &HeadSpec,
    cfg: &TrainConfig,
) -> Result<MlpModel> {
    spec.validate()?;
    if data.ncols() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "data has {} columns, head expects {}",
            data.ncols(),
            spec.input_dim()
        )));
    }
    if labels.len() != data.nrows() {
        return Err(Error::Shape("label count does not match rows".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= spec.n_classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {} classes",
            spec.n_classes
        )));
    }
    let mut targets = Array2::zeros((data.nrows(), spec.n_classes));
    for (i, &l) in labels.iter().enumerate() {
        targets[(i, l)] = 1.0;
    }
    let mut cfg = cfg.clone();
    cfg.loss = neuralnet::Loss::CategoricalCrossentropy;
    let model = neuralnet::init_model(&spec.layer_specs(), derive_seed(cfg.seed, 0xCAFE))?;
    let outcome = neuralnet::train(model, data, &targets.view(), &cfg)?;
    Ok(outcome.model)
}

/// Mean squared reconstruction error of a model on `data` (inputs double
/// as targets), plus the error of predicting the per-column mean of
/// `reference` everywhere.
pub fn reconstruction_mse(model: &MlpModel, data: &ArrayView2<f64>) -> Result<f64> {
    let acts = neuralnet::forward(model, data)?;
    Ok(neuralnet::loss_value(
        neuralnet::Loss::MeanSquaredError,
        &acts[model.n_layers()].view(),
        data,
    ))
}

/// MSE of the constant per-column-mean predictor (columns averaged over
/// `train`, evaluated on `test`).
pub fn mean_predictor_mse(train: &ArrayView2<f64>, test: &ArrayView2<f64>) -> f64 {
    let d = train.ncols();
    let mut mean = vec![0.0f64; d];
    for row in train.rows() {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    for m in &mut mean {
        *m /= train.nrows() as f64;
    }
    let mut acc = 0.0;
    for row in test.rows() {
        for (j, &v) in row.iter().enumerate() {
            let diff = v - mean[j];
            acc += diff * diff;
        }
    }
    acc / test.nrows() as f64
}

/// Options for [`layer_gdv_profile`].
#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Also compute a 2D MDS projection per layer.
    pub with_mds: bool,
    pub mds_cap: usize,
    pub seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            with_mds: false,
            mds_cap: MDS_SUBSAMPLE_CAP,
            seed: 0,
        }
    }
}

/// GDV (and optional MDS projection) for the input and the first three
/// hidden layers.
#[derive(Debug, Clone)]
pub struct LayerProfile {
    /// GDV at L0 (input), L1, L2, L3.
    pub gdv: Vec<f64>,
    /// Constant dimensions excluded per layer before the GDV computation.
    pub dropped_dims: Vec<usize>,
    pub mds: Option<Vec<MdsResult>>,
}

/// Columns with zero variance carry no geometry and make the z-score
/// undefined; they are excluded (and counted) before the GDV evaluation.
fn drop_constant_columns(data: &ArrayView2<f64>) -> (Array2<f64>, usize) {
    let n = data.nrows();
    let mut keep = Vec::new();
    for (j, col) in data.columns().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if var > 0.0 {
            keep.push(j);
        }
    }
    let dropped = data.ncols() - keep.len();
    let mut out = Array2::zeros((n, keep.len()));
    for (dst, &src) in keep.iter().enumerate() {
        out.column_mut(dst).assign(&data.column(src));
    }
    (out, dropped)
}

/// Evaluate class clustering at the input (L0) and after each of the first
/// three hidden layers (L1..L3) of a trained network.
pub fn layer_gdv_profile(
    model: &MlpModel,
    data: &ArrayView2<f64>,
    labels: &[usize],
    opts: &ProfileOptions,
) -> Result<LayerProfile> {
    if model.n_layers() < 3 {
        return Err(Error::Config(
            "layer profile needs a model with at least three hidden layers".into(),
        ));
    }
    if labels.len() != data.nrows() {
        return Err(Error::Shape("label count does not match rows".into()));
    }
    let acts = neuralnet::forward(model, data)?;
    let mut gdv = Vec::with_capacity(4);
    let mut dropped_dims = Vec::with_capacity(4);
    let mut mds = if opts.with_mds { Some(Vec::with_capacity(4)) } else { None };
    for layer in 0..4 {
        let (clean, dropped) = drop_constant_columns(&acts[layer].view());
        if clean.ncols() == 0 {
            return Err(Error::Domain(format!(
                "layer {layer} activations are constant; clustering is undefined"
            )));
        }
        gdv.push(metrics::gdv(&clean.view(), labels)?);
        dropped_dims.push(dropped);
        if let Some(list) = mds.as_mut() {
            list.push(classical_mds_seeded(
                &acts[layer].view(),
                2,
                opts.mds_cap,
                derive_seed(opts.seed, layer as u64),
            )?);
        }
    }
    Ok(LayerProfile {
        gdv,
        dropped_dims,
        mds,
    })
}
