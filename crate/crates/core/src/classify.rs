//! The three classifier families and the random-dimensionality-expansion
//! wrapper, under a uniform fit/predict/evaluate contract.
//!
//! All likelihood products are computed in log space; per-class log
//! densities are floored at -745 (the smallest exponent `exp` survives)
//! before normalization, so points far outside every class's support fall
//! back to a uniform posterior instead of 0/0.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::limit::{ConfusionMatrix, GaussianClassDensity};
use crate::neuralnet::{self, Activation, LayerSpec, MlpModel, TrainConfig};
use crate::rng::{derive_seed, rng_from_seed};

/// Log-density floor: `exp(-745)` is the smallest positive density kept.
pub const LOG_DENSITY_FLOOR: f64 = -745.0;

/// Class priors used by the Bayesian models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    /// Flat priors `1/K`.
    #[default]
    Flat,
    /// Priors proportional to training class counts.
    Empirical,
}

fn log_priors(counts: &[usize], mode: PriorMode) -> Vec<f64> {
    let k = counts.len();
    match mode {
        PriorMode::Flat => vec![-(k as f64).ln(); k],
        PriorMode::Empirical => {
            let total: usize = counts.iter().sum();
            counts
                .iter()
                .map(|&c| (c as f64 / total as f64).max(f64::MIN_POSITIVE).ln())
                .collect()
        }
    }
}

fn normalize_log_posterior(mut logs: Vec<f64>) -> Array1<f64> {
    let k = logs.len();
    for l in logs.iter_mut() {
        *l = l.max(LOG_DENSITY_FLOOR);
    }
    let max = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return Array1::from_elem(k, 1.0 / k as f64);
    }
    let mut out = Array1::zeros(k);
    let mut sum = 0.0;
    for (i, &l) in logs.iter().enumerate() {
        let v = (l - max).exp();
        out[i] = v;
        sum += v;
    }
    out / sum
}

fn argmax_lowest_tie(values: &Array1<f64>) -> usize {
    let mut best = 0;
    let mut best_v = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

fn check_point(u: &ArrayView1<f64>, dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(Error::Shape(format!(
            "point has {} components, model expects {dim}",
            u.len()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("posterior: non-finite input".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Naive Bayes with per-feature Gaussian kernel density estimates
// ---------------------------------------------------------------------------

/// Univariate Gaussian KDE over the retained training samples.
#[derive(Debug, Clone)]
pub struct Kde1d {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl Kde1d {
    /// Fit with the Scott bandwidth `sigma * n^(-1/5)` (population standard
    /// deviation). Zero-variance samples get a floor bandwidth of
    /// `1e-6 * (1 + |mean|)`.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Fit("KDE needs at least one sample".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("KDE: non-finite training values".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sigma = var.sqrt();
        let mut bandwidth = sigma * n.powf(-0.2);
        let floor = 1e-6 * (1.0 + mean.abs());
        if !(bandwidth > floor) {
            bandwidth = floor;
        }
        Ok(Self {
            samples: values.to_vec(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Log marginal density at `u`, floored at [`LOG_DENSITY_FLOOR`].
    pub fn log_density(&self, u: f64) -> f64 {
        let inv_h = 1.0 / self.bandwidth;
        let mut max = f64::NEG_INFINITY;
        for &x in &self.samples {
            let z = (u - x) * inv_h;
            let e = -0.5 * z * z;
            if e > max {
                max = e;
            }
        }
        if !max.is_finite() {
            return LOG_DENSITY_FLOOR;
        }
        let mut sum = 0.0;
        for &x in &self.samples {
            let z = (u - x) * inv_h;
            sum += (-0.5 * z * z - max).exp();
        }
        let log_norm =
            (self.samples.len() as f64 * self.bandwidth * (2.0 * std::f64::consts::PI).sqrt())
                .ln();
        (max + sum.ln() - log_norm).max(LOG_DENSITY_FLOOR)
    }
}

/// Naive Bayes: one KDE per (class, feature), flat priors by default.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    /// `kdes[class][feature]`
    kdes: Vec<Vec<Kde1d>>,
    log_priors: Vec<f64>,
}

impl NaiveBayesModel {
    pub fn n_classes(&self) -> usize {
        self.kdes.len()
    }

    pub fn dim(&self) -> usize {
        self.kdes[0].len()
    }

    pub fn kde(&self, class: usize, feature: usize) -> &Kde1d {
        &self.kdes[class][feature]
    }

    /// Posterior over classes: product of marginal KDE densities (in log
    /// space) with the model priors, normalized.
    pub fn posterior(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_point(&u, self.dim())?;
        let logs: Vec<f64> = self
            .kdes
            .iter()
            .zip(&self.log_priors)
            .map(|(feats, prior)| {
                prior
                    + feats
                        .iter()
                        .zip(u.iter())
                        .map(|(kde, &x)| kde.log_density(x))
                        .sum::<f64>()
            })
            .collect();
        Ok(normalize_log_posterior(logs))
    }
}

fn per_class_feature_columns(train: &LabeledDataset) -> Result<Vec<Vec<Vec<f64>>>> {
    let k = train.n_classes();
    if train.is_empty() {
        return Err(Error::Input("training data is empty".into()));
    }
    if k < 2 {
        return Err(Error::Fit(format!(
            "training data exposes {k} classes, need at least 2"
        )));
    }
    let d = train.dim();
    let mut columns = vec![vec![Vec::new(); d]; k];
    for (row, &label) in train.features.rows().into_iter().zip(&train.labels) {
        for (f, &v) in row.iter().enumerate() {
            columns[label][f].push(v);
        }
    }
    if let Some(missing) = columns.iter().position(|c| c[0].is_empty()) {
        return Err(Error::Fit(format!("class {missing} has no training samples")));
    }
    Ok(columns)
}

/// Fit the naive Bayes model with flat priors.
pub fn fit_naive_bayes(train: &LabeledDataset) -> Result<NaiveBayesModel> {
    fit_naive_bayes_opts(train, PriorMode::Flat)
}

pub fn fit_naive_bayes_opts(train: &LabeledDataset, priors: PriorMode) -> Result<NaiveBayesModel> {
    let columns = per_class_feature_columns(train)?;
    let counts: Vec<usize> = columns.iter().map(|c| c[0].len()).collect();
    let kdes = columns
        .into_iter()
        .map(|feats| feats.iter().map(|v| Kde1d::fit(v)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(NaiveBayesModel {
        kdes,
        log_priors: log_priors(&counts, priors),
    })
}

/// Posterior of the naive Bayes model at `u`.
pub fn nb_posterior(model: &NaiveBayesModel, u: ArrayView1<f64>) -> Result<Array1<f64>> {
    model.posterior(u)
}

// ---------------------------------------------------------------------------
// Correlated multivariate-Gaussian Bayes
// ---------------------------------------------------------------------------

/// Per-class multivariate Gaussian likelihoods with full covariances.
#[derive(Debug, Clone)]
pub struct CmvgModel {
    classes: Vec<GaussianClassDensity>,
    log_priors: Vec<f64>,
    /// Set when any class covariance needed a ridge before inversion.
    pub ridged: bool,
}

impl CmvgModel {
    /// Build directly from per-class parameters (flat priors).
    pub fn from_params(params: Vec<(Array1<f64>, Array2<f64>)>) -> Result<Self> {
        if params.len() < 2 {
            return Err(Error::Fit("CMVG needs at least 2 classes".into()));
        }
        let k = params.len();
        let mut classes = Vec::with_capacity(k);
        let mut ridged = false;
        for (mu, sigma) in params {
            let density = GaussianClassDensity::new(mu, sigma)?;
            ridged |= density.ridged;
            classes.push(density);
        }
        Ok(Self {
            classes,
            log_priors: vec![-(k as f64).ln(); k],
            ridged,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    pub fn class_density(&self, class: usize) -> &GaussianClassDensity {
        &self.classes[class]
    }

    pub fn posterior(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_point(&u, self.dim())?;
        let logs: Vec<f64> = self
            .classes
            .iter()
            .zip(&self.log_priors)
            .map(|(c, prior)| prior + c.log_pdf(u))
            .collect();
        Ok(normalize_log_posterior(logs))
    }
}

/// Fit per-class sample means and sample covariances (flat priors).
///
/// A class covariance whose smallest eigenvalue falls below `1e-10` gets a
/// ridge of `1e-6 * mean(diagonal)` before inversion.
pub fn fit_cmvg(train: &LabeledDataset) -> Result<CmvgModel> {
    fit_cmvg_opts(train, PriorMode::Flat)
}

pub fn fit_cmvg_opts(train: &LabeledDataset, priors: PriorMode) -> Result<CmvgModel> {
    let columns = per_class_feature_columns(train)?;
    let d = train.dim();
    let k = columns.len();
    let counts: Vec<usize> = columns.iter().map(|c| c[0].len()).collect();
    let mut classes = Vec::with_capacity(k);
    let mut ridged = false;
    for (class, feats) in columns.iter().enumerate() {
        let n = feats[0].len();
        if n < 2 {
            return Err(Error::Fit(format!(
                "class {class} has {n} samples; covariance needs at least 2"
            )));
        }
        let mut mu = Array1::zeros(d);
        for (f, values) in feats.iter().enumerate() {
            mu[f] = values.iter().sum::<f64>() / n as f64;
        }
        let mut sigma = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for s in 0..n {
                    acc += (feats[i][s] - mu[i]) * (feats[j][s] - mu[j]);
                }
                let v = acc / (n as f64 - 1.0);
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
        let eig = crate::linalg::symmetric_eigen(&sigma.view())?;
        if eig.values.iter().any(|&v| v < 1e-10) {
            let mean_diag = (0..d).map(|i| sigma[(i, i)]).sum::<f64>() / d as f64;
            let eps = 1e-6 * mean_diag.max(f64::MIN_POSITIVE);
            for i in 0..d {
                sigma[(i, i)] += eps;
            }
            ridged = true;
        }
        let density = GaussianClassDensity::new(mu, sigma)?;
        ridged |= density.ridged;
        classes.push(density);
    }
    Ok(CmvgModel {
        classes,
        log_priors: log_priors(&counts, priors),
        ridged,
    })
}

/// Posterior of the CMVG model at `u`.
pub fn cmvg_posterior(model: &CmvgModel, u: ArrayView1<f64>) -> Result<Array1<f64>> {
    model.posterior(u)
}

// ---------------------------------------------------------------------------
// Perceptron
// ---------------------------------------------------------------------------

/// Default hidden-layer width of the perceptron classifier.
pub const DEFAULT_HIDDEN_SIZE: usize = 100;

/// Configuration for [`fit_perceptron`].
#[derive(Debug, Clone)]
pub struct PerceptronConfig {
    pub hidden_size: usize,
    pub train: TrainConfig,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        Self {
            hidden_size: DEFAULT_HIDDEN_SIZE,
            train: TrainConfig::default(),
        }
    }
}

impl PerceptronConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            ..Self::default()
        }
    }
}

/// A one-hidden-layer softmax network wrapped as a classifier.
#[derive(Debug, Clone)]
pub struct PerceptronClassifier {
    pub model: MlpModel,
    n_classes: usize,
}

impl PerceptronClassifier {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.model.input_size()
    }

    pub fn posterior(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_point(&u, self.dim())?;
        let batch = u.insert_axis(ndarray::Axis(0));
        let acts = neuralnet::forward(&self.model, &batch)?;
        Ok(acts[self.model.n_layers()].row(0).to_owned())
    }
}

/// Train the perceptron (`D -> hidden relu -> K softmax`) on one-hot
/// targets with categorical crossentropy.
pub fn fit_perceptron(train: &LabeledDataset, cfg: &PerceptronConfig) -> Result<PerceptronClassifier> {
    if train.is_empty() {
        return Err(Error::Input("training data is empty".into()));
    }
    let k = train.n_classes();
    if k < 2 {
        return Err(Error::Fit(format!(
            "training data exposes {k} classes, need at least 2"
        )));
    }
    let specs = vec![
        LayerSpec::new(train.dim(), cfg.hidden_size, Activation::Relu),
        LayerSpec::new(cfg.hidden_size, k, Activation::Softmax),
    ];
    let model = neuralnet::init_model(&specs, derive_seed(cfg.train.seed, 0x1717))?;
    let targets = train.one_hot_targets(k)?;
    let outcome = neuralnet::train(model, &train.features.view(), &targets.view(), &cfg.train)?;
    Ok(PerceptronClassifier {
        model: outcome.model,
        n_classes: k,
    })
}

// ---------------------------------------------------------------------------
// Unified classifier surface
// ---------------------------------------------------------------------------

/// Which classifier family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    NaiveBayes,
    Cmvg,
    Perceptron,
}

impl ClassifierKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::Cmvg => "cmvg",
            ClassifierKind::Perceptron => "perceptron",
        }
    }
}

/// A fitted classifier of any family.
#[derive(Debug, Clone)]
pub enum TrainedClassifier {
    NaiveBayes(NaiveBayesModel),
    Cmvg(CmvgModel),
    Perceptron(PerceptronClassifier),
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            TrainedClassifier::Cmvg(_) => ClassifierKind::Cmvg,
            TrainedClassifier::Perceptron(_) => ClassifierKind::Perceptron,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedClassifier::NaiveBayes(m) => m.dim(),
            TrainedClassifier::Cmvg(m) => m.dim(),
            TrainedClassifier::Perceptron(m) => m.dim(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedClassifier::NaiveBayes(m) => m.n_classes(),
            TrainedClassifier::Cmvg(m) => m.n_classes(),
            TrainedClassifier::Perceptron(m) => m.n_classes(),
        }
    }

    pub fn posterior(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        match self {
            TrainedClassifier::NaiveBayes(m) => m.posterior(u),
            TrainedClassifier::Cmvg(m) => m.posterior(u),
            TrainedClassifier::Perceptron(m) => m.posterior(u),
        }
    }

    pub fn predict(&self, u: ArrayView1<f64>) -> Result<usize> {
        Ok(argmax_lowest_tie(&self.posterior(u)?))
    }

    /// Predict every row; Bayesian models evaluate rows in parallel, the
    /// perceptron uses one batched forward pass.
    pub fn predict_batch(&self, features: &Array2<f64>) -> Result<Vec<usize>> {
        match self {
            TrainedClassifier::Perceptron(m) => {
                if features.ncols() != m.dim() {
                    return Err(Error::Shape(format!(
                        "batch has {} columns, model expects {}",
                        features.ncols(),
                        m.dim()
                    )));
                }
                neuralnet::predict_classes(&m.model, &features.view())
            }
            _ => {
                let rows: Vec<usize> = (0..features.nrows())
                    .into_par_iter()
                    .map(|i| self.predict(features.row(i)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(rows)
            }
        }
    }
}

/// Fit the chosen classifier family on the training set.
pub fn fit_classifier(
    kind: ClassifierKind,
    train: &LabeledDataset,
    perceptron_cfg: &PerceptronConfig,
) -> Result<TrainedClassifier> {
    Ok(match kind {
        ClassifierKind::NaiveBayes => TrainedClassifier::NaiveBayes(fit_naive_bayes(train)?),
        ClassifierKind::Cmvg => TrainedClassifier::Cmvg(fit_cmvg(train)?),
        ClassifierKind::Perceptron => {
            TrainedClassifier::Perceptron(fit_perceptron(train, perceptron_cfg)?)
        }
    })
}

/// Accuracy plus the empirical confusion matrix on a test set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub n_test: usize,
}

/// Evaluate a fitted classifier: fraction of correct predictions, and the
/// per-true-class assignment fractions.
pub fn evaluate(model: &TrainedClassifier, test: &LabeledDataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Input("test set is empty".into()));
    }
    let predictions = model.predict_batch(&test.features)?;
    let k = model.n_classes().max(test.n_classes());
    let mut counts = Array2::<u64>::zeros((k, k));
    let mut correct = 0usize;
    for (&pred, &truth) in predictions.iter().zip(&test.labels) {
        counts[(pred, truth)] += 1;
        if pred == truth {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / test.len() as f64,
        confusion: ConfusionMatrix::from_counts(&counts)?,
        n_test: test.len(),
    })
}

// ---------------------------------------------------------------------------
// Random dimensionality expansion
// ---------------------------------------------------------------------------

/// Fixed random expansion `v = M u` with standard-normal entries; the same
/// matrix is applied to training and test data.
#[derive(Debug, Clone)]
pub struct RdeWrapper {
    matrix: Array2<f64>,
}

impl RdeWrapper {
    pub fn new(input_dim: usize, expanded_dim: usize, seed: u64) -> Result<Self> {
        if expanded_dim <= input_dim {
            return Err(Error::Config(format!(
                "expanded dimension {expanded_dim} must exceed input dimension {input_dim}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let matrix = Array2::from_shape_simple_fn((expanded_dim, input_dim), || {
            rng.sample::<f64, _>(StandardNormal)
        });
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Expand every feature row; labels and split carry over.
    pub fn expand(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.dim() != self.matrix.ncols() {
            return Err(Error::Shape(format!(
                "data has {} features, expansion expects {}",
                data.dim(),
                self.matrix.ncols()
            )));
        }
        let expanded = data.features.dot(&self.matrix.t());
        let mut out = LabeledDataset::new(expanded, data.labels.clone())?;
        out.split = data.split.clone();
        Ok(out)
    }
}

/// Expand train and test with one shared random matrix, fit the inner
/// classifier on the expanded training data, and evaluate.
pub fn rde_fit_predict(
    inner: ClassifierKind,
    train: &LabeledDataset,
    test: &LabeledDataset,
    expanded_dim: usize,
    seed: u64,
    perceptron_cfg: &PerceptronConfig,
) -> Result<Evaluation> {
    let wrapper = RdeWrapper::new(train.dim(), expanded_dim, seed)?;
    let train_x = wrapper.expand(train)?;
    let test_x = wrapper.expand(test)?;
    let model = fit_classifier(inner, &train_x, perceptron_cfg)?;
    evaluate(&model, &test_x)
}

// ---------------------------------------------------------------------------
// Versioned binary model container
// ---------------------------------------------------------------------------

const CONTAINER_MAGIC: &[u8; 4] = b"ALIM";
const CONTAINER_VERSION: u16 = 1;

const MODULE_NAIVE_BAYES: u16 = 1;
const MODULE_CMVG: u16 = 2;
const MODULE_PERCEPTRON: u16 = 3;

fn write_u16<W: Write>(w: &mut W, v: u16) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64_slice<W: Write>(w: &mut W, vs: &[f64]) -> Result<()> {
    write_u64(w, vs.len() as u64)?;
    for &v in vs {
        write_f64(w, v)?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(read_exact::<R, 2>(r)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact::<R, 4>(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_f64_vec<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = read_u64(r)? as usize;
    if n > (1 << 32) {
        return Err(Error::Format(format!("implausible vector length {n}")));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

/// Serialize a fitted classifier into the `ALIM` container.
pub fn save_classifier<W: Write>(model: &TrainedClassifier, w: &mut W) -> Result<()> {
    w.write_all(CONTAINER_MAGIC)?;
    write_u16(w, CONTAINER_VERSION)?;
    match model {
        TrainedClassifier::NaiveBayes(m) => {
            write_u16(w, MODULE_NAIVE_BAYES)?;
            write_u32(w, m.n_classes() as u32)?;
            write_u32(w, m.dim() as u32)?;
            write_f64_slice(w, &m.log_priors)?;
            for feats in &m.kdes {
                for kde in feats {
                    write_f64(w, kde.bandwidth)?;
                    write_f64_slice(w, &kde.samples)?;
                }
            }
        }
        TrainedClassifier::Cmvg(m) => {
            write_u16(w, MODULE_CMVG)?;
            write_u32(w, m.n_classes() as u32)?;
            write_u32(w, m.dim() as u32)?;
            write_f64_slice(w, &m.log_priors)?;
            for class in &m.classes {
                write_f64_slice(w, class.mu.as_slice().expect("contiguous"))?;
                write_f64_slice(w, class.sigma.as_slice().expect("contiguous"))?;
            }
        }
        TrainedClassifier::Perceptron(m) => {
            write_u16(w, MODULE_PERCEPTRON)?;
            write_u32(w, m.n_classes() as u32)?;
            write_u32(w, m.model.n_layers() as u32)?;
            for spec in m.model.specs() {
                write_u32(w, spec.input_size as u32)?;
                write_u32(w, spec.output_size as u32)?;
                let act = match spec.activation {
                    Activation::Relu => 0u16,
                    Activation::Softmax => 1,
                    Activation::Linear => 2,
                };
                write_u16(w, act)?;
            }
            for (weights, biases) in m.model.weights.iter().zip(&m.model.biases) {
                write_f64_slice(w, weights.as_slice().expect("contiguous"))?;
                write_f64_slice(w, biases.as_slice().expect("contiguous"))?;
            }
        }
    }
    Ok(())
}

/// Load a classifier from the `ALIM` container.
pub fn load_classifier<R: Read>(r: &mut R) -> Result<TrainedClassifier> {
    let magic = read_exact::<R, 4>(r)?;
    if &magic != CONTAINER_MAGIC {
        return Err(Error::Format(format!(
            "bad container magic {magic:?}, expected {CONTAINER_MAGIC:?}"
        )));
    }
    let version = read_u16(r)?;
    if version != CONTAINER_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let module = read_u16(r)?;
    match module {
        MODULE_NAIVE_BAYES => {
            let k = read_u32(r)? as usize;
            let d = read_u32(r)? as usize;
            let log_priors = read_f64_vec(r)?;
            if log_priors.len() != k || k < 2 || d == 0 {
                return Err(Error::Format("inconsistent naive Bayes header".into()));
            }
            let mut kdes = Vec::with_capacity(k);
            for _ in 0..k {
                let mut feats = Vec::with_capacity(d);
                for _ in 0..d {
                    let bandwidth = read_f64(r)?;
                    let samples = read_f64_vec(r)?;
                    if !(bandwidth > 0.0) || samples.is_empty() {
                        return Err(Error::Format("corrupt KDE record".into()));
                    }
                    feats.push(Kde1d { samples, bandwidth });
                }
                kdes.push(feats);
            }
            Ok(TrainedClassifier::NaiveBayes(NaiveBayesModel {
                kdes,
                log_priors,
            }))
        }
        MODULE_CMVG => {
            let k = read_u32(r)? as usize;
            let d = read_u32(r)? as usize;
            let log_priors = read_f64_vec(r)?;
            if log_priors.len() != k || k < 2 || d == 0 {
                return Err(Error::Format("inconsistent CMVG header".into()));
            }
            let mut classes = Vec::with_capacity(k);
            let mut ridged = false;
            for _ in 0..k {
                let mu = read_f64_vec(r)?;
                let sigma = read_f64_vec(r)?;
                if mu.len() != d || sigma.len() != d * d {
                    return Err(Error::Format("corrupt CMVG record".into()));
                }
                let sigma = Array2::from_shape_vec((d, d), sigma)
                    .map_err(|e| Error::Format(format!("bad covariance layout: {e}")))?;
                let density = GaussianClassDensity::new(Array1::from(mu), sigma)?;
                ridged |= density.ridged;
                classes.push(density);
            }
            Ok(TrainedClassifier::Cmvg(CmvgModel {
                classes,
                log_priors,
                ridged,
            }))
        }
        MODULE_PERCEPTRON => {
            let k = read_u32(r)? as usize;
            let n_layers = read_u32(r)? as usize;
            if n_layers == 0 || n_layers > 64 {
                return Err(Error::Format(format!("implausible layer count {n_layers}")));
            }
            let mut specs = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let input = read_u32(r)? as usize;
                let output = read_u32(r)? as usize;
                let activation = match read_u16(r)? {
                    0 => Activation::Relu,
                    1 => Activation::Softmax,
                    2 => Activation::Linear,
                    other => {
                        return Err(Error::Format(format!("unknown activation code {other}")))
                    }
                };
                specs.push(LayerSpec::new(input, output, activation));
            }
            let mut weights = Vec::with_capacity(n_layers);
            let mut biases = Vec::with_capacity(n_layers);
            for spec in &specs {
                let w = read_f64_vec(r)?;
                let b = read_f64_vec(r)?;
                if w.len() != spec.input_size * spec.output_size || b.len() != spec.output_size {
                    return Err(Error::Format("corrupt perceptron parameters".into()));
                }
                weights.push(
                    Array2::from_shape_vec((spec.output_size, spec.input_size), w)
                        .map_err(|e| Error::Format(format!("bad weight layout: {e}")))?,
                );
                biases.push(Array1::from(b));
            }
            let model = MlpModel::from_parts(specs, weights, biases)?;
            Ok(TrainedClassifier::Perceptron(PerceptronClassifier {
                model,
                n_classes: k,
            }))
        }
        other => Err(Error::Format(format!("unknown module id {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::MixtureProblem;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> LabeledDataset {
        let d = rows[0].len();
        let n = rows.len();
        let mut features = Array2::zeros((n, d));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                features[(i, j)] = v;
            }
        }
        LabeledDataset::new(features, labels).unwrap()
    }

    #[test]
    fn scott_bandwidth_formula() {
        // population sigma exactly 1 -> h = n^(-1/5)
        let mut values = vec![-1.0; 5000];
        values.extend(vec![1.0; 5000]);
        let kde = Kde1d::fit(&values).unwrap();
        assert_abs_diff_eq!(kde.bandwidth(), 10_000f64.powf(-0.2), epsilon = 1e-12);
        assert_abs_diff_eq!(kde.bandwidth(), 0.158489, epsilon = 1e-6);
    }

    #[test]
    fn bandwidth_floor_for_degenerate_samples() {
        let kde = Kde1d::fit(&[3.0]).unwrap();
        assert_abs_diff_eq!(kde.bandwidth(), 4e-6, epsilon = 1e-18);
        assert!(kde.log_density(3.0).is_finite());
    }

    #[test]
    fn kde_integrates_to_one() {
        let values = [0.0, 0.5, -0.3, 1.2, 0.8];
        let kde = Kde1d::fit(&values).unwrap();
        let mut mass = 0.0;
        let step = 0.01;
        let mut x = -10.0;
        while x <= 10.0 {
            mass += kde.log_density(x).exp() * step;
            x += step;
        }
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn naive_bayes_stores_one_kde_per_class_and_feature() {
        let train = dataset(
            vec![
                vec![0.0, 1.0],
                vec![0.1, 1.1],
                vec![5.0, -1.0],
                vec![5.1, -1.1],
            ],
            vec![0, 0, 1, 1],
        );
        let model = fit_naive_bayes(&train).unwrap();
        assert_eq!(model.n_classes(), 2);
        assert_eq!(model.dim(), 2);
        assert_eq!(model.kde(1, 0).n_samples(), 2);
    }

    #[test]
    fn naive_bayes_rejects_missing_class() {
        let train = dataset(vec![vec![0.0], vec![1.0]], vec![0, 2]);
        assert!(matches!(fit_naive_bayes(&train), Err(Error::Fit(_))));
        let single = dataset(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        assert!(fit_naive_bayes(&single).is_err());
    }

    #[test]
    fn nb_posterior_is_symmetric_at_the_symmetry_point() {
        let train = dataset(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1, 1],
        );
        let model = fit_naive_bayes(&train).unwrap();
        let p = model.posterior(array![0.0].view()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn nb_posterior_uniform_far_outside_support() {
        let train = dataset(
            vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]],
            vec![0, 0, 1, 1],
        );
        let model = fit_naive_bayes(&train).unwrap();
        let p = model.posterior(array![1e6].view()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn nb_separable_1d_classification() {
        let mut rng = rng_from_seed(41);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            rows.push(vec![rng.sample::<f64, _>(StandardNormal) - 5.0]);
            labels.push(0);
            rows.push(vec![rng.sample::<f64, _>(StandardNormal) + 5.0]);
            labels.push(1);
        }
        let model = fit_naive_bayes(&dataset(rows, labels)).unwrap();
        let p = model.posterior(array![4.5].view()).unwrap();
        assert!(p[1] > 0.99);
    }

    #[test]
    fn cmvg_recovers_generator_parameters() {
        let problem = MixtureProblem::two_class_2d(1.0, 0.6, -0.6).unwrap();
        let mut rng = rng_from_seed(42);
        let data = problem.sample_dataset(100_000, &mut rng).unwrap();
        let model = fit_cmvg(&data).unwrap();
        for class in 0..2 {
            let est = model.class_density(class);
            let truth = &problem.classes[class];
            for i in 0..2 {
                assert_abs_diff_eq!(est.mu[i], truth.mu[i], epsilon = 0.02);
                for j in 0..2 {
                    assert_abs_diff_eq!(est.sigma[(i, j)], truth.sigma[(i, j)], epsilon = 0.02);
                }
            }
        }
        assert!(!model.ridged);
    }

    #[test]
    fn cmvg_ridges_collinear_features() {
        let train = dataset(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 2.0],
                vec![2.0, 4.0],
                vec![5.0, 10.0],
                vec![6.0, 12.0],
                vec![7.0, 14.0],
            ],
            vec![0, 0, 0, 1, 1, 1],
        );
        let model = fit_cmvg(&train).unwrap();
        assert!(model.ridged);
        let p = model.posterior(array![1.0, 2.0].view()).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cmvg_requires_two_samples_per_class() {
        let train = dataset(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1]);
        assert!(matches!(fit_cmvg(&train), Err(Error::Fit(_))));
    }

    #[test]
    fn cmvg_posterior_identical_classes_is_uniform() {
        let model = CmvgModel::from_params(vec![
            (Array1::zeros(2), Array2::eye(2)),
            (Array1::zeros(2), Array2::eye(2)),
        ])
        .unwrap();
        let p = model.posterior(array![0.3, -0.8].view()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn cmvg_posterior_prefers_own_center() {
        let model = CmvgModel::from_params(vec![
            (array![-4.0, 0.0], Array2::eye(2)),
            (array![4.0, 0.0], Array2::eye(2)),
        ])
        .unwrap();
        let p = model.posterior(array![-4.0, 0.0].view()).unwrap();
        assert!(p[0] > 0.999);
    }

    #[test]
    fn perceptron_uses_default_hidden_size() {
        let cfg = PerceptronConfig::default();
        assert_eq!(cfg.hidden_size, 100);
    }

    #[test]
    fn perceptron_separates_distant_blobs() {
        let mut rng = rng_from_seed(43);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..250 {
            rows.push(vec![
                rng.sample::<f64, _>(StandardNormal) - 10.0,
                rng.sample::<f64, _>(StandardNormal),
            ]);
            labels.push(0);
            rows.push(vec![
                rng.sample::<f64, _>(StandardNormal) + 10.0,
                rng.sample::<f64, _>(StandardNormal),
            ]);
            labels.push(1);
        }
        let mut all = dataset(rows, labels);
        all.split_random(0.8, &mut rng_from_seed(44)).unwrap();
        let train = all.train_set().unwrap();
        let test = all.test_set().unwrap();
        let cfg = PerceptronConfig {
            hidden_size: 16,
            train: TrainConfig {
                max_epochs: 15,
                seed: 7,
                ..TrainConfig::default()
            },
        };
        let model = fit_perceptron(&train, &cfg).unwrap();
        let eval = evaluate(&TrainedClassifier::Perceptron(model), &test).unwrap();
        assert!(eval.accuracy >= 0.999, "accuracy {}", eval.accuracy);
    }

    #[test]
    fn posteriors_are_normalized() {
        let mut rng = rng_from_seed(45);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            rows.push(vec![
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal) + (i % 2) as f64,
            ]);
            labels.push(i % 2);
        }
        let train = dataset(rows, labels);
        let nb = TrainedClassifier::NaiveBayes(fit_naive_bayes(&train).unwrap());
        let cm = TrainedClassifier::Cmvg(fit_cmvg(&train).unwrap());
        let pc = TrainedClassifier::Perceptron(
            fit_perceptron(
                &train,
                &PerceptronConfig {
                    hidden_size: 8,
                    train: TrainConfig {
                        max_epochs: 3,
                        seed: 1,
                        ..TrainConfig::default()
                    },
                },
            )
            .unwrap(),
        );
        for model in [&nb, &cm, &pc] {
            for _ in 0..20 {
                let u = array![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let p = model.posterior(u.view()).unwrap();
                let sum: f64 = p.iter().sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
                assert!(p.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn evaluate_counts_exact_fractions() {
        // identical-class CMVG predicts class 0 everywhere (tie rule)
        let model = TrainedClassifier::Cmvg(
            CmvgModel::from_params(vec![
                (Array1::zeros(1), Array2::eye(1)),
                (Array1::zeros(1), Array2::eye(1)),
            ])
            .unwrap(),
        );
        let test = dataset(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 0, 1]);
        let eval = evaluate(&model, &test).unwrap();
        assert_abs_diff_eq!(eval.accuracy, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(eval.confusion.probs()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval.confusion.probs()[(0, 1)], 1.0, epsilon = 1e-15);
        let empty = LabeledDataset::new(Array2::zeros((0, 1)), vec![]).unwrap();
        assert!(evaluate(&model, &empty).is_err());
    }

    #[test]
    fn rde_requires_strictly_larger_dimension() {
        assert!(matches!(
            RdeWrapper::new(5, 5, 0),
            Err(Error::Config(_))
        ));
        assert!(RdeWrapper::new(5, 6, 0).is_ok());
    }

    #[test]
    fn rde_expansion_is_shared_and_deterministic() {
        let a = RdeWrapper::new(2, 8, 5).unwrap();
        let b = RdeWrapper::new(2, 8, 5).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let data = dataset(vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1]);
        let ex = a.expand(&data).unwrap();
        assert_eq!(ex.dim(), 8);
        assert_eq!(ex.labels, data.labels);
        // v = M u for the first row
        let expected = a.matrix().dot(&data.features.row(0));
        for j in 0..8 {
            assert_abs_diff_eq!(ex.features[(0, j)], expected[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn rde_lets_naive_bayes_use_correlations() {
        // d=0 correlation-only problem: identical marginals, opposite
        // correlations, so plain naive Bayes is blind while the expansion
        // exposes class-dependent marginal variances.
        let problem = MixtureProblem::two_class_2d(0.0, 0.75, -0.75).unwrap();
        let mut rng = rng_from_seed(46);
        let mut data = problem.sample_dataset(5000, &mut rng).unwrap();
        data.split_random(0.8, &mut rng).unwrap();
        let train = data.train_set().unwrap();
        let test = data.test_set().unwrap();

        let plain = evaluate(
            &TrainedClassifier::NaiveBayes(fit_naive_bayes(&train).unwrap()),
            &test,
        )
        .unwrap();
        assert_abs_diff_eq!(plain.accuracy, 0.5, epsilon = 0.05);

        let expanded =
            rde_fit_predict(ClassifierKind::NaiveBayes, &train, &test, 20, 99, &PerceptronConfig::default())
                .unwrap();
        let cmvg = evaluate(&TrainedClassifier::Cmvg(fit_cmvg(&train).unwrap()), &test).unwrap();
        assert!(
            expanded.accuracy > plain.accuracy + 0.08,
            "RDE {} vs plain {}",
            expanded.accuracy,
            plain.accuracy
        );
        assert!(
            (expanded.accuracy - cmvg.accuracy).abs() <= 0.05,
            "RDE {} vs CMVG {}",
            expanded.accuracy,
            cmvg.accuracy
        );
    }

    #[test]
    fn naive_bayes_ignores_within_class_correlations() {
        // permuting each feature column independently within a class kills
        // correlations but keeps marginals; naive Bayes barely moves while
        // CMVG loses its discriminative signal
        use rand::seq::SliceRandom;
        let problem = MixtureProblem::two_class_2d(0.0, 0.75, -0.75).unwrap();
        let mut rng = rng_from_seed(47);
        let mut data = problem.sample_dataset(4000, &mut rng).unwrap();
        data.split_random(0.8, &mut rng).unwrap();
        let train = data.train_set().unwrap();

        let mut shuffled = train.clone();
        for class in 0..2 {
            let idx: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == class).collect();
            for f in 0..train.dim() {
                let mut perm = idx.clone();
                perm.shuffle(&mut rng);
                for (src, dst) in idx.iter().zip(&perm) {
                    shuffled.features[(*dst, f)] = train.features[(*src, f)];
                }
            }
        }

        let nb_orig = evaluate(
            &TrainedClassifier::NaiveBayes(fit_naive_bayes(&train).unwrap()),
            &train,
        )
        .unwrap();
        let nb_shuf = evaluate(
            &TrainedClassifier::NaiveBayes(fit_naive_bayes(&shuffled).unwrap()),
            &train,
        )
        .unwrap();
        assert!(
            (nb_orig.accuracy - nb_shuf.accuracy).abs() < 0.02,
            "naive Bayes moved from {} to {}",
            nb_orig.accuracy,
            nb_shuf.accuracy
        );

        let cmvg_orig = evaluate(&TrainedClassifier::Cmvg(fit_cmvg(&train).unwrap()), &train).unwrap();
        let cmvg_shuf =
            evaluate(&TrainedClassifier::Cmvg(fit_cmvg(&shuffled).unwrap()), &train).unwrap();
        assert!(
            cmvg_orig.accuracy - cmvg_shuf.accuracy > 0.05,
            "CMVG kept accuracy {} -> {}",
            cmvg_orig.accuracy,
            cmvg_shuf.accuracy
        );
    }

    #[test]
    fn container_round_trip_preserves_predictions() {
        let mut rng = rng_from_seed(48);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..80 {
            rows.push(vec![
                rng.sample::<f64, _>(StandardNormal) + (i % 2) as f64 * 2.0,
                rng.sample::<f64, _>(StandardNormal),
            ]);
            labels.push(i % 2);
        }
        let train = dataset(rows, labels);
        let models = vec![
            TrainedClassifier::NaiveBayes(fit_naive_bayes(&train).unwrap()),
            TrainedClassifier::Cmvg(fit_cmvg(&train).unwrap()),
            TrainedClassifier::Perceptron(
                fit_perceptron(
                    &train,
                    &PerceptronConfig {
                        hidden_size: 8,
                        train: TrainConfig {
                            max_epochs: 3,
                            seed: 2,
                            ..TrainConfig::default()
                        },
                    },
                )
                .unwrap(),
            ),
        ];
        for model in models {
            let mut buf = Vec::new();
            save_classifier(&model, &mut buf).unwrap();
            assert_eq!(&buf[..4], b"ALIM");
            let loaded = load_classifier(&mut &buf[..]).unwrap();
            assert_eq!(loaded.kind(), model.kind());
            for _ in 0..25 {
                let u = array![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let a = model.posterior(u.view()).unwrap();
                let b = loaded.posterior(u.view()).unwrap();
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn container_rejects_bad_magic() {
        let buf = b"NOPE\x01\x00\x01\x00";
        assert!(matches!(
            load_classifier(&mut &buf[..]),
            Err(Error::Format(_))
        ));
    }
}
