//! Minimal feed-forward network engine: forward pass, backpropagation, Adam.
//!
//! The graph is a fixed chain of dense layers. Batches are row-major
//! (`n_samples x dim`), weights are `output_size x input_size`. Training is
//! plain mini-batch Adam with optional validation-based early stopping; for
//! a fixed seed the whole run is bit-reproducible.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Element-wise (or row-wise, for softmax) layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
    Linear,
}

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            input_size,
            output_size,
            activation,
        }
    }
}

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    CategoricalCrossentropy,
    MeanSquaredError,
}

/// Hyperparameters for [`train`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub loss: Loss,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Fraction of the data held out for validation / early stopping.
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::CategoricalCrossentropy,
            batch_size: 128,
            max_epochs: 50,
            validation_fraction: 0.2,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// A dense multi-layer perceptron: ordered layer specs plus weights/biases.
#[derive(Debug, Clone)]
pub struct MlpModel {
    specs: Vec<LayerSpec>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpModel {
    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn n_layers(&self) -> usize {
        self.specs.len()
    }

    pub fn input_size(&self) -> usize {
        self.specs[0].input_size
    }

    pub fn output_size(&self) -> usize {
        self.specs[self.specs.len() - 1].output_size
    }

    pub fn n_parameters(&self) -> usize {
        self.specs
            .iter()
            .map(|s| s.input_size * s.output_size + s.output_size)
            .sum()
    }

    /// Rebuild a model from raw parts (used by the model container reader).
    pub fn from_parts(
        specs: Vec<LayerSpec>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        validate_specs(&specs)?;
        if weights.len() != specs.len() || biases.len() != specs.len() {
            return Err(Error::Shape("parameter count does not match specs".into()));
        }
        for (i, spec) in specs.iter().enumerate() {
            if weights[i].shape() != [spec.output_size, spec.input_size]
                || biases[i].len() != spec.output_size
            {
                return Err(Error::Shape(format!("layer {i} parameter shape mismatch")));
            }
        }
        Ok(Self {
            specs,
            weights,
            biases,
        })
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("a network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input_size == 0 || s.output_size == 0 {
            return Err(Error::Config(format!("layer {i} has a zero dimension")));
        }
        if s.activation == Activation::Softmax && i + 1 != specs.len() {
            return Err(Error::Config(format!(
                "softmax is only allowed on the final layer, found on layer {i}"
            )));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].output_size != pair[1].input_size {
            return Err(Error::Config(format!(
                "layer {} outputs {} values but layer {} expects {}",
                i,
                pair[0].output_size,
                i + 1,
                pair[1].input_size
            )));
        }
    }
    Ok(())
}

/// Initialize a model with He-style uniform weights and zero biases.
///
/// Weights are drawn from `U(-sqrt(6/input_size), +sqrt(6/input_size))`;
/// the draw order is fixed, so a seed pins every parameter.
pub fn init_model(specs: &[LayerSpec], seed: u64) -> Result<MlpModel> {
    validate_specs(specs)?;
    let mut rng = rng_from_seed(seed);
    let mut weights = Vec::with_capacity(specs.len());
    let mut biases = Vec::with_capacity(specs.len());
    for spec in specs {
        let bound = (6.0 / spec.input_size as f64).sqrt();
        let w = Array2::from_shape_simple_fn((spec.output_size, spec.input_size), || {
            rng.gen_range(-bound..bound)
        });
        weights.push(w);
        biases.push(Array1::zeros(spec.output_size));
    }
    Ok(MlpModel {
        specs: specs.to_vec(),
        weights,
        biases,
    })
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Run the network on a batch; returns one activation matrix per layer,
/// with the input batch included as the first entry.
pub fn forward(model: &MlpModel, batch: &ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
    if batch.ncols() != model.input_size() {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.ncols(),
            model.input_size()
        )));
    }
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(model.n_layers() + 1);
    acts.push(batch.to_owned());
    for (k, spec) in model.specs.iter().enumerate() {
        let mut z = acts[k].dot(&model.weights[k].t());
        z += &model.biases[k];
        match spec.activation {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Linear => {}
            Activation::Softmax => softmax_rows(&mut z),
        }
        acts.push(z);
    }
    Ok(acts)
}

/// Per-parameter gradients, same shapes as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Loss value for a prediction batch. Mean over samples; crossentropy sums
/// `-t ln p` over classes, squared error sums over output components.
pub fn loss_value(loss: Loss, predictions: &ArrayView2<f64>, targets: &ArrayView2<f64>) -> f64 {
    let n = predictions.nrows().max(1) as f64;
    match loss {
        Loss::CategoricalCrossentropy => {
            let mut acc = 0.0;
            for (p, t) in predictions.iter().zip(targets.iter()) {
                if *t != 0.0 {
                    acc -= t * p.max(1e-300).ln();
                }
            }
            acc / n
        }
        Loss::MeanSquaredError => {
            let mut acc = 0.0;
            for (p, t) in predictions.iter().zip(targets.iter()) {
                let d = p - t;
                acc += d * d;
            }
            acc / n
        }
    }
}

/// Backpropagate `loss` through the model for one batch.
///
/// For the softmax + crossentropy pairing the output delta is computed at
/// the logit level as `(prediction - target) / n`.
pub fn backward(
    model: &MlpModel,
    batch: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
    loss: Loss,
) -> Result<Gradients> {
    if batch.iter().any(|v| !v.is_finite()) || targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("backward: non-finite values in inputs".into()));
    }
    if targets.nrows() != batch.nrows() || targets.ncols() != model.output_size() {
        return Err(Error::Shape(format!(
            "targets are {}x{}, expected {}x{}",
            targets.nrows(),
            targets.ncols(),
            batch.nrows(),
            model.output_size()
        )));
    }
    let acts = forward(model, batch)?;
    let n = batch.nrows() as f64;
    let last = model.n_layers() - 1;
    let out_act = model.specs[last].activation;
    let output = &acts[last + 1];

    // Delta at the pre-activation (logit) level of the output layer.
    let mut delta: Array2<f64> = match (loss, out_act) {
        (Loss::CategoricalCrossentropy, Activation::Softmax) => (output - targets) / n,
        (Loss::CategoricalCrossentropy, _) => {
            return Err(Error::Config(
                "crossentropy requires a softmax output layer".into(),
            ))
        }
        (Loss::MeanSquaredError, Activation::Linear) => (output - targets) * (2.0 / n),
        (Loss::MeanSquaredError, Activation::Relu) => {
            let mut d = (output - targets) * (2.0 / n);
            d.zip_mut_with(output, |dv, &av| {
                if av <= 0.0 {
                    *dv = 0.0;
                }
            });
            d
        }
        (Loss::MeanSquaredError, Activation::Softmax) => {
            return Err(Error::Config(
                "mean squared error on a softmax output is not supported".into(),
            ))
        }
    };

    let mut g_weights = vec![Array2::zeros((0, 0)); model.n_layers()];
    let mut g_biases = vec![Array1::zeros(0); model.n_layers()];
    for k in (0..=last).rev() {
        g_weights[k] = delta.t().dot(&acts[k]);
        g_biases[k] = delta.sum_axis(Axis(0));
        if k > 0 {
            let mut prev = delta.dot(&model.weights[k]);
            match model.specs[k - 1].activation {
                Activation::Relu => {
                    prev.zip_mut_with(&acts[k], |dv, &av| {
                        if av <= 0.0 {
                            *dv = 0.0;
                        }
                    });
                }
                Activation::Linear => {}
                Activation::Softmax => unreachable!("softmax only on the final layer"),
            }
            delta = prev;
        }
    }
    Ok(Gradients {
        weights: g_weights,
        biases: g_biases,
    })
}

/// Adam accumulators, one slot per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            m_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            v_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update with bias-corrected moment estimates.
    pub fn apply(&mut self, model: &mut MlpModel, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for k in 0..model.n_layers() {
            adam_tensor(
                model.weights[k].as_slice_mut().expect("contiguous"),
                grads.weights[k].as_slice().expect("contiguous"),
                self.m_w[k].as_slice_mut().expect("contiguous"),
                self.v_w[k].as_slice_mut().expect("contiguous"),
                cfg,
                bc1,
                bc2,
            );
            adam_tensor(
                model.biases[k].as_slice_mut().expect("contiguous"),
                grads.biases[k].as_slice().expect("contiguous"),
                self.m_b[k].as_slice_mut().expect("contiguous"),
                self.v_b[k].as_slice_mut().expect("contiguous"),
                cfg,
                bc1,
                bc2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_tensor(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..param.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Loss record for one epoch, measured after that epoch's updates.
#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

/// Result of a training run: the selected model and the loss history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: Vec<EpochRecord>,
}

/// Train with mini-batch Adam.
///
/// When a validation share is held out, the run stops once the validation
/// loss has not improved for `patience` consecutive epochs and the model
/// with the lowest validation loss seen is returned. Without validation the
/// run always lasts `max_epochs` and returns the final model.
pub fn train(
    model: MlpModel,
    inputs: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::Input("training data is empty".into()));
    }
    if targets.nrows() != n {
        return Err(Error::Shape(format!(
            "{} input rows but {} target rows",
            n,
            targets.nrows()
        )));
    }
    if inputs.ncols() != model.input_size() || targets.ncols() != model.output_size() {
        return Err(Error::Shape(format!(
            "data is {}->{}, model is {}->{}",
            inputs.ncols(),
            targets.ncols(),
            model.input_size(),
            model.output_size()
        )));
    }

    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0));
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let n_val = (n as f64 * cfg.validation_fraction).round() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    if train_idx.is_empty() {
        return Err(Error::Input(
            "validation split leaves no training samples".into(),
        ));
    }
    let take = |idx: &[usize], m: &ArrayView2<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((idx.len(), m.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&m.row(i));
        }
        out
    };
    let train_x = take(train_idx, inputs);
    let train_y = take(train_idx, targets);
    let val_x = take(val_idx, inputs);
    let val_y = take(val_idx, targets);
    let has_val = n_val > 0;

    let mut model = model;
    let mut adam = AdamState::new(&model);
    let mut history = Vec::new();
    let mut best: Option<(f64, MlpModel)> = None;
    let mut epochs_since_best = 0usize;
    let mut batch_order: Vec<usize> = (0..train_x.nrows()).collect();

    for _epoch in 0..cfg.max_epochs {
        batch_order.shuffle(&mut rng);
        for chunk in batch_order.chunks(cfg.batch_size) {
            let bx = take(chunk, &train_x.view());
            let by = take(chunk, &train_y.view());
            let grads = backward(&model, &bx.view(), &by.view(), cfg.loss)?;
            adam.apply(&mut model, &grads, cfg);
        }
        let train_pred = forward(&model, &train_x.view())?;
        let train_loss = loss_value(
            cfg.loss,
            &train_pred[model.n_layers()].view(),
            &train_y.view(),
        );
        let val_loss = if has_val {
            let val_pred = forward(&model, &val_x.view())?;
            Some(loss_value(
                cfg.loss,
                &val_pred[model.n_layers()].view(),
                &val_y.view(),
            ))
        } else {
            None
        };
        history.push(EpochRecord {
            train_loss,
            val_loss,
        });
        if let Some(vl) = val_loss {
            let improved = best.as_ref().map_or(true, |(b, _)| vl < *b);
            if improved {
                best = Some((vl, model.clone()));
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= cfg.patience {
                    break;
                }
            }
        }
    }

    let model = match best {
        Some((_, m)) => m,
        None => model,
    };
    Ok(TrainOutcome { model, history })
}

/// Argmax class per row of the network output.
pub fn predict_classes(model: &MlpModel, batch: &ArrayView2<f64>) -> Result<Vec<usize>> {
    let acts = forward(model, batch)?;
    let out = &acts[model.n_layers()];
    Ok(out
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            best
        })
        .collect())
}
