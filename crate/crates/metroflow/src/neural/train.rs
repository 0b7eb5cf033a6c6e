//! Training: mini-batch mean-absolute-error descent with Adam, seeded
//! shuffling and dropout, and a finite-difference gradient checker.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::WindowedDataset;
use super::mat::Mat;
use super::RecurrentModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSlot {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamSlot {
    pub fn zeros(len: usize) -> AdamSlot {
        AdamSlot {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update on a tensor: moments decay toward the gradient, then the
/// parameter moves by `lr · m̂ / (sqrt(v̂) + ε)` with explicit bias
/// correction `m̂ = m / (1 − β1ᵗ)`, `v̂ = v / (1 − β2ᵗ)`. `t` counts steps
/// starting at 1.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    slot: &mut AdamSlot,
    t: u64,
    cfg: &AdamConfig,
) {
    assert_eq!(params.len(), grads.len(), "parameter and gradient shapes differ");
    assert_eq!(params.len(), slot.m.len(), "moment shapes differ");
    assert!(t >= 1, "step index starts at 1");
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g;
        slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = slot.m[i] / bc1;
        let v_hat = slot.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Adam over an ordered collection of tensors sharing one step counter.
#[derive(Debug, Clone)]
pub struct AdamOptimizer {
    pub cfg: AdamConfig,
    t: u64,
    slots: Vec<AdamSlot>,
}

impl AdamOptimizer {
    pub fn new(cfg: AdamConfig, tensor_sizes: &[usize]) -> AdamOptimizer {
        AdamOptimizer {
            cfg,
            t: 0,
            slots: tensor_sizes.iter().map(|&n| AdamSlot::zeros(n)).collect(),
        }
    }

    pub fn step(&mut self, mut params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        assert_eq!(params.len(), self.slots.len(), "tensor count changed");
        assert_eq!(grads.len(), self.slots.len());
        self.t += 1;
        for ((p, g), slot) in params.iter_mut().zip(grads).zip(&mut self.slots) {
            adam_update(p, g, slot, self.t, &self.cfg);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seed for per-epoch shuffling; dropout masks use the same seed on a
    /// separate generator stream, so both are pinned by one number.
    pub shuffle_seed: u64,
    /// Optional global-norm gradient clipping (off by default).
    pub clip_norm: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle_seed: 0,
            clip_norm: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Parameter("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Inverted-dropout mask: each element is 0 with probability `rate`, else
/// `1 / (1 − rate)`, so the expected activation is unchanged and inference
/// needs no rescaling.
pub fn dropout_mask(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < keep {
                scale
            } else {
                0.0
            }
        })
        .collect()
}

/// Mean absolute error over a batch.
pub fn mae_loss(predictions: &[f64], targets: &[f64]) -> f64 {
    debug_assert_eq!(predictions.len(), targets.len());
    let n = predictions.len() as f64;
    predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y).abs())
        .sum::<f64>()
        / n
}

/// Subgradient of the batch MAE with respect to each prediction: the error
/// sign divided by the batch size, and 0 exactly at the kink.
fn mae_gradient(predictions: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = predictions.len() as f64;
    predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| {
            let e = p - y;
            if e > 0.0 {
                1.0 / n
            } else if e < 0.0 {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect()
}

fn batch_inputs(data: &WindowedDataset, indices: &[usize]) -> (Vec<Mat>, Vec<f64>) {
    let lookback = data.lookback;
    let rows = indices.len();
    let mut inputs: Vec<Mat> = (0..lookback).map(|_| Mat::zeros(rows, 1)).collect();
    let mut targets = Vec::with_capacity(rows);
    for (b, &i) in indices.iter().enumerate() {
        let w = data.window(i);
        for (t, input) in inputs.iter_mut().enumerate() {
            input.data[b] = w[t];
        }
        targets.push(data.target(i));
    }
    (inputs, targets)
}

/// Trains the model in place and returns the per-epoch mean training loss.
///
/// Each epoch shuffles the windows with the seeded generator and walks them
/// in mini-batches; dropout masks are sampled from a second stream of the
/// same seed so the whole run is reproducible. A non-finite loss aborts
/// immediately, naming the epoch and batch.
pub fn train(
    model: &mut RecurrentModel,
    data: &WindowedDataset,
    cfg: &TrainingConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("training dataset is empty".into()));
    }
    if model.config.input_dim != 1 {
        return Err(Error::Parameter(
            "windowed training data is scalar; model input_dim must be 1".into(),
        ));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    dropout_rng.set_stream(1);
    let use_dropout = model.config.dropout > 0.0 && model.config.layer_sizes.len() > 1;

    let tensor_sizes: Vec<usize> = model.tensors_mut().iter().map(|t| t.len()).collect();
    let mut optimizer = AdamOptimizer::new(cfg.adam(), &tensor_sizes);

    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut abs_error_sum = 0.0;
        for (batch_no, chunk) in indices.chunks(cfg.batch_size).enumerate() {
            let (inputs, targets) = batch_inputs(data, chunk);
            let dropout = if use_dropout {
                Some(&mut dropout_rng)
            } else {
                None
            };
            let pass = model.forward_internal(&inputs, dropout)?;
            let loss = mae_loss(&pass.predictions, &targets);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss in epoch {epoch}, batch {batch_no}"
                )));
            }
            abs_error_sum += loss * targets.len() as f64;

            let d_pred = mae_gradient(&pass.predictions, &targets);
            let mut grads = model.backward_internal(&pass, &d_pred);
            if let Some(limit) = cfg.clip_norm {
                let norm = grads.global_norm();
                if norm > limit {
                    grads.scale(limit / norm);
                }
            }
            optimizer.step(model.tensors_mut(), &grads.tensors());
        }
        for tensor in model.tensors_mut() {
            if tensor.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "parameters became non-finite after epoch {epoch}"
                )));
            }
        }
        trace.push(abs_error_sum / data.len() as f64);
    }
    Ok(trace)
}

fn batch_loss(model: &RecurrentModel, inputs: &[Mat], targets: &[f64]) -> Result<f64> {
    let pass = model.forward_internal(inputs, None)?;
    Ok(mae_loss(&pass.predictions, targets))
}

/// Compares analytic BPTT gradients against central finite differences
/// (step 1e-5) on the given dataset treated as one batch, with dropout
/// disabled. Returns the maximum over parameters of
/// `|analytic − numeric| / max(1e-8, |analytic| + |numeric|)`.
///
/// Restricted to small models (≤ 500 parameters): the numeric side costs
/// two full forward passes per parameter.
pub fn gradient_check(model: &mut RecurrentModel, data: &WindowedDataset) -> Result<f64> {
    model.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("gradient check needs data".into()));
    }
    let n_params = model.parameter_count();
    if n_params > 500 {
        return Err(Error::Parameter(format!(
            "gradient check is limited to 500 parameters, model has {n_params}"
        )));
    }
    let indices: Vec<usize> = (0..data.len()).collect();
    let (inputs, targets) = batch_inputs(data, &indices);

    let pass = model.forward_internal(&inputs, None)?;
    let d_pred = mae_gradient(&pass.predictions, &targets);
    let grads = model.backward_internal(&pass, &d_pred);
    let analytic: Vec<f64> = grads
        .tensors()
        .iter()
        .flat_map(|t| t.iter().copied())
        .collect();

    const STEP: f64 = 1e-5;
    let mut max_dev: f64 = 0.0;
    let mut flat_index = 0;
    let tensor_count = model.tensors_mut().len();
    for tensor_idx in 0..tensor_count {
        let tensor_len = model.tensors_mut()[tensor_idx].len();
        for i in 0..tensor_len {
            let original = model.tensors_mut()[tensor_idx][i];
            model.tensors_mut()[tensor_idx][i] = original + STEP;
            let loss_plus = batch_loss(model, &inputs, &targets)?;
            model.tensors_mut()[tensor_idx][i] = original - STEP;
            let loss_minus = batch_loss(model, &inputs, &targets)?;
            model.tensors_mut()[tensor_idx][i] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * STEP);
            let a = analytic[flat_index];
            let dev = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            max_dev = max_dev.max(dev);
            flat_index += 1;
        }
    }
    Ok(max_dev)
}
