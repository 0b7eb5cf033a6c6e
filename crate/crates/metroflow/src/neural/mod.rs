//! From-scratch recurrent forecasting models.
//!
//! A [`RecurrentModel`] stacks GRU or LSTM layers over a scalar window and
//! maps the final hidden state through a dense head to one predicted value.
//! Training ([`train::train`]) runs mini-batch gradient descent with Adam on
//! a mean-absolute-error loss, backpropagating through time; gradients are
//! verified against finite differences by [`train::gradient_check`].
//!
//! All randomness (weight init, shuffling, dropout masks) flows from
//! explicit seeds through a counter-based generator, so identical seeds give
//! bit-identical models on one platform.

pub mod cells;
pub mod dataset;
pub mod mat;
pub mod train;

pub use cells::{gru_cell_step, lstm_cell_step, CellKind, GateParams, LayerParams};
pub use dataset::{MinMaxScaler, WindowedDataset};
pub use mat::Mat;
pub use train::{
    adam_update, gradient_check, train, AdamConfig, AdamOptimizer, AdamSlot, TrainingConfig,
};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use cells::{layer_backward, layer_forward, LayerCache, LayerGrads};

/// Activation of the dense head. Gates always keep their sigmoid/tanh
/// nonlinearities; the head is where a rectifier can be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeadActivation {
    #[default]
    Identity,
    Relu,
}

impl HeadActivation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            HeadActivation::Identity => x,
            HeadActivation::Relu => x.max(0.0),
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            HeadActivation::Identity => 1.0,
            HeadActivation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub cell: CellKind,
    /// Hidden width of each stacked recurrent layer.
    pub layer_sizes: Vec<usize>,
    /// Features per timestep (scalar series ⇒ 1).
    pub input_dim: usize,
    pub head_activation: HeadActivation,
    /// Dropout rate applied between consecutive recurrent layers during
    /// training (inverted dropout; inference applies none).
    pub dropout: f64,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            cell: CellKind::Gru,
            layer_sizes: vec![128, 256],
            input_dim: 1,
            head_activation: HeadActivation::Identity,
            dropout: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() || self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Parameter(
                "layer_sizes must be a non-empty list of positive widths".into(),
            ));
        }
        if self.input_dim == 0 {
            return Err(Error::Parameter("input_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!(
                "dropout {} must lie in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub weight: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentModel {
    pub config: ModelConfig,
    pub layers: Vec<LayerParams>,
    pub head: HeadParams,
}

impl RecurrentModel {
    /// Seeded initialization: every weight matrix is drawn uniformly from
    /// ±sqrt(6 / (fan_in + fan_out)); biases start at zero. Draw order is
    /// fixed (layers bottom-up, gates in canonical order, weights row-major,
    /// head last), so a seed pins every parameter.
    pub fn new(config: ModelConfig) -> Result<RecurrentModel> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::with_capacity(config.layer_sizes.len());
        let mut in_dim = config.input_dim;
        for &hidden in &config.layer_sizes {
            let mut layer = LayerParams::zeros(config.cell, in_dim, hidden);
            for gate in &mut layer.gates {
                let limit = (6.0 / (gate.weight.rows + gate.weight.cols) as f64).sqrt();
                let dist = Uniform::new(-limit, limit);
                for w in &mut gate.weight.data {
                    *w = dist.sample(&mut rng);
                }
            }
            layers.push(layer);
            in_dim = hidden;
        }
        let limit = (6.0 / (in_dim + 1) as f64).sqrt();
        let dist = Uniform::new(-limit, limit);
        let head = HeadParams {
            weight: (0..in_dim).map(|_| dist.sample(&mut rng)).collect(),
            bias: 0.0,
        };
        Ok(RecurrentModel {
            config,
            layers,
            head,
        })
    }

    /// All-zero parameters (useful for fixtures and documented base cases).
    pub fn zeroed(config: ModelConfig) -> Result<RecurrentModel> {
        config.validate()?;
        let mut layers = Vec::new();
        let mut in_dim = config.input_dim;
        for &hidden in &config.layer_sizes {
            layers.push(LayerParams::zeros(config.cell, in_dim, hidden));
            in_dim = hidden;
        }
        Ok(RecurrentModel {
            config,
            layers,
            head: HeadParams {
                weight: vec![0.0; in_dim],
                bias: 0.0,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.layers.len() != self.config.layer_sizes.len() {
            return Err(Error::Parameter("layer count does not match config".into()));
        }
        let mut in_dim = self.config.input_dim;
        for (layer, &hidden) in self.layers.iter().zip(&self.config.layer_sizes) {
            if layer.cell != self.config.cell
                || layer.input_dim != in_dim
                || layer.hidden != hidden
            {
                return Err(Error::Parameter("layer shape does not match config".into()));
            }
            layer.validate()?;
            in_dim = hidden;
        }
        if self.head.weight.len() != in_dim {
            return Err(Error::Parameter("head width does not match last layer".into()));
        }
        if self.head.weight.iter().any(|v| !v.is_finite()) || !self.head.bias.is_finite() {
            return Err(Error::Numeric("head contains a non-finite value".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.parameter_count())
            .sum::<usize>()
            + self.head.weight.len()
            + 1
    }

    /// Mutable views of every parameter tensor in canonical order
    /// (layer gates' weight then bias, then head weight, then head bias).
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            for gate in &mut layer.gates {
                out.push(gate.weight.data.as_mut_slice());
                out.push(gate.bias.as_mut_slice());
            }
        }
        out.push(self.head.weight.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.head.bias));
        out
    }

    /// Runs the stack on a batch (`inputs[t]` is batch × input_dim),
    /// optionally sampling dropout masks between layers.
    fn forward_internal(
        &self,
        inputs: &[Mat],
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardArtifacts> {
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        let mut masks: Vec<Vec<Mat>> = Vec::new();
        let mut current: Vec<Mat> = inputs.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let cache = layer_forward(layer, &current)?;
            if l < last {
                let outputs = cache.hidden_states();
                if let Some(rng) = dropout.as_deref_mut() {
                    let rate = self.config.dropout;
                    let mut layer_masks = Vec::with_capacity(outputs.len());
                    let mut dropped = Vec::with_capacity(outputs.len());
                    for h in outputs {
                        let mask = train::dropout_mask(rng, h.rows * h.cols, rate);
                        let mut out = h.clone();
                        for (v, m) in out.data.iter_mut().zip(&mask) {
                            *v *= m;
                        }
                        layer_masks.push(Mat {
                            rows: h.rows,
                            cols: h.cols,
                            data: mask,
                        });
                        dropped.push(out);
                    }
                    masks.push(layer_masks);
                    current = dropped;
                } else {
                    current = outputs.to_vec();
                }
            }
            caches.push(cache);
        }
        let head_input = caches[last].hidden_states().last().unwrap().clone();
        let mut head_pre = Vec::with_capacity(head_input.rows);
        for b in 0..head_input.rows {
            let mut acc = self.head.bias;
            for (h, w) in head_input.row(b).iter().zip(&self.head.weight) {
                acc += h * w;
            }
            head_pre.push(acc);
        }
        let predictions = head_pre
            .iter()
            .map(|&p| self.config.head_activation.apply(p))
            .collect();
        Ok(ForwardArtifacts {
            caches,
            masks,
            head_input,
            head_pre,
            predictions,
        })
    }

    /// Backpropagates the loss gradient on the predictions through the head
    /// and every layer. `d_predictions[b]` is ∂L/∂prediction_b.
    fn backward_internal(
        &self,
        artifacts: &ForwardArtifacts,
        d_predictions: &[f64],
    ) -> ModelGrads {
        let batch = d_predictions.len();
        let h_last = self.head.weight.len();
        let mut d_pre = vec![0.0; batch];
        for b in 0..batch {
            d_pre[b] = d_predictions[b]
                * self
                    .config
                    .head_activation
                    .derivative(artifacts.head_pre[b]);
        }
        let mut head_weight_grad = vec![0.0; h_last];
        let mut head_bias_grad = 0.0;
        let mut d_top_last = Mat::zeros(batch, h_last);
        for b in 0..batch {
            let hrow = artifacts.head_input.row(b);
            for j in 0..h_last {
                head_weight_grad[j] += d_pre[b] * hrow[j];
            }
            head_bias_grad += d_pre[b];
            let drow = d_top_last.row_mut(b);
            for j in 0..h_last {
                drow[j] = d_pre[b] * self.head.weight[j];
            }
        }

        let steps = artifacts.caches[0].hidden_states().len();
        let mut layer_grads: Vec<Option<LayerGrads>> = (0..self.layers.len()).map(|_| None).collect();
        // Gradient on each layer's outputs, timestep by timestep.
        let mut d_out: Vec<Mat> = (0..steps)
            .map(|t| {
                if t + 1 == steps {
                    d_top_last.clone()
                } else {
                    Mat::zeros(batch, h_last)
                }
            })
            .collect();
        for l in (0..self.layers.len()).rev() {
            let (d_in, grads) = layer_backward(&self.layers[l], &artifacts.caches[l], &d_out);
            layer_grads[l] = Some(grads);
            if l > 0 {
                d_out = d_in;
                if !artifacts.masks.is_empty() {
                    for (d, mask) in d_out.iter_mut().zip(&artifacts.masks[l - 1]) {
                        for (v, m) in d.data.iter_mut().zip(&mask.data) {
                            *v *= m;
                        }
                    }
                }
            }
        }
        ModelGrads {
            layers: layer_grads.into_iter().map(Option::unwrap).collect(),
            head_weight: head_weight_grad,
            head_bias: head_bias_grad,
        }
    }

    /// Prediction for a single window of scaled values (inference mode: no
    /// dropout). The window may be any positive length; training and
    /// evaluation use the dataset's lookback.
    pub fn forward_window(&self, window: &[f64]) -> Result<f64> {
        if window.is_empty() {
            return Err(Error::Parameter("window must not be empty".into()));
        }
        if self.config.input_dim != 1 {
            return Err(Error::Parameter(
                "scalar windows require an input dim of 1".into(),
            ));
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("window contains a non-finite value".into()));
        }
        let inputs: Vec<Mat> = window
            .iter()
            .map(|&v| Mat {
                rows: 1,
                cols: 1,
                data: vec![v],
            })
            .collect();
        Ok(self.forward_internal(&inputs, None)?.predictions[0])
    }

    /// Batched inference over many scaled windows (rows of `windows`).
    fn predict_windows(&self, windows: &[f64], count: usize, lookback: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        const CHUNK: usize = 512;
        let mut start = 0;
        while start < count {
            let rows = CHUNK.min(count - start);
            let inputs: Vec<Mat> = (0..lookback)
                .map(|t| {
                    let mut m = Mat::zeros(rows, 1);
                    for b in 0..rows {
                        m.data[b] = windows[(start + b) * lookback + t];
                    }
                    m
                })
                .collect();
            out.extend(self.forward_internal(&inputs, None)?.predictions);
            start += rows;
        }
        Ok(out)
    }

    /// Sliding single-step predictions over a series in original units:
    /// each prediction for position `t ≥ lookback` uses the true previous
    /// `lookback` values. Output length is `series.len() − lookback`.
    pub fn predict_series(
        &self,
        series: &[f64],
        lookback: usize,
        scaler: &MinMaxScaler,
    ) -> Result<Vec<f64>> {
        if lookback == 0 {
            return Err(Error::Parameter("lookback must be at least 1".into()));
        }
        if series.len() <= lookback {
            return Err(Error::InsufficientData(format!(
                "series of {} points is too short for a lookback of {}",
                series.len(),
                lookback
            )));
        }
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("series contains a non-finite value".into()));
        }
        let scaled = scaler.transform_slice(series);
        let count = scaled.len() - lookback;
        let mut windows = Vec::with_capacity(count * lookback);
        for i in 0..count {
            windows.extend_from_slice(&scaled[i..i + lookback]);
        }
        let preds = self.predict_windows(&windows, count, lookback)?;
        Ok(preds.into_iter().map(|p| scaler.inverse(p)).collect())
    }
}

/// Everything the backward pass needs from a forward pass.
pub(crate) struct ForwardArtifacts {
    caches: Vec<LayerCache>,
    masks: Vec<Vec<Mat>>,
    head_input: Mat,
    head_pre: Vec<f64>,
    pub predictions: Vec<f64>,
}

/// Parameter gradients, shaped like the model.
pub(crate) struct ModelGrads {
    layers: Vec<LayerGrads>,
    head_weight: Vec<f64>,
    head_bias: f64,
}

impl ModelGrads {
    /// Views in the same canonical order as [`RecurrentModel::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for layer in &self.layers {
            for (w, b) in &layer.gates {
                out.push(w.data.as_slice());
                out.push(b.as_slice());
            }
        }
        out.push(self.head_weight.as_slice());
        out.push(std::slice::from_ref(&self.head_bias));
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for (w, b) in &mut layer.gates {
                for v in &mut w.data {
                    *v *= factor;
                }
                for v in b {
                    *v *= factor;
                }
            }
        }
        for v in &mut self.head_weight {
            *v *= factor;
        }
        self.head_bias *= factor;
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A trained model plus everything needed to reproduce its predictions:
/// the scaler fitted on training data and the window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub model: RecurrentModel,
    pub scaler: MinMaxScaler,
    pub lookback: usize,
}

impl Checkpoint {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        ckpt.model.validate()?;
        if ckpt.lookback == 0 {
            return Err(Error::Parameter("checkpoint lookback must be positive".into()));
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(cell: CellKind, sizes: &[usize], seed: u64) -> ModelConfig {
        ModelConfig {
            cell,
            layer_sizes: sizes.to_vec(),
            dropout: 0.0,
            seed,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn zero_model_predicts_head_bias() {
        let mut model =
            RecurrentModel::zeroed(tiny_config(CellKind::Gru, &[3], 0)).unwrap();
        model.head.bias = 1.25;
        let p = model.forward_window(&[0.4, 0.9, 0.1]).unwrap();
        assert_eq!(p, 1.25);
    }

    #[test]
    fn forward_is_deterministic() {
        let model = RecurrentModel::new(tiny_config(CellKind::Lstm, &[4, 3], 7)).unwrap();
        let w = [0.2, 0.4, 0.6, 0.8];
        let a = model.forward_window(&w).unwrap();
        let b = model.forward_window(&w).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn same_seed_same_parameters_different_seed_different() {
        let a = RecurrentModel::new(tiny_config(CellKind::Gru, &[4], 11)).unwrap();
        let b = RecurrentModel::new(tiny_config(CellKind::Gru, &[4], 11)).unwrap();
        let c = RecurrentModel::new(tiny_config(CellKind::Gru, &[4], 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_fan_in_fan_out_bound() {
        let model = RecurrentModel::new(tiny_config(CellKind::Gru, &[5, 4], 3)).unwrap();
        for layer in &model.layers {
            let limit = (6.0 / (layer.hidden + layer.input_dim + layer.hidden) as f64).sqrt();
            for gate in &layer.gates {
                assert!(gate.weight.data.iter().all(|w| w.abs() < limit));
                assert!(gate.bias.iter().all(|&b| b == 0.0));
            }
        }
        assert_eq!(model.head.bias, 0.0);
    }

    #[test]
    fn stacked_forward_matches_per_step_composition() {
        // Two-layer GRU evaluated with the batched path and with explicit
        // per-step cell calls chained by hand.
        let model = RecurrentModel::new(tiny_config(CellKind::Gru, &[2, 3], 42)).unwrap();
        let window = [0.3, -0.1, 0.7, 0.2];
        let got = model.forward_window(&window).unwrap();

        let mut h1 = vec![0.0; 2];
        let mut h2 = vec![0.0; 3];
        for &x in &window {
            h1 = gru_cell_step(&model.layers[0], &[x], &h1).unwrap();
            h2 = gru_cell_step(&model.layers[1], &h1, &h2).unwrap();
        }
        let mut want = model.head.bias;
        for (h, w) in h2.iter().zip(&model.head.weight) {
            want += h * w;
        }
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn predict_series_lengths_and_units() {
        let model = RecurrentModel::new(tiny_config(CellKind::Gru, &[3], 5)).unwrap();
        let series: Vec<f64> = (0..40).map(|i| 100.0 + (i as f64 * 0.7).sin() * 30.0).collect();
        let scaler = MinMaxScaler::fit(&series[..30]).unwrap();
        let preds = model.predict_series(&series, 12, &scaler).unwrap();
        assert_eq!(preds.len(), 40 - 12);
        // Inverse scaling puts predictions back onto the data's scale.
        assert!(preds.iter().all(|p| p.abs() < 1000.0));
        assert!(model.predict_series(&series[..12], 12, &scaler).is_err());
        assert!(model.predict_series(&series[..13], 12, &scaler).is_ok());
    }

    #[test]
    fn batched_prediction_equals_one_by_one() {
        let model = RecurrentModel::new(tiny_config(CellKind::Lstm, &[4], 9)).unwrap();
        let series: Vec<f64> = (0..30).map(|i| (i as f64 * 0.31).cos()).collect();
        let scaler = MinMaxScaler::fit(&series).unwrap();
        let batch = model.predict_series(&series, 6, &scaler).unwrap();
        let scaled = scaler.transform_slice(&series);
        for (i, b) in batch.iter().enumerate() {
            let single = model.forward_window(&scaled[i..i + 6]).unwrap();
            assert_eq!(b.to_bits(), scaler.inverse(single).to_bits());
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let model = RecurrentModel::new(tiny_config(CellKind::Gru, &[3, 2], 21)).unwrap();
        let scaler = MinMaxScaler {
            min: 4.0,
            range: 10.0,
        };
        let ckpt = Checkpoint {
            model,
            scaler,
            lookback: 12,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt, back);
        let w: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        let a = ckpt.model.forward_window(&w).unwrap();
        let b = back.model.forward_window(&w).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(RecurrentModel::new(tiny_config(CellKind::Gru, &[], 0)).is_err());
        assert!(RecurrentModel::new(ModelConfig {
            dropout: 1.0,
            ..ModelConfig::default()
        })
        .is_err());
        assert!(RecurrentModel::new(ModelConfig {
            input_dim: 0,
            ..ModelConfig::default()
        })
        .is_err());
    }

    #[test]
    fn nonfinite_window_is_rejected() {
        let model = RecurrentModel::new(tiny_config(CellKind::Gru, &[3], 5)).unwrap();
        assert!(model.forward_window(&[0.1, f64::NAN]).is_err());
        assert!(model.forward_window(&[]).is_err());
    }
}
