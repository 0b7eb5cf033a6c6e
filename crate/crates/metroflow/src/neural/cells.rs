//! GRU and LSTM layers: batched forward over a window and exact
//! backpropagation through time.
//!
//! Every gate stores one weight matrix of shape `(hidden + input) × hidden`
//! acting on the concatenation `[h, x]` (state first), plus a bias. Gate
//! order is fixed: GRU `[update, reset, candidate]`, LSTM
//! `[input, forget, output, candidate]`.

use serde::{Deserialize, Serialize};

use super::mat::{sigmoid, Mat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gate_count(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        })
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(Error::Parameter(format!(
                "unknown cell kind '{other}', expected gru or lstm"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `(hidden + input) × hidden`, rows ordered state-then-input.
    pub weight: Mat,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub cell: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub gates: Vec<GateParams>,
}

impl LayerParams {
    pub fn zeros(cell: CellKind, input_dim: usize, hidden: usize) -> LayerParams {
        let gates = (0..cell.gate_count())
            .map(|_| GateParams {
                weight: Mat::zeros(hidden + input_dim, hidden),
                bias: vec![0.0; hidden],
            })
            .collect();
        LayerParams {
            cell,
            input_dim,
            hidden,
            gates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.input_dim == 0 {
            return Err(Error::Parameter("layer dimensions must be positive".into()));
        }
        if self.gates.len() != self.cell.gate_count() {
            return Err(Error::Parameter(format!(
                "{} layer must have {} gates, found {}",
                self.cell,
                self.cell.gate_count(),
                self.gates.len()
            )));
        }
        for g in &self.gates {
            g.weight.validate()?;
            if g.weight.rows != self.hidden + self.input_dim || g.weight.cols != self.hidden {
                return Err(Error::Parameter(format!(
                    "gate weight {}x{} does not match ({} + {})x{}",
                    g.weight.rows, g.weight.cols, self.hidden, self.input_dim, self.hidden
                )));
            }
            if g.bias.len() != self.hidden {
                return Err(Error::Parameter("gate bias length mismatch".into()));
            }
            if g.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("gate bias contains a non-finite value".into()));
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.gates
            .iter()
            .map(|g| g.weight.data.len() + g.bias.len())
            .sum()
    }
}

/// `act(concat · weight + bias)` for one gate.
fn gate_eval(concat: &Mat, gate: &GateParams, act: fn(f64) -> f64) -> Mat {
    let mut out = concat.matmul(&gate.weight);
    out.add_row_bias(&gate.bias);
    out.map_in_place(act);
    out
}

fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Per-timestep tensors needed to run the backward pass.
pub struct GruStepCache {
    concat: Mat,    // [h_prev | x]
    concat_r: Mat,  // [r ⊙ h_prev | x]
    update: Mat,    // z
    reset: Mat,     // r
    candidate: Mat, // h̃
}

pub struct LstmStepCache {
    concat: Mat, // [h_prev | x]
    input: Mat,
    forget: Mat,
    output: Mat,
    candidate: Mat,
    cell_prev: Mat,
    cell_tanh: Mat,
}

pub enum LayerCache {
    Gru {
        steps: Vec<GruStepCache>,
        hidden_states: Vec<Mat>, // h after each step
    },
    Lstm {
        steps: Vec<LstmStepCache>,
        hidden_states: Vec<Mat>,
    },
}

impl LayerCache {
    pub fn hidden_states(&self) -> &[Mat] {
        match self {
            LayerCache::Gru { hidden_states, .. } => hidden_states,
            LayerCache::Lstm { hidden_states, .. } => hidden_states,
        }
    }
}

/// Runs a layer over the whole window. `inputs[t]` is the batch at step t
/// (`batch × input_dim`); initial state is zero. Returns the cache holding
/// per-step hidden states.
pub fn layer_forward(params: &LayerParams, inputs: &[Mat]) -> Result<LayerCache> {
    if inputs.is_empty() {
        return Err(Error::Parameter("layer forward needs at least one step".into()));
    }
    let batch = inputs[0].rows;
    for x in inputs {
        if x.rows != batch || x.cols != params.input_dim {
            return Err(Error::Parameter(format!(
                "input step {}x{} does not match batch {} and input dim {}",
                x.rows, x.cols, batch, params.input_dim
            )));
        }
    }
    let h0 = Mat::zeros(batch, params.hidden);
    match params.cell {
        CellKind::Gru => {
            let mut steps = Vec::with_capacity(inputs.len());
            let mut hidden_states: Vec<Mat> = Vec::with_capacity(inputs.len());
            for (t, x) in inputs.iter().enumerate() {
                let h_prev = if t == 0 { &h0 } else { &hidden_states[t - 1] };
                let concat = h_prev.hconcat(x);
                let update = gate_eval(&concat, &params.gates[0], sigmoid);
                let reset = gate_eval(&concat, &params.gates[1], sigmoid);
                let mut gated = h_prev.clone();
                for (g, r) in gated.data.iter_mut().zip(&reset.data) {
                    *g *= r;
                }
                let concat_r = gated.hconcat(x);
                let candidate = gate_eval(&concat_r, &params.gates[2], tanh);
                let mut h = Mat::zeros(batch, params.hidden);
                for i in 0..h.data.len() {
                    let z = update.data[i];
                    h.data[i] = (1.0 - z) * h_prev.data[i] + z * candidate.data[i];
                }
                steps.push(GruStepCache {
                    concat,
                    concat_r,
                    update,
                    reset,
                    candidate,
                });
                hidden_states.push(h);
            }
            Ok(LayerCache::Gru {
                steps,
                hidden_states,
            })
        }
        CellKind::Lstm => {
            let mut steps = Vec::with_capacity(inputs.len());
            let mut hidden_states: Vec<Mat> = Vec::with_capacity(inputs.len());
            let mut cell = Mat::zeros(batch, params.hidden);
            for (t, x) in inputs.iter().enumerate() {
                let h_prev = if t == 0 { &h0 } else { &hidden_states[t - 1] };
                let concat = h_prev.hconcat(x);
                let input = gate_eval(&concat, &params.gates[0], sigmoid);
                let forget = gate_eval(&concat, &params.gates[1], sigmoid);
                let output = gate_eval(&concat, &params.gates[2], sigmoid);
                let candidate = gate_eval(&concat, &params.gates[3], tanh);
                let cell_prev = cell.clone();
                for i in 0..cell.data.len() {
                    cell.data[i] =
                        forget.data[i] * cell_prev.data[i] + input.data[i] * candidate.data[i];
                }
                let mut cell_tanh = cell.clone();
                cell_tanh.map_in_place(tanh);
                let mut h = Mat::zeros(batch, params.hidden);
                for i in 0..h.data.len() {
                    h.data[i] = output.data[i] * cell_tanh.data[i];
                }
                steps.push(LstmStepCache {
                    concat,
                    input,
                    forget,
                    output,
                    candidate,
                    cell_prev,
                    cell_tanh,
                });
                hidden_states.push(h);
            }
            Ok(LayerCache::Lstm {
                steps,
                hidden_states,
            })
        }
    }
}

/// Gradients for one layer, same shapes as its parameters.
pub struct LayerGrads {
    pub gates: Vec<(Mat, Vec<f64>)>, // (d weight, d bias) per gate
}

impl LayerGrads {
    fn zeros(params: &LayerParams) -> LayerGrads {
        LayerGrads {
            gates: params
                .gates
                .iter()
                .map(|g| {
                    (
                        Mat::zeros(g.weight.rows, g.weight.cols),
                        vec![0.0; g.bias.len()],
                    )
                })
                .collect(),
        }
    }
}

/// Backpropagates through the layer. `d_hidden[t]` is the loss gradient on
/// the step-t output coming from above (the next layer, or the head at the
/// final step). Returns gradients on the layer inputs per step, plus the
/// parameter gradients.
pub fn layer_backward(
    params: &LayerParams,
    cache: &LayerCache,
    d_hidden: &[Mat],
) -> (Vec<Mat>, LayerGrads) {
    let mut grads = LayerGrads::zeros(params);
    let h = params.hidden;
    let steps = d_hidden.len();
    let batch = d_hidden[0].rows;
    let zero_state = Mat::zeros(batch, h);
    // Transposed weights once per backward call; each step reuses them for
    // the fast accumulate-row product.
    let w_t: Vec<Mat> = params.gates.iter().map(|g| g.weight.transpose()).collect();
    let mut d_inputs: Vec<Mat> = Vec::with_capacity(steps);
    let mut d_h_next = Mat::zeros(batch, h); // recurrent gradient flowing to step t

    match (cache, params.cell) {
        (
            LayerCache::Gru {
                steps: caches,
                hidden_states,
            },
            CellKind::Gru,
        ) => {
            for t in (0..steps).rev() {
                let c = &caches[t];
                let h_prev = if t == 0 {
                    &zero_state
                } else {
                    &hidden_states[t - 1]
                };
                // Total gradient on h_t.
                let mut dh = d_hidden[t].clone();
                for (v, r) in dh.data.iter_mut().zip(&d_h_next.data) {
                    *v += r;
                }

                let n = dh.data.len();
                let mut d_candidate_pre = Mat::zeros(batch, h);
                let mut d_update_pre = Mat::zeros(batch, h);
                let mut d_h_prev = Mat::zeros(batch, h);
                for i in 0..n {
                    let z = c.update.data[i];
                    let cand = c.candidate.data[i];
                    let dh_i = dh.data[i];
                    // h = (1-z)·h_prev + z·cand
                    d_candidate_pre.data[i] = dh_i * z * (1.0 - cand * cand);
                    d_update_pre.data[i] = dh_i * (cand - h_prev.data[i]) * z * (1.0 - z);
                    d_h_prev.data[i] = dh_i * (1.0 - z);
                }

                // Candidate gate acts on [r⊙h_prev | x].
                c.concat_r
                    .matmul_transpose_self_into(&d_candidate_pre, &mut grads.gates[2].0);
                add_assign(&mut grads.gates[2].1, &d_candidate_pre.column_sums());
                let d_concat_r = d_candidate_pre.matmul(&w_t[2]);

                let mut d_reset_pre = Mat::zeros(batch, h);
                for i in 0..n {
                    let d_gated = d_concat_r.data[(i / h) * (h + params.input_dim) + (i % h)];
                    let r = c.reset.data[i];
                    d_h_prev.data[i] += d_gated * r;
                    d_reset_pre.data[i] = d_gated * h_prev.data[i] * r * (1.0 - r);
                }

                // Update and reset gates act on [h_prev | x].
                c.concat
                    .matmul_transpose_self_into(&d_update_pre, &mut grads.gates[0].0);
                add_assign(&mut grads.gates[0].1, &d_update_pre.column_sums());
                c.concat
                    .matmul_transpose_self_into(&d_reset_pre, &mut grads.gates[1].0);
                add_assign(&mut grads.gates[1].1, &d_reset_pre.column_sums());

                let mut d_concat = d_update_pre.matmul(&w_t[0]);
                d_reset_pre.matmul_into(&w_t[1], &mut d_concat);

                let mut d_x = Mat::zeros(batch, params.input_dim);
                for b in 0..batch {
                    let dc = d_concat.row(b);
                    let dcr = d_concat_r.row(b);
                    for (j, v) in d_h_prev.row_mut(b).iter_mut().enumerate() {
                        *v += dc[j];
                    }
                    for (j, v) in d_x.row_mut(b).iter_mut().enumerate() {
                        *v = dc[h + j] + dcr[h + j];
                    }
                }
                d_inputs.push(d_x);
                d_h_next = d_h_prev;
            }
        }
        (
            LayerCache::Lstm {
                steps: caches,
                hidden_states: _,
            },
            CellKind::Lstm,
        ) => {
            let mut d_cell_next = Mat::zeros(batch, h);
            for t in (0..steps).rev() {
                let c = &caches[t];
                let mut dh = d_hidden[t].clone();
                for (v, r) in dh.data.iter_mut().zip(&d_h_next.data) {
                    *v += r;
                }

                let n = dh.data.len();
                let mut d_input_pre = Mat::zeros(batch, h);
                let mut d_forget_pre = Mat::zeros(batch, h);
                let mut d_output_pre = Mat::zeros(batch, h);
                let mut d_candidate_pre = Mat::zeros(batch, h);
                let mut d_cell_prev = Mat::zeros(batch, h);
                for idx in 0..n {
                    let i = c.input.data[idx];
                    let f = c.forget.data[idx];
                    let o = c.output.data[idx];
                    let g = c.candidate.data[idx];
                    let tc = c.cell_tanh.data[idx];
                    let dh_i = dh.data[idx];
                    // h = o·tanh(c); c = f·c_prev + i·g
                    let dc = d_cell_next.data[idx] + dh_i * o * (1.0 - tc * tc);
                    d_output_pre.data[idx] = dh_i * tc * o * (1.0 - o);
                    d_input_pre.data[idx] = dc * g * i * (1.0 - i);
                    d_forget_pre.data[idx] = dc * c.cell_prev.data[idx] * f * (1.0 - f);
                    d_candidate_pre.data[idx] = dc * i * (1.0 - g * g);
                    d_cell_prev.data[idx] = dc * f;
                }

                let pres = [
                    &d_input_pre,
                    &d_forget_pre,
                    &d_output_pre,
                    &d_candidate_pre,
                ];
                let mut d_concat = Mat::zeros(batch, h + params.input_dim);
                for (gate, pre) in pres.into_iter().enumerate() {
                    c.concat
                        .matmul_transpose_self_into(pre, &mut grads.gates[gate].0);
                    add_assign(&mut grads.gates[gate].1, &pre.column_sums());
                    pre.matmul_into(&w_t[gate], &mut d_concat);
                }

                let d_h_prev = d_concat.columns(0, h);
                d_inputs.push(d_concat.columns(h, h + params.input_dim));
                d_h_next = d_h_prev;
                d_cell_next = d_cell_prev;
            }
        }
        _ => unreachable!("cache kind always matches params cell kind"),
    }

    d_inputs.reverse();
    (d_inputs, grads)
}

fn add_assign(acc: &mut [f64], inc: &[f64]) {
    for (a, b) in acc.iter_mut().zip(inc) {
        *a += b;
    }
}

/// Single GRU step on one sample: convenience wrapper over the batched
/// layer used by tests and documentation examples.
pub fn gru_cell_step(params: &LayerParams, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if params.cell != CellKind::Gru {
        return Err(Error::Parameter("parameters are not for a GRU cell".into()));
    }
    params.validate()?;
    let (x, h) = check_step_dims(params, x, h)?;
    let concat = h.hconcat(&x);
    let update = gate_eval(&concat, &params.gates[0], sigmoid);
    let reset = gate_eval(&concat, &params.gates[1], sigmoid);
    let mut gated = h.clone();
    for (g, r) in gated.data.iter_mut().zip(&reset.data) {
        *g *= r;
    }
    let candidate = gate_eval(&gated.hconcat(&x), &params.gates[2], tanh);
    Ok((0..params.hidden)
        .map(|i| {
            let z = update.data[i];
            (1.0 - z) * h.data[i] + z * candidate.data[i]
        })
        .collect())
}

/// Single LSTM step on one sample; returns the new (hidden, cell) pair.
pub fn lstm_cell_step(
    params: &LayerParams,
    x: &[f64],
    h: &[f64],
    cell: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if params.cell != CellKind::Lstm {
        return Err(Error::Parameter("parameters are not for an LSTM cell".into()));
    }
    params.validate()?;
    let (x, h) = check_step_dims(params, x, h)?;
    if cell.len() != params.hidden {
        return Err(Error::Parameter(format!(
            "cell state length {} does not match hidden width {}",
            cell.len(),
            params.hidden
        )));
    }
    let concat = h.hconcat(&x);
    let input = gate_eval(&concat, &params.gates[0], sigmoid);
    let forget = gate_eval(&concat, &params.gates[1], sigmoid);
    let output = gate_eval(&concat, &params.gates[2], sigmoid);
    let candidate = gate_eval(&concat, &params.gates[3], tanh);
    let new_cell: Vec<f64> = (0..params.hidden)
        .map(|i| forget.data[i] * cell[i] + input.data[i] * candidate.data[i])
        .collect();
    let new_hidden: Vec<f64> = (0..params.hidden)
        .map(|i| output.data[i] * new_cell[i].tanh())
        .collect();
    Ok((new_hidden, new_cell))
}

fn check_step_dims(params: &LayerParams, x: &[f64], h: &[f64]) -> Result<(Mat, Mat)> {
    if x.len() != params.input_dim {
        return Err(Error::Parameter(format!(
            "input length {} does not match input dim {}",
            x.len(),
            params.input_dim
        )));
    }
    if h.len() != params.hidden {
        return Err(Error::Parameter(format!(
            "state length {} does not match hidden width {}",
            h.len(),
            params.hidden
        )));
    }
    if x.iter().chain(h).any(|v| !v.is_finite()) {
        return Err(Error::Input("cell step input contains a non-finite value".into()));
    }
    Ok((
        Mat {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        },
        Mat {
            rows: 1,
            cols: h.len(),
            data: h.to_vec(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gru_zero_params_halve_the_state() {
        let p = LayerParams::zeros(CellKind::Gru, 2, 3);
        let h = vec![1.0, -0.5, 2.0];
        let out = gru_cell_step(&p, &[0.3, 0.7], &h).unwrap();
        for (o, hv) in out.iter().zip(&h) {
            assert!((o - 0.5 * hv).abs() < 1e-12);
        }
        let zero = gru_cell_step(&p, &[0.3, 0.7], &[0.0; 3]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_zero_params_from_unit_cell() {
        let p = LayerParams::zeros(CellKind::Lstm, 1, 1);
        let (h, c) = lstm_cell_step(&p, &[0.0], &[0.0], &[1.0]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-12);
        assert!((h[0] - 0.2311).abs() < 1e-4);
        let (h0, c0) = lstm_cell_step(&p, &[0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(h0[0], 0.0);
        assert_eq!(c0[0], 0.0);
    }

    #[test]
    fn gru_step_matches_open_coded_scalar_arithmetic() {
        // Scalar GRU with hand-picked parameters, evaluated two ways.
        let mut p = LayerParams::zeros(CellKind::Gru, 1, 1);
        // weight rows: [state; input]
        p.gates[0].weight.data = vec![0.4, -0.3]; // update
        p.gates[0].bias = vec![0.1];
        p.gates[1].weight.data = vec![-0.2, 0.5]; // reset
        p.gates[1].bias = vec![-0.1];
        p.gates[2].weight.data = vec![0.7, 0.6]; // candidate
        p.gates[2].bias = vec![0.05];
        let (h, x) = (0.8, -0.4);
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z = s(0.4 * h + -0.3 * x + 0.1);
        let r = s(-0.2 * h + 0.5 * x + -0.1);
        let cand = (0.7 * (r * h) + 0.6 * x + 0.05).tanh();
        let want = (1.0 - z) * h + z * cand;
        let got = gru_cell_step(&p, &[x], &[h]).unwrap()[0];
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn gates_stay_inside_their_ranges() {
        let mut p = LayerParams::zeros(CellKind::Gru, 1, 4);
        for g in &mut p.gates {
            for (i, w) in g.weight.data.iter_mut().enumerate() {
                *w = ((i as f64) * 1.37).sin() * 3.0;
            }
        }
        let h = vec![0.9, -0.9, 0.2, -0.1];
        let out = gru_cell_step(&p, &[5.0], &h).unwrap();
        let bound = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for v in out {
            assert!(v.abs() <= bound + 1e-12); // convex combination of h and tanh output
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let p = LayerParams::zeros(CellKind::Gru, 2, 3);
        assert!(gru_cell_step(&p, &[1.0], &[0.0; 3]).is_err());
        assert!(gru_cell_step(&p, &[1.0, 2.0], &[0.0; 2]).is_err());
        let p = LayerParams::zeros(CellKind::Lstm, 1, 2);
        assert!(lstm_cell_step(&p, &[1.0], &[0.0; 2], &[0.0; 1]).is_err());
        assert!(gru_cell_step(&p, &[1.0], &[0.0; 2]).is_err()); // wrong kind
    }

    #[test]
    fn layer_forward_matches_single_steps() {
        let mut p = LayerParams::zeros(CellKind::Lstm, 1, 2);
        for (gi, g) in p.gates.iter_mut().enumerate() {
            for (i, w) in g.weight.data.iter_mut().enumerate() {
                *w = (((gi * 7 + i) as f64) * 0.61).sin() * 0.8;
            }
            for (i, b) in g.bias.iter_mut().enumerate() {
                *b = 0.05 * (i as f64 + 1.0);
            }
        }
        let xs = [0.5, -0.3, 0.9];
        let inputs: Vec<Mat> = xs
            .iter()
            .map(|&v| Mat {
                rows: 1,
                cols: 1,
                data: vec![v],
            })
            .collect();
        let cache = layer_forward(&p, &inputs).unwrap();
        let batched = cache.hidden_states().last().unwrap().row(0).to_vec();

        let mut h = vec![0.0; 2];
        let mut c = vec![0.0; 2];
        for &x in &xs {
            let (nh, nc) = lstm_cell_step(&p, &[x], &h, &c).unwrap();
            h = nh;
            c = nc;
        }
        for (a, b) in batched.iter().zip(&h) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
