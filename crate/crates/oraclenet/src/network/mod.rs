//! From-scratch stacked LSTM regressor. Parameters live in one flat vector
//! with a precomputed layout so the optimizer, serializer, and gradient
//! checks can treat the whole net uniformly.

pub mod io;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("sequence lengths differ")]
    LengthMismatch,
    #[error("mask selects no timesteps")]
    EmptyMask,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training diverged at epoch {epoch}: mse {mse}")]
    Diverged { epoch: usize, mse: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad magic: expected \"ONWT\"")]
    BadMagic,
    #[error("unsupported weight-file version {0}")]
    BadVersion(u32),
    #[error("unsupported float width {0}; expected 4 or 8")]
    BadFloatWidth(u8),
    #[error("checksum mismatch: file corrupted")]
    ChecksumMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Gate packing order within each layer's 4h-row weight blocks.
/// Rows [0,h) input gate, [h,2h) forget, [2h,3h) cell candidate,
/// [3h,4h) output gate.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerSlots {
    pub wx: usize,
    pub wh: usize,
    pub b: usize,
    pub input: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub layers: Vec<LayerSlots>,
    pub out_w: usize,
    pub out_b: usize,
    pub output_dim: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize) -> Self {
        let mut off = 0;
        let mut layers = Vec::with_capacity(hidden.len());
        let mut in_w = input_dim;
        for &h in hidden {
            let wx = off;
            off += 4 * h * in_w;
            let wh = off;
            off += 4 * h * h;
            let b = off;
            off += 4 * h;
            layers.push(LayerSlots {
                wx,
                wh,
                b,
                input: in_w,
                hidden: h,
            });
            in_w = h;
        }
        let out_w = off;
        off += output_dim * in_w;
        let out_b = off;
        off += output_dim;
        Layout {
            layers,
            out_w,
            out_b,
            output_dim,
            total: off,
        }
    }
}

/// Per-layer hidden and cell vectors; zeroed at sequence start.
#[derive(Debug, Clone)]
pub struct LstmState {
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

/// Stacked LSTM with a linear output head and per-axis normalization
/// between raw c-space units and [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
    norm_lo: Vec<f64>,
    norm_hi: Vec<f64>,
    layout: Layout,
}

/// Everything the backward pass needs from a forward run: the raw input
/// sequence plus post-activation gates and cell values per layer per step.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Vec<f64>>,
    gates: Vec<Vec<Vec<f64>>>,  // [layer][t] -> packed i,f,g,o (4h)
    c: Vec<Vec<Vec<f64>>>,      // [layer][t] -> cell (h)
    tanh_c: Vec<Vec<Vec<f64>>>, // [layer][t] -> tanh(cell) (h)
    h: Vec<Vec<Vec<f64>>>,      // [layer][t] -> hidden (h)
}

/// Named architectures; hidden sizes per layer.
pub fn preset(name: &str) -> Option<Vec<usize>> {
    match name {
        "ci" => Some(vec![128, 128]),
        "2d-paper" => Some(vec![256; 4]),
        "3link-paper" => Some(vec![256; 6]),
        "manipulator-paper" => Some(vec![400; 6]),
        _ => None,
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["ci", "2d-paper", "3link-paper", "manipulator-paper"]
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let n4 = a.len() & !3;
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in n4..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let n = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(&w[r * n..(r + 1) * n], x);
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmNet {
    /// Fresh net with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights,
    /// zero biases except the forget gate at +1, normalization from the
    /// given per-axis bounds. Input width is 2d (current config + goal).
    pub fn new(dim: usize, hidden: &[usize], bounds: &[[f64; 2]], seed: u64) -> Self {
        assert!(dim > 0 && !hidden.is_empty());
        assert_eq!(bounds.len(), dim);
        let layout = Layout::new(2 * dim, hidden, dim);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for slot in &layout.layers {
            let (h, inw) = (slot.hidden, slot.input);
            let lim_x = 1.0 / (inw as f64).sqrt();
            for p in &mut params[slot.wx..slot.wx + 4 * h * inw] {
                *p = rng.random_range(-lim_x..lim_x);
            }
            let lim_h = 1.0 / (h as f64).sqrt();
            for p in &mut params[slot.wh..slot.wh + 4 * h * h] {
                *p = rng.random_range(-lim_h..lim_h);
            }
            // biases zero, forget gate +1
            for p in &mut params[slot.b + h..slot.b + 2 * h] {
                *p = 1.0;
            }
        }
        let top = *hidden.last().unwrap();
        let lim_o = 1.0 / (top as f64).sqrt();
        for p in &mut params[layout.out_w..layout.out_w + dim * top] {
            *p = rng.random_range(-lim_o..lim_o);
        }
        LstmNet {
            dim,
            hidden: hidden.to_vec(),
            params,
            norm_lo: bounds.iter().map(|b| b[0]).collect(),
            norm_hi: bounds.iter().map(|b| b[1]).collect(),
            layout,
        }
    }

    pub(crate) fn from_parts(
        dim: usize,
        hidden: Vec<usize>,
        params: Vec<f64>,
        norm_lo: Vec<f64>,
        norm_hi: Vec<f64>,
    ) -> Self {
        let layout = Layout::new(2 * dim, &hidden, dim);
        assert_eq!(params.len(), layout.total);
        LstmNet {
            dim,
            hidden,
            params,
            norm_lo,
            norm_hi,
            layout,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input_dim(&self) -> usize {
        2 * self.dim
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        self.norm_lo
            .iter()
            .zip(&self.norm_hi)
            .map(|(&lo, &hi)| [lo, hi])
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState {
            h: self.hidden.iter().map(|&h| vec![0.0; h]).collect(),
            c: self.hidden.iter().map(|&h| vec![0.0; h]).collect(),
        }
    }

    /// Maps raw c-space values to [-1, 1]; accepts length d or 2d (the goal
    /// half reuses the same per-axis bounds).
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(i, &v)| {
                let a = i % self.dim;
                2.0 * (v - self.norm_lo[a]) / (self.norm_hi[a] - self.norm_lo[a]) - 1.0
            })
            .collect()
    }

    /// Inverse of `normalize` for a length-d vector.
    pub fn denormalize(&self, normed: &[f64]) -> Vec<f64> {
        normed
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let a = i % self.dim;
                self.norm_lo[a] + (v + 1.0) * 0.5 * (self.norm_hi[a] - self.norm_lo[a])
            })
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetworkError> {
        if x.len() != 2 * self.dim {
            return Err(NetworkError::BadInput(format!(
                "expected {} values, got {}",
                2 * self.dim,
                x.len()
            )));
        }
        for &v in x {
            if !v.is_finite() {
                return Err(NetworkError::BadInput("non-finite component".into()));
            }
            if v.abs() > 1.5 {
                return Err(NetworkError::BadInput(format!(
                    "component {v} outside normalized range [-1.5, 1.5]"
                )));
            }
        }
        Ok(())
    }

    /// One timestep on a normalized goal-augmented input; advances `state`
    /// and returns the normalized predicted next configuration.
    pub fn step(&self, state: &mut LstmState, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.check_input(x)?;
        Ok(self.step_raw(state, x, None))
    }

    fn step_raw(&self, state: &mut LstmState, x: &[f64], mut tape: Option<&mut Tape>) -> Vec<f64> {
        let mut input = x.to_vec();
        for (l, slot) in self.layout.layers.iter().enumerate() {
            let h = slot.hidden;
            let mut z = self.params[slot.b..slot.b + 4 * h].to_vec();
            matvec_add(
                &mut z,
                &self.params[slot.wx..slot.wx + 4 * h * slot.input],
                &input,
            );
            matvec_add(&mut z, &self.params[slot.wh..slot.wh + 4 * h * h], &state.h[l]);
            for v in &mut z[..2 * h] {
                *v = sigmoid(*v);
            }
            for v in &mut z[2 * h..3 * h] {
                *v = v.tanh();
            }
            for v in &mut z[3 * h..] {
                *v = sigmoid(*v);
            }
            let mut tanh_c = vec![0.0; h];
            for j in 0..h {
                let (gi, gf, gg, go) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
                state.c[l][j] = gf * state.c[l][j] + gi * gg;
                tanh_c[j] = state.c[l][j].tanh();
                state.h[l][j] = go * tanh_c[j];
            }
            if let Some(t) = tape.as_deref_mut() {
                t.gates[l].push(z);
                t.c[l].push(state.c[l].clone());
                t.tanh_c[l].push(tanh_c);
                t.h[l].push(state.h[l].clone());
            }
            input.clone_from(&state.h[l]);
        }
        let d = self.dim;
        let mut y = self.params[self.layout.out_b..self.layout.out_b + d].to_vec();
        matvec_add(
            &mut y,
            &self.params[self.layout.out_w..self.layout.out_w + d * input.len()],
            &input,
        );
        y
    }

    /// Runs a whole normalized input sequence from a zero state.
    pub fn forward_sequence(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NetworkError> {
        if inputs.is_empty() {
            return Err(NetworkError::BadInput("empty sequence".into()));
        }
        let mut state = self.zero_state();
        inputs.iter().map(|x| self.step(&mut state, x)).collect()
    }

    /// Forward pass that also records the activation tape for `backward`.
    /// Inputs are trusted (no range check) since training data is produced
    /// by `normalize`.
    pub fn forward_tape(&self, inputs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Tape) {
        let l = self.hidden.len();
        let mut tape = Tape {
            inputs: inputs.to_vec(),
            gates: vec![Vec::with_capacity(inputs.len()); l],
            c: vec![Vec::with_capacity(inputs.len()); l],
            tanh_c: vec![Vec::with_capacity(inputs.len()); l],
            h: vec![Vec::with_capacity(inputs.len()); l],
        };
        let mut state = self.zero_state();
        let outputs = inputs
            .iter()
            .map(|x| self.step_raw(&mut state, x, Some(&mut tape)))
            .collect();
        (outputs, tape)
    }

    /// Backpropagation through time over the whole taped sequence.
    /// `d_outputs[t]` is the loss gradient w.r.t. the normalized output at
    /// step t; gradients accumulate into `grads` (same layout as params).
    pub fn backward(&self, tape: &Tape, d_outputs: &[Vec<f64>], grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len());
        assert_eq!(d_outputs.len(), tape.inputs.len());
        let steps = tape.inputs.len();
        let nl = self.hidden.len();
        let d = self.dim;
        let top = self.hidden[nl - 1];

        let mut dh_next: Vec<Vec<f64>> = self.hidden.iter().map(|&h| vec![0.0; h]).collect();
        let mut dc_next: Vec<Vec<f64>> = self.hidden.iter().map(|&h| vec![0.0; h]).collect();

        for t in (0..steps).rev() {
            // output head: y = W_out h_top + b_out
            let dy = &d_outputs[t];
            let h_top = &tape.h[nl - 1][t];
            let out_w = &self.params[self.layout.out_w..self.layout.out_w + d * top];
            let mut dh_above = vec![0.0; top];
            for r in 0..d {
                grads[self.layout.out_b + r] += dy[r];
                axpy(
                    &mut grads[self.layout.out_w + r * top..self.layout.out_w + (r + 1) * top],
                    dy[r],
                    h_top,
                );
                axpy(&mut dh_above, dy[r], &out_w[r * top..(r + 1) * top]);
            }

            for l in (0..nl).rev() {
                let slot = &self.layout.layers[l];
                let h = slot.hidden;
                let gates = &tape.gates[l][t];
                let tanh_c = &tape.tanh_c[l][t];
                let zero = vec![0.0; h];
                let c_prev = if t > 0 { &tape.c[l][t - 1] } else { &zero };
                let h_prev = if t > 0 { &tape.h[l][t - 1] } else { &zero };

                let mut dh = std::mem::replace(&mut dh_next[l], vec![0.0; h]);
                for j in 0..h {
                    dh[j] += dh_above[j];
                }

                // dz packed like the gates: i, f, g, o
                let mut dz = vec![0.0; 4 * h];
                let mut dc = std::mem::take(&mut dc_next[l]);
                for j in 0..h {
                    let (gi, gf, gg, go) =
                        (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    dc[j] += dh[j] * go * (1.0 - tanh_c[j] * tanh_c[j]);
                    dz[j] = dc[j] * gg * gi * (1.0 - gi);
                    dz[h + j] = dc[j] * c_prev[j] * gf * (1.0 - gf);
                    dz[2 * h + j] = dc[j] * gi * (1.0 - gg * gg);
                    dz[3 * h + j] = dh[j] * tanh_c[j] * go * (1.0 - go);
                    dc[j] *= gf;
                }
                dc_next[l] = dc;

                let x_in: &[f64] = if l > 0 {
                    &tape.h[l - 1][t]
                } else {
                    &tape.inputs[t]
                };
                let inw = slot.input;
                let wx = &self.params[slot.wx..slot.wx + 4 * h * inw];
                let wh = &self.params[slot.wh..slot.wh + 4 * h * h];
                let mut dx = vec![0.0; inw];
                for r in 0..4 * h {
                    let s = dz[r];
                    if s != 0.0 {
                        axpy(
                            &mut grads[slot.wx + r * inw..slot.wx + (r + 1) * inw],
                            s,
                            x_in,
                        );
                        axpy(
                            &mut grads[slot.wh + r * h..slot.wh + (r + 1) * h],
                            s,
                            h_prev,
                        );
                        grads[slot.b + r] += s;
                        axpy(&mut dx, s, &wx[r * inw..(r + 1) * inw]);
                        axpy(&mut dh_next[l], s, &wh[r * h..(r + 1) * h]);
                    }
                }
                dh_above = dx;
            }
        }
    }
}
