use rand::Rng;

use crate::error::{Error, Result};
use crate::games::GameTree;

pub const DEFAULT_HIDDEN: usize = 128;

/// What a model sees of an information state.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    /// Global info-state index.
    pub state: usize,
    pub features: &'a [f64],
}

/// A differentiable map from an information state to one output per global action.
///
/// Parameters live in one flat vector so updates and finite differences can treat
/// every model the same way.
pub trait LogitModel: Clone + Send + Sync {
    fn num_outputs(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward(&self, input: ModelInput<'_>) -> Vec<f64>;
    /// Adds `scale · Σ_k cotangent[k] ∂out[k]/∂θ` to `grad`.
    fn accumulate_vjp(&self, input: ModelInput<'_>, cotangent: &[f64], scale: f64, grad: &mut [f64]);

    /// Output `k` at parameters `θ + step`, without mutating the model.
    fn output_at(&self, input: ModelInput<'_>, step: &[f64], k: usize) -> f64 {
        let mut shifted = self.clone();
        for (p, d) in shifted.params_mut().iter_mut().zip(step) {
            *p += d;
        }
        shifted.forward(input)[k]
    }
}

/// Two-layer perceptron `W2 relu(W1 x + b1) + b2`.
///
/// Parameter layout: `W1` (row-major, hidden × input), `b1`, `W2` (outputs × hidden), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    output: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            params: vec![0.0; hidden * input + hidden + output * hidden + output],
        }
    }

    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(input, hidden, output);
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let (w1_end, w2_start, w2_end) = m.offsets();
        for p in &mut m.params[..w1_end] {
            *p = rng.random_range(-b1..b1);
        }
        for p in &mut m.params[w2_start..w2_end] {
            *p = rng.random_range(-b2..b2);
        }
        m
    }

    /// Network sized for a game's features and actions.
    pub fn for_game<R: Rng + ?Sized>(game: &GameTree, hidden: usize, rng: &mut R) -> Self {
        Self::init(game.feature_len(), hidden, game.num_global_actions(), rng)
    }

    pub fn input_len(&self) -> usize {
        self.input
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden
    }

    /// (end of W1, start of W2, end of W2).
    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input;
        let w2 = w1 + self.hidden;
        (w1, w2, w2 + self.output * self.hidden)
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        let (w1_end, _, _) = self.offsets();
        let w1 = &self.params[..w1_end];
        let b1 = &self.params[w1_end..w1_end + self.hidden];
        w1.chunks_exact(self.input)
            .zip(b1)
            .map(|(row, b)| {
                b + row
                    .iter()
                    .zip(x)
                    .filter(|(_, xi)| **xi != 0.0)
                    .map(|(w, xi)| w * xi)
                    .sum::<f64>()
            })
            .collect()
    }
}

impl LogitModel for Mlp {
    fn num_outputs(&self) -> usize {
        self.output
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, input: ModelInput<'_>) -> Vec<f64> {
        debug_assert_eq!(input.features.len(), self.input);
        let h: Vec<f64> = self.hidden_pre(input.features).into_iter().map(|z| z.max(0.0)).collect();
        let (_, w2_start, w2_end) = self.offsets();
        let w2 = &self.params[w2_start..w2_end];
        let b2 = &self.params[w2_end..];
        w2.chunks_exact(self.hidden)
            .zip(b2)
            .map(|(row, b)| b + row.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>())
            .collect()
    }

    fn accumulate_vjp(&self, input: ModelInput<'_>, cotangent: &[f64], scale: f64, grad: &mut [f64]) {
        let x = input.features;
        let pre = self.hidden_pre(x);
        let (w1_end, w2_start, w2_end) = self.offsets();
        let mut dh = vec![0.0; self.hidden];
        for (k, &c) in cotangent.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let c = c * scale;
            grad[w2_end + k] += c;
            let row = w2_start + k * self.hidden;
            for j in 0..self.hidden {
                let hj = pre[j].max(0.0);
                grad[row + j] += c * hj;
                dh[j] += c * self.params[row + j];
            }
        }
        for j in 0..self.hidden {
            if pre[j] <= 0.0 || dh[j] == 0.0 {
                continue;
            }
            grad[w1_end + j] += dh[j];
            let row = j * self.input;
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    grad[row + i] += dh[j] * xi;
                }
            }
        }
    }
}

/// One free parameter per (information state, global action).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularLogits {
    outputs: usize,
    params: Vec<f64>,
}

impl TabularLogits {
    pub fn zeros(num_states: usize, outputs: usize) -> Self {
        Self {
            outputs,
            params: vec![0.0; num_states * outputs],
        }
    }

    pub fn for_game(game: &GameTree) -> Self {
        Self::zeros(game.num_info_states(), game.num_global_actions())
    }

    pub fn logit(&self, state: usize, action: usize) -> f64 {
        self.params[state * self.outputs + action]
    }
}

impl LogitModel for TabularLogits {
    fn num_outputs(&self) -> usize {
        self.outputs
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, input: ModelInput<'_>) -> Vec<f64> {
        let o = input.state * self.outputs;
        self.params[o..o + self.outputs].to_vec()
    }

    fn accumulate_vjp(&self, input: ModelInput<'_>, cotangent: &[f64], scale: f64, grad: &mut [f64]) {
        let o = input.state * self.outputs;
        for (g, c) in grad[o..o + self.outputs].iter_mut().zip(cotangent) {
            *g += scale * c;
        }
    }

    fn output_at(&self, input: ModelInput<'_>, step: &[f64], k: usize) -> f64 {
        let i = input.state * self.outputs + k;
        self.params[i] + step[i]
    }
}

/// Checks a parameter vector before it is applied.
pub(crate) fn check_step(step: &[f64], context: &str) -> Result<()> {
    if let Some(i) = step.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("{context}: parameter {i}"),
        });
    }
    Ok(())
}
