//! Probability vectors, logit vectors and tabular joint policies.

use std::fmt::Write as _;
use std::ops::{Deref, Index};

use crate::error::{Error, Result};
use crate::games::GameTree;

/// Tolerance used when checking that a vector lies on the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// A probability vector over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPolicy(Vec<f64>);

impl SimplexPolicy {
    /// Validates that `probs` is non-negative and sums to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty policy".into()));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "not a probability vector: {probs:?}"
            )));
        }
        Ok(Self(probs))
    }

    /// Wraps a vector the caller guarantees is already normalized.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        Self(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalizes a non-negative vector; falls back to uniform when the mass is zero.
    pub fn normalize(weights: &[f64]) -> Self {
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            Self(weights.iter().map(|w| w / sum).collect())
        } else {
            Self::uniform(weights.len())
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Expected value `π · u`.
    pub fn dot(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(p, x)| p * x).sum()
    }
}

impl Deref for SimplexPolicy {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Unnormalized action preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(pub Vec<f64>);

impl LogitVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `max(y) - min(y)`.
    pub fn gap(&self) -> f64 {
        let max = self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

impl Deref for LogitVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A behavioural policy for every information state of a game (both players).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn uniform(game: &GameTree) -> Self {
        Self {
            probs: game
                .info_states()
                .iter()
                .map(|s| vec![1.0 / s.num_actions() as f64; s.num_actions()])
                .collect(),
        }
    }

    /// Builds a policy from per-state vectors, checking shapes against the game.
    pub fn from_vecs(game: &GameTree, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != game.num_info_states() {
            return Err(Error::InvalidArgument(format!(
                "policy has {} states, game has {}",
                probs.len(),
                game.num_info_states()
            )));
        }
        for (s, p) in game.info_states().iter().zip(&probs) {
            if p.len() != s.num_actions() {
                return Err(Error::InvalidArgument(format!(
                    "state `{}` expects {} probabilities, got {}",
                    s.key,
                    s.num_actions(),
                    p.len()
                )));
            }
            SimplexPolicy::new(p.clone())?;
        }
        Ok(Self { probs })
    }

    /// Wraps rows that are already normalized, without shape checks.
    pub(crate) fn from_rows(probs: Vec<Vec<f64>>) -> Self {
        Self { probs }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, state: usize) -> &[f64] {
        &self.probs[state]
    }

    pub fn set(&mut self, state: usize, probs: &[f64]) {
        debug_assert_eq!(self.probs[state].len(), probs.len());
        self.probs[state].copy_from_slice(probs);
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Largest absolute difference over every state and action.
    pub fn max_abs_diff(&self, other: &TabularPolicy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Serializes as one `key p0 p1 ...` line per information state.
    pub fn to_text(&self, game: &GameTree) -> String {
        let mut out = String::new();
        for (s, p) in game.info_states().iter().zip(&self.probs) {
            out.push_str(&s.key);
            for x in p {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format written by [`TabularPolicy::to_text`].
    ///
    /// Blank lines and lines starting with `#` are ignored. States missing from the text
    /// default to uniform.
    pub fn from_text(game: &GameTree, text: &str) -> Result<Self> {
        let mut policy = Self::uniform(game);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::PolicyParse {
                line: lineno + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let key = fields.next().expect("non-empty line");
            let state = game
                .info_state_index(key)
                .ok_or_else(|| err(format!("unknown information state `{key}`")))?;
            let probs = fields
                .map(|f| f.parse::<f64>().map_err(|e| err(format!("`{f}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let expected = game.info_state(state).num_actions();
            if probs.len() != expected {
                return Err(err(format!(
                    "`{key}` expects {expected} probabilities, got {}",
                    probs.len()
                )));
            }
            SimplexPolicy::new(probs.clone()).map_err(|e| err(e.to_string()))?;
            policy.probs[state] = probs;
        }
        Ok(policy)
    }
}

impl Index<usize> for TabularPolicy {
    type Output = [f64];
    fn index(&self, state: usize) -> &[f64] {
        &self.probs[state]
    }
}
