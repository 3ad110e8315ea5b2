//! Single-state, all-actions online learners: Hedge, tabular NeuRD, tabular softmax
//! policy gradient (SPG) and the standard discrete-time replicator dynamic, together
//! with regret bookkeeping and the repeated matching-pennies protocol.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::games::matching_pennies_utilities;
use crate::policy::{LogitVector, SimplexPolicy};

/// Step sizes swept when tuning a learner for a fixed horizon.
pub const DEFAULT_ETA_GRID: [f64; 10] = [0.01, 0.02, 0.05, 0.1, 0.21, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Numerically stable softmax.
pub fn softmax(y: &[f64]) -> SimplexPolicy {
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = y.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    SimplexPolicy::from_normalized(exps.into_iter().map(|e| e / sum).collect())
}

/// `J[a][b] = ∂π(a)/∂y(b) = π(a)(δ_ab − π(b))`.
pub fn softmax_jacobian(pi: &[f64]) -> Vec<Vec<f64>> {
    let n = pi.len();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| pi[a] * (f64::from(u8::from(a == b)) - pi[b]))
                .collect()
        })
        .collect()
}

/// Fisher information of a softmax policy with respect to its logits, built from
/// the score-function definition `Σ_c π(c) ∂_a log π(c) ∂_b log π(c)`.
pub fn fisher_matrix(pi: &[f64]) -> Vec<Vec<f64>> {
    let n = pi.len();
    let delta = |i: usize, j: usize| f64::from(u8::from(i == j));
    // ∂ log π(c) / ∂ y(a) = δ_ac − π(a)
    let score = |c: usize, a: usize| delta(a, c) - pi[a];
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (0..n).map(|c| pi[c] * score(c, a) * score(c, b)).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn advantage(u: &[f64], pi: &[f64]) -> Vec<f64> {
    let baseline: f64 = pi.iter().zip(u).map(|(p, x)| p * x).sum();
    u.iter().map(|x| x - baseline).collect()
}

/// Hedge: `y' = y + η u`.
pub fn hedge_update(y: &LogitVector, u: &[f64], eta: f64) -> LogitVector {
    LogitVector(y.iter().zip(u).map(|(y, u)| y + eta * u).collect())
}

/// Tabular NeuRD: `y'(a) = y(a) + η (u(a) − π·u)`.
pub fn neurd_tabular_update(y: &LogitVector, u: &[f64], pi: &[f64], eta: f64) -> LogitVector {
    let adv = advantage(u, pi);
    LogitVector(y.iter().zip(adv).map(|(y, a)| y + eta * a).collect())
}

/// Tabular all-actions softmax policy gradient: `y'(a) = y(a) + η π(a)(u(a) − π·u)`.
pub fn spg_tabular_update(y: &LogitVector, u: &[f64], pi: &[f64], eta: f64) -> LogitVector {
    let adv = advantage(u, pi);
    LogitVector(
        y.iter()
            .zip(pi)
            .zip(adv)
            .map(|((y, p), a)| y + eta * p * a)
            .collect(),
    )
}

/// Standard discrete-time replicator dynamic in logit form: `y' = y + q`.
pub fn standard_discrete_rd_update(y: &LogitVector, q: &[f64]) -> LogitVector {
    LogitVector(y.iter().zip(q).map(|(y, q)| y + q).collect())
}

/// Standard discrete-time replicator dynamic in policy form:
/// `π'(a) = π(a) e^{q(a)} / (π · e^q)`.
pub fn standard_discrete_rd_policy(pi: &[f64], q: &[f64]) -> SimplexPolicy {
    let qmax = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = pi.iter().zip(q).map(|(p, q)| p * (q - qmax).exp()).collect();
    SimplexPolicy::normalize(&w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Hedge,
    Neurd,
    Spg,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Hedge => "hedge",
            LearnerKind::Neurd => "neurd",
            LearnerKind::Spg => "spg",
        }
    }

    /// One logit update for this learner.
    pub fn update(self, y: &LogitVector, u: &[f64], pi: &[f64], eta: f64) -> LogitVector {
        match self {
            LearnerKind::Hedge => hedge_update(y, u, eta),
            LearnerKind::Neurd => neurd_tabular_update(y, u, pi, eta),
            LearnerKind::Spg => spg_tabular_update(y, u, pi, eta),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hedge" => Ok(LearnerKind::Hedge),
            "neurd" => Ok(LearnerKind::Neurd),
            "spg" => Ok(LearnerKind::Spg),
            _ => Err(Error::InvalidArgument(format!(
                "unknown learner `{s}` (valid: hedge, neurd, spg)"
            ))),
        }
    }
}

/// Step-size schedule `η_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `√(2 ln|A| / T)` for a known horizon `T`.
    HorizonTuned { horizon: usize },
    /// `scale / √t`.
    Anytime { scale: f64 },
}

impl StepSize {
    /// Step size at 1-based round `t` for a learner with `num_actions` actions.
    pub fn at(&self, t: usize, num_actions: usize) -> f64 {
        match *self {
            StepSize::Constant(eta) => eta,
            StepSize::HorizonTuned { horizon } => {
                (2.0 * (num_actions as f64).ln() / horizon as f64).sqrt()
            }
            StepSize::Anytime { scale } => scale / (t.max(1) as f64).sqrt(),
        }
    }
}

/// Cumulative per-action utility and cumulative expected utility.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    cum_utility: Vec<f64>,
    cum_expected: f64,
    rounds: usize,
}

impl RegretLedger {
    pub fn new(num_actions: usize) -> Self {
        Self {
            cum_utility: vec![0.0; num_actions],
            cum_expected: 0.0,
            rounds: 0,
        }
    }

    pub fn record(&mut self, pi: &[f64], u: &[f64]) {
        for (c, x) in self.cum_utility.iter_mut().zip(u) {
            *c += x;
        }
        self.cum_expected += pi.iter().zip(u).map(|(p, x)| p * x).sum::<f64>();
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn cum_utility(&self) -> &[f64] {
        &self.cum_utility
    }

    pub fn cum_expected(&self) -> f64 {
        self.cum_expected
    }

    /// `R_T(a) = Σ_t u_t(a) − π_t · u_t`.
    pub fn regret(&self, action: usize) -> f64 {
        self.cum_utility[action] - self.cum_expected
    }

    /// Regret against the best fixed action in hindsight.
    pub fn max_regret(&self) -> f64 {
        (0..self.cum_utility.len())
            .map(|a| self.regret(a))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Logged state of one round of a repeated game.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub logits: Vec<f64>,
    pub policy: Vec<f64>,
    /// `R_t(a)` for every action.
    pub regrets: Vec<f64>,
    /// Regret against the best fixed action.
    pub regret: f64,
}

#[derive(Debug, Clone)]
pub struct RepeatedGameRun {
    pub learner: LearnerKind,
    pub horizon: usize,
    pub forfeit: bool,
    pub ledger: RegretLedger,
    pub trace: Vec<RoundRecord>,
}

impl RepeatedGameRun {
    pub fn final_regret(&self) -> f64 {
        self.ledger.max_regret()
    }
}

/// Plays `horizon` rounds of all-actions matching pennies against the scripted
/// 40%/60% opponent, starting from uniform logits.
///
/// The policy of round `t` is the softmax of the logits accumulated over rounds
/// `1..t`. Traces record every round up to 1000 rounds, every tenth round beyond.
pub fn run_repeated_game(
    learner: LearnerKind,
    horizon: usize,
    step: StepSize,
    forfeit: bool,
) -> Result<RepeatedGameRun> {
    let utilities = matching_pennies_utilities(horizon, forfeit)?;
    let n = utilities[0].len();
    let stride = if horizon <= 1000 { 1 } else { 10 };
    let mut y = LogitVector::zeros(n);
    let mut ledger = RegretLedger::new(n);
    let mut trace = Vec::with_capacity(horizon / stride + 1);
    for (i, u) in utilities.iter().enumerate() {
        let t = i + 1;
        let pi = softmax(&y);
        ledger.record(&pi, u);
        y = learner.update(&y, u, &pi, step.at(t, n));
        if t % stride == 0 || t == horizon {
            trace.push(RoundRecord {
                round: t,
                logits: y.0.clone(),
                policy: softmax(&y).into_vec(),
                regrets: (0..n).map(|a| ledger.regret(a)).collect(),
                regret: ledger.max_regret(),
            });
        }
    }
    Ok(RepeatedGameRun {
        learner,
        horizon,
        forfeit,
        ledger,
        trace,
    })
}

/// Constant step size from `grid` with the lowest final regret; ties go to the
/// smaller step size.
pub fn sweep_step_size(
    learner: LearnerKind,
    horizon: usize,
    forfeit: bool,
    grid: &[f64],
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty step-size grid".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for eta in sorted {
        let regret = run_repeated_game(learner, horizon, StepSize::Constant(eta), forfeit)?.final_regret();
        if best.is_none_or(|(_, r)| regret < r) {
            best = Some((eta, regret));
        }
    }
    Ok(best.expect("non-empty grid"))
}
