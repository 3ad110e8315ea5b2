//! Function-approximation NeuRD and softmax policy gradient: policy and critic
//! networks, trajectory sampling, the clipped NeuRD step and the training loop.

mod model;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::games::{GameTree, NodeKind};
use crate::learners::{mat_vec, softmax, softmax_jacobian};
use crate::policy::{LogitVector, SimplexPolicy, TabularPolicy};

pub use model::{LogitModel, Mlp, ModelInput, TabularLogits, DEFAULT_HIDDEN};
pub use train::{train, Algo, TrainConfig, TrainRecord, TrainResult};

use model::check_step;

/// Default logit bound for the clipped NeuRD step.
pub const DEFAULT_BETA: f64 = 2.0;

pub fn model_input(game: &GameTree, state: usize) -> ModelInput<'_> {
    ModelInput {
        state,
        features: &game.info_state(state).features,
    }
}

/// Legal-action logits and the softmax over them.
pub fn policy_forward<M: LogitModel>(
    model: &M,
    game: &GameTree,
    state: usize,
) -> (LogitVector, SimplexPolicy) {
    let out = model.forward(model_input(game, state));
    let logits: Vec<f64> = game.info_state(state).actions.iter().map(|&k| out[k]).collect();
    let pi = softmax(&logits);
    (LogitVector(logits), pi)
}

/// The model's policy at every information state.
pub fn policy_table<M: LogitModel>(model: &M, game: &GameTree) -> TabularPolicy {
    let rows: Vec<Vec<f64>> = (0..game.num_info_states())
        .into_par_iter()
        .map(|s| policy_forward(model, game, s).1.into_vec())
        .collect();
    TabularPolicy::from_rows(rows)
}

/// One decision along an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub state: usize,
    pub player: usize,
    /// Local action index at `state`.
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
    /// Terminal payoff; these games have no intermediate rewards.
    pub utility: [f64; 2],
}

impl Episode {
    /// Return seen by the acting player at each step.
    pub fn returns(&self, gamma: f64) -> Vec<f64> {
        let n = self.steps.len();
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| gamma.powi((n - 1 - i) as i32) * self.utility[s.player])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub episodes: Vec<Episode>,
}

impl TrajectoryBatch {
    /// Distinct visited states with their visit count divided by the batch size,
    /// sorted by state index.
    pub fn state_weights(&self) -> Vec<(usize, f64)> {
        let mut counts = std::collections::BTreeMap::new();
        for e in &self.episodes {
            for s in &e.steps {
                *counts.entry(s.state).or_insert(0usize) += 1;
            }
        }
        let n = self.episodes.len() as f64;
        counts.into_iter().map(|(s, c)| (s, c as f64 / n)).collect()
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn sample_episode<R: Rng + ?Sized>(game: &GameTree, policy: &TabularPolicy, rng: &mut R) -> Episode {
    let mut node = game.root();
    let mut steps = Vec::with_capacity(game.max_decisions());
    loop {
        match &game.node(node).kind {
            NodeKind::Terminal { utility } => {
                return Episode {
                    steps,
                    utility: *utility,
                }
            }
            NodeKind::Chance { outcomes } => {
                let probs: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
                node = outcomes[sample_index(rng, &probs)].1;
            }
            NodeKind::Decision {
                player,
                info_state,
                children,
            } => {
                let action = sample_index(rng, policy.get(*info_state));
                steps.push(Step {
                    state: *info_state,
                    player: *player,
                    action,
                });
                node = children[action];
            }
        }
    }
}

/// `n` episodes; episode `i` draws from stream `i` of a generator seeded with `seed`,
/// so the batch does not depend on how many workers sample it.
pub fn sample_trajectories(
    game: &GameTree,
    policy: &TabularPolicy,
    n: usize,
    seed: u64,
) -> Result<TrajectoryBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let episodes = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_episode(game, policy, &mut rng)
        })
        .collect();
    Ok(TrajectoryBatch { episodes })
}

/// Critic action values at the legal actions of `state`.
pub fn critic_q<M: LogitModel>(critic: &M, game: &GameTree, state: usize) -> Vec<f64> {
    let out = critic.forward(model_input(game, state));
    game.info_state(state).actions.iter().map(|&k| out[k]).collect()
}

/// One squared-error gradient step per visited (s, a), toward the observed return.
pub fn update_critic<M: LogitModel>(
    critic: &mut M,
    game: &GameTree,
    batch: &TrajectoryBatch,
    gamma: f64,
    lr: f64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma must be in [0, 1], got {gamma}")));
    }
    if lr < 0.0 {
        return Err(Error::InvalidArgument(format!("critic learning rate must be ≥ 0, got {lr}")));
    }
    let mut grad = vec![0.0; critic.params().len()];
    let mut cot = vec![0.0; critic.num_outputs()];
    for e in &batch.episodes {
        for (step, ret) in e.steps.iter().zip(e.returns(gamma)) {
            let input = model_input(game, step.state);
            let k = game.info_state(step.state).actions[step.action];
            let err = critic.forward(input)[k] - ret;
            grad.iter_mut().for_each(|g| *g = 0.0);
            cot[k] = 1.0;
            critic.accumulate_vjp(input, &cot, err, &mut grad);
            cot[k] = 0.0;
            check_step(&grad, "critic gradient")?;
            for (p, g) in critic.params_mut().iter_mut().zip(&grad) {
                *p -= lr * g;
            }
        }
    }
    Ok(())
}

/// `q(a) − τ log π(a)`.
pub fn entropy_regularized_q(q: &[f64], pi: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau < 0.0 {
        return Err(Error::InvalidArgument(format!("tau must be ≥ 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(q.to_vec());
    }
    q.iter()
        .zip(pi)
        .map(|(&q, &p)| {
            if p > 0.0 {
                Ok(q - tau * p.ln())
            } else {
                Err(Error::InvalidArgument(
                    "entropy regularization needs positive action probabilities".into(),
                ))
            }
        })
        .collect()
}

/// Per-state inputs of a policy step.
#[derive(Debug, Clone)]
pub struct StateTarget {
    pub state: usize,
    pub weight: f64,
    /// Action values at the legal actions.
    pub q: Vec<f64>,
}

/// Outcome of a NeuRD parameter step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClipStats {
    pub contributions: usize,
    pub clipped: usize,
}

/// `θ ← θ + η Σ_s w_s Σ_a ∇_θ y(s,a) (q(s,a) − v(s))`, dropping each (s, a) term
/// whose own step would move `y(s,a)` outside `[−β, β]`.
pub fn neurd_param_update<M: LogitModel>(
    model: &mut M,
    game: &GameTree,
    targets: &[StateTarget],
    eta: f64,
    beta: f64,
) -> Result<ClipStats> {
    if eta <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eta and beta must be positive, got {eta} and {beta}"
        )));
    }
    let n = model.params().len();
    let mut total = vec![0.0; n];
    let mut single = vec![0.0; n];
    let mut cot = vec![0.0; model.num_outputs()];
    let mut stats = ClipStats::default();
    for t in targets {
        let input = model_input(game, t.state);
        let (_, pi) = policy_forward(model, game, t.state);
        let v = pi.dot(&t.q);
        for (i, &k) in game.info_state(t.state).actions.iter().enumerate() {
            let adv = t.q[i] - v;
            if adv == 0.0 {
                continue;
            }
            single.iter_mut().for_each(|g| *g = 0.0);
            cot[k] = 1.0;
            model.accumulate_vjp(input, &cot, t.weight * adv, &mut single);
            cot[k] = 0.0;
            check_step(&single, "NeuRD gradient")?;
            stats.contributions += 1;
            if beta.is_finite() {
                single.iter_mut().for_each(|g| *g *= eta);
                let post = model.output_at(input, &single, k);
                if !(-beta..=beta).contains(&post) {
                    stats.clipped += 1;
                    continue;
                }
                for (acc, g) in total.iter_mut().zip(&single) {
                    *acc += g;
                }
            } else {
                for (acc, g) in total.iter_mut().zip(&single) {
                    *acc += eta * g;
                }
            }
        }
    }
    check_step(&total, "NeuRD step")?;
    for (p, d) in model.params_mut().iter_mut().zip(&total) {
        *p += d;
    }
    Ok(stats)
}

/// `θ ← θ + η Σ_s w_s Σ_a ∇_θ π(a|s) (q(s,a) − v(s))`.
pub fn spg_param_update<M: LogitModel>(
    model: &mut M,
    game: &GameTree,
    targets: &[StateTarget],
    eta: f64,
) -> Result<()> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let mut total = vec![0.0; model.params().len()];
    let mut cot = vec![0.0; model.num_outputs()];
    for t in targets {
        let (_, pi) = policy_forward(model, game, t.state);
        let v = pi.dot(&t.q);
        let adv: Vec<f64> = t.q.iter().map(|q| q - v).collect();
        let mean_adv = pi.dot(&adv);
        // (∂π/∂y)ᵀ A at the logits
        for (i, &k) in game.info_state(t.state).actions.iter().enumerate() {
            cot[k] = pi[i] * (adv[i] - mean_adv);
        }
        model.accumulate_vjp(model_input(game, t.state), &cot, t.weight, &mut total);
        cot.iter_mut().for_each(|c| *c = 0.0);
    }
    check_step(&total, "SPG gradient")?;
    for (p, d) in model.params_mut().iter_mut().zip(&total) {
        *p += eta * d;
    }
    Ok(())
}

/// Natural-gradient step in logit space for a softmax policy: with `y` as the
/// parameters, `Σ_a ∇̃π(a)(q(a) − v) = Σ_a ∇y(a)(q(a) − v) = η(q − v)`.
pub fn naturalized_step(y: &[f64], q: &[f64], eta: f64) -> Vec<f64> {
    let pi = softmax(y);
    let v = pi.dot(q);
    // ∇_y y is the identity
    q.iter().map(|x| eta * (x - v)).collect()
}

/// Gradient step on `−π_target · log π_y` with the Euler replicator target
/// `π_target = π ⊙ (1 + η(q − v))`.
pub fn kl_target_step(y: &[f64], q: &[f64], eta: f64) -> Vec<f64> {
    let pi = softmax(y);
    let v = pi.dot(q);
    let target: Vec<f64> = pi.iter().zip(q).map(|(p, x)| p * (1.0 + eta * (x - v))).collect();
    let n = y.len();
    // ∂ log π(a) / ∂ y(b) = δ_ab − π(b)
    (0..n)
        .map(|b| {
            (0..n)
                .map(|a| target[a] * (f64::from(u8::from(a == b)) - pi[b]))
                .sum()
        })
        .collect()
}

/// `η ∇_y (π_y · q)`.
pub fn pg_step(y: &[f64], q: &[f64], eta: f64) -> Vec<f64> {
    let pi = softmax(y);
    let j = softmax_jacobian(&pi);
    let jt: Vec<Vec<f64>> = (0..pi.len()).map(|b| j.iter().map(|row| row[b]).collect()).collect();
    mat_vec(&jt, q).into_iter().map(|g| eta * g).collect()
}

/// Fisher matrix applied to a logit-space step.
pub fn fisher_apply(pi: &[f64], step: &[f64]) -> Result<Vec<f64>> {
    ensure_finite(step, "logit step")?;
    Ok(mat_vec(&crate::learners::fisher_matrix(pi), step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{kuhn_game, rps_game};
    use crate::learners::{neurd_tabular_update, spg_tabular_update};

    #[test]
    fn zero_weights_give_uniform_policy() {
        let k = kuhn_game();
        let m = Mlp::zeros(k.feature_len(), 16, 2);
        for s in 0..k.num_info_states() {
            assert_eq!(policy_forward(&m, &k, s).1.as_slice(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn bias_shift_keeps_policy() {
        let k = kuhn_game();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Mlp::for_game(&k, 16, &mut rng);
        let mut shifted = m.clone();
        let n = shifted.params().len();
        shifted.params_mut()[n - 1] += 0.7;
        shifted.params_mut()[n - 2] += 0.7;
        for s in 0..k.num_info_states() {
            let a = policy_forward(&m, &k, s).1;
            let b = policy_forward(&shifted, &k, s).1;
            assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let k = kuhn_game();
        let u = TabularPolicy::uniform(&k);
        let a = sample_trajectories(&k, &u, 50, 9).unwrap();
        let b = sample_trajectories(&k, &u, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.episodes.iter().all(|e| e.steps.len() <= k.max_decisions()));
        assert!(sample_trajectories(&k, &u, 0, 9).is_err());
    }

    #[test]
    fn single_action_game_gives_identical_episodes() {
        let g = crate::games::MatrixGame::new("one", vec![vec![1.0]]).unwrap().to_tree();
        let u = TabularPolicy::uniform(&g);
        let batch = sample_trajectories(&g, &u, 10, 1).unwrap();
        assert!(batch.episodes.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn returns_are_terminal_payoffs_without_discount() {
        let e = Episode {
            steps: vec![
                Step { state: 0, player: 0, action: 1 },
                Step { state: 3, player: 1, action: 0 },
            ],
            utility: [2.0, -2.0],
        };
        assert_eq!(e.returns(1.0), vec![2.0, -2.0]);
        assert_eq!(e.returns(0.5), vec![1.0, -2.0]);
    }

    #[test]
    fn entropy_regularization() {
        let q = [1.0, -1.0];
        assert_eq!(entropy_regularized_q(&q, &[0.3, 0.7], 0.0).unwrap(), q.to_vec());
        let r = entropy_regularized_q(&q, &[0.5, 0.5], 0.2).unwrap();
        assert!((r[0] - q[0] - r[1] + q[1]).abs() < 1e-15);
        let r = entropy_regularized_q(&q, &[1.0 - 1e-9, 1e-9], 0.1).unwrap();
        assert!(r[1] - q[1] > 2.0);
        assert!(entropy_regularized_q(&q, &[1.0, 0.0], 0.1).is_err());
        assert!(entropy_regularized_q(&q, &[0.5, 0.5], -1.0).is_err());
    }

    #[test]
    fn critic_with_zero_lr_is_unchanged() {
        let k = kuhn_game();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = Mlp::for_game(&k, 8, &mut rng);
        let batch = sample_trajectories(&k, &TabularPolicy::uniform(&k), 4, 0).unwrap();
        let mut d = c.clone();
        update_critic(&mut d, &k, &batch, 1.0, 0.0).unwrap();
        assert_eq!(c, d);
        assert!(update_critic(&mut d, &k, &batch, 1.5, 0.1).is_err());
    }

    #[test]
    fn equal_q_leaves_parameters() {
        let k = kuhn_game();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = Mlp::for_game(&k, 8, &mut rng);
        let targets = vec![StateTarget {
            state: 0,
            weight: 1.0,
            q: vec![0.4, 0.4],
        }];
        let mut a = m.clone();
        neurd_param_update(&mut a, &k, &targets, 0.1, DEFAULT_BETA).unwrap();
        assert_eq!(a, m);
        let mut b = m.clone();
        spg_param_update(&mut b, &k, &targets, 0.1).unwrap();
        assert_eq!(b, m);
    }

    #[test]
    fn tabular_steps_match_single_state_learners() {
        let g = rps_game(2.0).unwrap().to_tree();
        let s = g.info_state_index("0|").unwrap();
        let mut t = TabularLogits::for_game(&g);
        let y0 = [0.3, -0.4, 0.1];
        for (a, y) in y0.iter().enumerate() {
            t.params_mut()[s * 3 + a] = *y;
        }
        let q = vec![1.0, -0.5, 0.25];
        let targets = vec![StateTarget { state: s, weight: 1.0, q: q.clone() }];
        let pi = softmax(&y0);
        let expected = neurd_tabular_update(&LogitVector(y0.to_vec()), &q, &pi, 0.3);
        let mut a = t.clone();
        neurd_param_update(&mut a, &g, &targets, 0.3, f64::INFINITY).unwrap();
        let expected_spg = spg_tabular_update(&LogitVector(y0.to_vec()), &q, &pi, 0.3);
        let mut b = t.clone();
        spg_param_update(&mut b, &g, &targets, 0.3).unwrap();
        for i in 0..3 {
            assert!((a.logit(s, i) - expected[i]).abs() < 1e-15);
            assert!((b.logit(s, i) - expected_spg[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn clipping_blocks_steps_past_beta() {
        let g = rps_game(1.0).unwrap().to_tree();
        let s = g.info_state_index("0|").unwrap();
        let mut t = TabularLogits::for_game(&g);
        t.params_mut()[s * 3] = 1.9;
        let targets = vec![StateTarget { state: s, weight: 1.0, q: vec![1.0, 0.0, 0.0] }];
        let stats = neurd_param_update(&mut t, &g, &targets, 0.5, 2.0).unwrap();
        assert_eq!(stats.clipped, 1);
        assert_eq!(t.logit(s, 0), 1.9);
        // the other actions' negative advantages still apply
        assert!(t.logit(s, 1) < 0.0);
    }

    #[test]
    fn kl_target_equals_pg() {
        let y = [0.2, -1.0, 0.5];
        let q = [1.0, 2.0, -0.5];
        let a = kl_target_step(&y, &q, 0.05);
        let b = pg_step(&y, &q, 0.05);
        assert!(a.iter().zip(&b).all(|(x, z)| (x - z).abs() < 1e-12));
    }
}
