use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    critic_q, entropy_regularized_q, neurd_param_update, policy_table, sample_trajectories,
    spg_param_update, update_critic, LogitModel, Mlp, StateTarget, DEFAULT_BETA, DEFAULT_HIDDEN,
};
use crate::error::{Error, Result};
use crate::eval::nashconv;
use crate::games::{GameTree, RewardSchedule};
use crate::policy::TabularPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Neurd,
    Spg,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Neurd => "neurd",
            Algo::Spg => "spg",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neurd" => Ok(Algo::Neurd),
            "spg" => Ok(Algo::Spg),
            _ => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{s}` (valid: neurd, spg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub policy_updates: usize,
    pub critic_updates_per_policy: usize,
    pub policy_batch: usize,
    pub critic_batch: usize,
    pub policy_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eval_every: usize,
    pub schedule: RewardSchedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            policy_updates: 1000,
            critic_updates_per_policy: 4,
            policy_batch: 256,
            critic_batch: 4,
            policy_lr: 0.002,
            critic_lr: 0.01,
            tau: 0.0,
            beta: DEFAULT_BETA,
            gamma: 1.0,
            eval_every: 100,
            schedule: RewardSchedule::stationary(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden == 0 || self.policy_batch == 0 || self.critic_batch == 0 {
            return bad("hidden size and batch sizes must be positive");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1");
        }
        if self.policy_lr <= 0.0 || self.critic_lr < 0.0 || self.tau < 0.0 || self.beta <= 0.0 {
            return bad("learning rates and beta must be positive, tau non-negative");
        }
        Ok(())
    }
}

/// A NashConv checkpoint of the current policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    /// Completed policy updates.
    pub update: usize,
    pub phase: usize,
    pub nashconv: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub records: Vec<TrainRecord>,
    pub policy: TabularPolicy,
    pub clipped: usize,
    pub contributions: usize,
}

impl TrainResult {
    pub fn final_nashconv(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.nashconv)
    }
}

/// Actor-critic training with the NeuRD or SPG policy step.
///
/// Each policy update first runs the critic updates on fresh batches from the current
/// policy, then takes one policy step on a larger batch using the updated critic.
/// Utilities follow `config.schedule`; parameters are never reset at phase changes.
pub fn train(game: &GameTree, algo: Algo, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let phases = config.schedule.phase_games(game)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut policy_net = Mlp::for_game(game, config.hidden, &mut rng);
    let mut critic = Mlp::for_game(game, config.hidden, &mut rng);
    let mut records = Vec::new();
    let mut clipped = 0;
    let mut contributions = 0;

    let mut pi = policy_table(&policy_net, game);
    records.push(TrainRecord {
        update: 0,
        phase: 0,
        nashconv: nashconv(&phases[0], &pi).nashconv,
    });
    for t in 0..config.policy_updates {
        let phase = config.schedule.phase_at(t);
        let g = &phases[phase];
        for _ in 0..config.critic_updates_per_policy {
            let batch = sample_trajectories(g, &pi, config.critic_batch, rng.random())?;
            update_critic(&mut critic, g, &batch, config.gamma, config.critic_lr)?;
        }
        let batch = sample_trajectories(g, &pi, config.policy_batch, rng.random())?;
        let targets = batch
            .state_weights()
            .into_iter()
            .map(|(s, weight)| {
                let q = critic_q(&critic, g, s);
                Ok(StateTarget {
                    state: s,
                    weight,
                    q: entropy_regularized_q(&q, pi.get(s), config.tau)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match algo {
            Algo::Neurd => {
                let stats =
                    neurd_param_update(&mut policy_net, g, &targets, config.policy_lr, config.beta)?;
                clipped += stats.clipped;
                contributions += stats.contributions;
            }
            Algo::Spg => spg_param_update(&mut policy_net, g, &targets, config.policy_lr)?,
        }
        pi = policy_table(&policy_net, game);
        let done = t + 1;
        if done % config.eval_every == 0 || done == config.policy_updates {
            records.push(TrainRecord {
                update: done,
                phase,
                nashconv: nashconv(g, &pi).nashconv,
            });
        }
    }
    debug_assert!(policy_net.params().iter().all(|p| p.is_finite()));
    Ok(TrainResult {
        records,
        policy: pi,
        clipped,
        contributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::kuhn_game;

    fn small() -> TrainConfig {
        TrainConfig {
            hidden: 16,
            policy_updates: 20,
            policy_batch: 32,
            eval_every: 10,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn records_at_cadence() {
        let k = kuhn_game();
        let r = train(&k, Algo::Neurd, &small()).unwrap();
        let updates: Vec<usize> = r.records.iter().map(|r| r.update).collect();
        assert_eq!(updates, vec![0, 10, 20]);
        assert!(r.records.iter().all(|r| r.nashconv >= -1e-10));
    }

    #[test]
    fn same_seed_same_result() {
        let k = kuhn_game();
        let a = train(&k, Algo::Spg, &small()).unwrap();
        let b = train(&k, Algo::Spg, &small()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.policy, b.policy);
    }

    #[test]
    fn negation_phases_are_recorded() {
        let k = kuhn_game();
        let cfg = TrainConfig {
            schedule: RewardSchedule::alternating_negation(10, 20).unwrap(),
            eval_every: 5,
            ..small()
        };
        let r = train(&k, Algo::Neurd, &cfg).unwrap();
        let phases: Vec<usize> = r.records.iter().map(|r| r.phase).collect();
        assert_eq!(phases, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn rejects_bad_config() {
        let k = kuhn_game();
        let cfg = TrainConfig { eval_every: 0, ..small() };
        assert!(train(&k, Algo::Neurd, &cfg).is_err());
    }
}
