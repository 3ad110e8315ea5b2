use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use neurd::games::kuhn_game;
use neurd::neural::{
    critic_q, neurd_param_update, sample_trajectories, train, update_critic, Algo,
    Episode, LogitModel, Mlp, StateTarget, Step, TabularLogits, TrainConfig, TrajectoryBatch,
};
use neurd::policy::TabularPolicy;

#[test]
fn first_action_frequency_matches_policy() {
    let game = kuhn_game();
    let mut rows: Vec<Vec<f64>> = game.info_states().iter().map(|s| vec![0.5; s.num_actions()]).collect();
    let p_bet = 0.3;
    for &s in game.player_states(0) {
        if game.info_state(s).own_depth == 0 {
            rows[s] = vec![1.0 - p_bet, p_bet];
        }
    }
    let policy = TabularPolicy::from_vecs(&game, rows).unwrap();
    let n = 20_000;
    let batch = sample_trajectories(&game, &policy, n, 5).unwrap();
    let bets = batch.episodes.iter().filter(|e| e.steps[0].action == 1).count();
    let freq = bets as f64 / n as f64;
    let sigma = (p_bet * (1.0 - p_bet) / n as f64).sqrt();
    assert!((freq - p_bet).abs() <= 3.0 * sigma, "{freq}");
    assert!(batch.episodes.iter().all(|e| e.steps[0].player == 0));
    assert!(batch.episodes.iter().all(|e| e.utility[0] == -e.utility[1]));
}

#[test]
fn sampling_depends_only_on_seed() {
    let game = kuhn_game();
    let policy = TabularPolicy::uniform(&game);
    let a = sample_trajectories(&game, &policy, 100, 9).unwrap();
    let b = sample_trajectories(&game, &policy, 100, 9).unwrap();
    let c = sample_trajectories(&game, &policy, 100, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let weights: f64 = a.state_weights().iter().map(|w| w.1).sum();
    let steps: usize = a.episodes.iter().map(|e| e.steps.len()).sum();
    assert!((weights - steps as f64 / 100.0).abs() <= 1e-12);
}

#[test]
fn critic_converges_on_repeated_return() {
    let game = kuhn_game();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut critic = Mlp::for_game(&game, 16, &mut rng);
    let state = game.player_states(1)[0];
    let batch = TrajectoryBatch {
        episodes: vec![Episode {
            steps: vec![Step {
                state,
                player: 1,
                action: 1,
            }],
            utility: [-1.5, 1.5],
        }],
    };
    for _ in 0..2000 {
        update_critic(&mut critic, &game, &batch, 1.0, 0.01).unwrap();
    }
    let q = critic_q(&critic, &game, state);
    assert!((q[1] - 1.5).abs() <= 1e-6, "{q:?}");
}

#[test]
fn short_training_reduces_nashconv() {
    let game = kuhn_game();
    let config = TrainConfig {
        policy_updates: 300,
        eval_every: 300,
        tau: 0.1,
        ..TrainConfig::default()
    };
    for algo in [Algo::Neurd, Algo::Spg] {
        let r = train(&game, algo, &config).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.final_nashconv() < r.records[0].nashconv, "{algo}");
        for row in r.policy.states() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

fn targets(game: &neurd::games::GameTree, qs: &[f64]) -> Vec<StateTarget> {
    game.info_states()
        .iter()
        .enumerate()
        .map(|(s, info)| StateTarget {
            state: s,
            weight: 1.0,
            q: (0..info.num_actions()).map(|a| qs[(s * 2 + a) % qs.len()]).collect(),
        })
        .collect()
}

proptest! {
    #[test]
    fn tabular_clipping_keeps_logits_bounded(
        qs in prop::collection::vec(-2.0f64..2.0, 24),
        eta in 0.05f64..1.0,
        beta in 0.5f64..3.0,
        rounds in 1usize..60,
    ) {
        let game = kuhn_game();
        let mut model = TabularLogits::for_game(&game);
        let t = targets(&game, &qs);
        let dq = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - qs.iter().cloned().fold(f64::INFINITY, f64::min);
        for _ in 0..rounds {
            neurd_param_update(&mut model, &game, &t, eta, beta).unwrap();
        }
        for (s, info) in game.info_states().iter().enumerate() {
            for &k in &info.actions {
                let y = model.logit(s, k);
                prop_assert!(y.abs() <= beta + eta * dq + 1e-12);
            }
        }
    }

    #[test]
    fn unclipped_tabular_step_is_neurd(qs in prop::collection::vec(-2.0f64..2.0, 24), eta in 0.05f64..1.0) {
        let game = kuhn_game();
        let mut model = TabularLogits::for_game(&game);
        let t = targets(&game, &qs);
        let stats = neurd_param_update(&mut model, &game, &t, eta, f64::INFINITY).unwrap();
        prop_assert_eq!(stats.clipped, 0);
        for target in &t {
            let info = game.info_state(target.state);
            let v: f64 = target.q.iter().sum::<f64>() / info.num_actions() as f64;
            for (a, &k) in info.actions.iter().enumerate() {
                prop_assert!((model.logit(target.state, k) - eta * (target.q[a] - v)).abs() <= 1e-12);
            }
        }
        prop_assert!(model.params().iter().all(|x| x.is_finite()));
    }
}
