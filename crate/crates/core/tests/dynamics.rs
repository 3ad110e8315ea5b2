use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use neurd::dynamics::{
    euler_integrate, logit_euler_integrate, logit_euler_with, qpg_derivative, rd_derivative, sample_simplex,
    speed_ratio, time_average, DynamicsKind,
};
use neurd::games::{rps_game, RewardSchedule};

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn fields_preserve_total_mass(pi in simplex(4), u in prop::collection::vec(-3.0f64..3.0, 4)) {
        let rd: f64 = rd_derivative(&pi, &u).iter().sum();
        prop_assert!(rd.abs() <= 1e-12);
        let v: f64 = pi.iter().zip(&u).map(|(p, x)| p * x).sum();
        let adv: Vec<f64> = u.iter().map(|x| x - v).collect();
        let qpg: f64 = qpg_derivative(&pi, &adv).iter().sum();
        prop_assert!(qpg.abs() <= 1e-12);
    }

    #[test]
    fn qpg_is_n_times_slower_at_uniform(n in 2usize..7, u in prop::collection::vec(-3.0f64..3.0, 7)) {
        let u = &u[..n];
        prop_assume!(u.iter().any(|x| (x - u[0]).abs() > 1e-3));
        let pi = vec![1.0 / n as f64; n];
        prop_assert!((speed_ratio(&pi, u) - n as f64).abs() <= 1e-9);
    }

    #[test]
    fn euler_stays_on_simplex(seed in 0u64..500, dt in 0.001f64..0.1) {
        let game = rps_game(3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pi0 = [sample_simplex(&mut rng, 3), sample_simplex(&mut rng, 3)];
        let traj = euler_integrate(|j| DynamicsKind::Rd.field(&game, j), &pi0, dt, 200).unwrap();
        for (_, joint) in &traj.points {
            for p in joint {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(p.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn sampled_points_are_on_simplex(seed in 0u64..1000, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = sample_simplex(&mut rng, n);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn small_steps_never_clip() {
    let game = rps_game(3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let pi0 = [sample_simplex(&mut rng, 3), sample_simplex(&mut rng, 3)];
        for kind in [DynamicsKind::Rd, DynamicsKind::Qpg] {
            let traj = euler_integrate(|j| kind.field(&game, j), &pi0, 0.01, 2000).unwrap();
            assert_eq!(traj.clipped_steps, 0);
        }
    }
}

#[test]
fn policy_and_logit_integrators_agree_for_small_dt() {
    let game = rps_game(3.0).unwrap();
    let pi0 = [vec![0.5, 0.3, 0.2], vec![0.1, 0.3, 0.6]];
    let dt = 1e-4;
    let steps = 10_000;
    let a = euler_integrate(|j| DynamicsKind::Rd.field(&game, j), &pi0, dt, steps).unwrap();
    let b = logit_euler_integrate(DynamicsKind::Rd, &game, &pi0, dt, steps).unwrap();
    let (pa, pb) = (&a.points[steps].1, &b.points[steps].1);
    for p in 0..2 {
        for (x, y) in pa[p].iter().zip(&pb[p]) {
            assert!((x - y).abs() <= 1e-3, "{x} vs {y}");
        }
    }
}

#[test]
fn time_average_of_rd_approaches_equilibrium() {
    let game = rps_game(3.0).unwrap();
    let pi0 = [vec![0.6, 0.2, 0.2], vec![0.3, 0.3, 0.4]];
    let traj = logit_euler_integrate(DynamicsKind::Rd, &game, &pi0, 0.1, 10_000).unwrap();
    let avg = time_average(&traj).unwrap();
    let early = &avg[100];
    let late = avg.last().unwrap();
    assert!(game.nashconv(&late[0], &late[1]) < game.nashconv(&early[0], &early[1]));
    assert!(game.nashconv(&late[0], &late[1]) < 0.1);
}

#[test]
fn nonstationary_games_switch_at_boundaries() {
    let schedule: RewardSchedule = "nu=20,50:nu=0".parse().unwrap();
    let games = schedule.phase_games(&rps_game(1.0).unwrap()).unwrap();
    let pi0 = [vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25]];
    let switched = logit_euler_with(
        DynamicsKind::Rd,
        |step| &games[schedule.phase_at(step)],
        &pi0,
        0.01,
        100,
    )
    .unwrap();
    let first = logit_euler_integrate(DynamicsKind::Rd, &games[0], &pi0, 0.01, 50).unwrap();
    assert_eq!(switched.points[50].1, first.points[50].1);
    let second = logit_euler_integrate(DynamicsKind::Rd, &games[1], &first.points[50].1, 0.01, 50).unwrap();
    for p in 0..2 {
        for (x, y) in switched.points[100].1[p].iter().zip(&second.points[50].1[p]) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let game = rps_game(1.0).unwrap();
    let interior = [vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25]];
    assert!(logit_euler_integrate(DynamicsKind::Rd, &game, &interior, 0.0, 10).is_err());
    let boundary = [vec![1.0, 0.0, 0.0], vec![0.25, 0.5, 0.25]];
    assert!(logit_euler_integrate(DynamicsKind::Rd, &game, &boundary, 0.1, 10).is_err());
    let off = [vec![0.5, 0.6, 0.25], vec![0.25, 0.5, 0.25]];
    assert!(euler_integrate(|j| DynamicsKind::Rd.field(&game, j), &off, 0.1, 10).is_err());
    assert!("lotka".parse::<DynamicsKind>().is_err());
}
