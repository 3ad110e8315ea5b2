use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use neurd::dynamics::sample_simplex;
use neurd::eval::{best_response, expected_value, matrix_report, nashconv, PolicyKind};
use neurd::games::{kuhn_game, leduc_game, rps_game, GameTree, MatrixGame};
use neurd::policy::TabularPolicy;

fn random_policy(game: &GameTree, rng: &mut ChaCha8Rng) -> TabularPolicy {
    let rows = game
        .info_states()
        .iter()
        .map(|s| sample_simplex(rng, s.num_actions()))
        .collect();
    TabularPolicy::from_vecs(game, rows).unwrap()
}

/// Replaces `player`'s part of `base` with `other`'s.
fn splice(game: &GameTree, base: &TabularPolicy, other: &TabularPolicy, player: usize) -> TabularPolicy {
    let mut out = base.clone();
    for &s in game.player_states(player) {
        out.set(s, other.get(s));
    }
    out
}

#[test]
fn best_response_beats_random_responses() {
    for game in [kuhn_game(), leduc_game()] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let policy = random_policy(&game, &mut rng);
        for player in 0..2 {
            let br = best_response(&game, &policy, player);
            let applied = br.apply(&game, &policy, player);
            let v = expected_value(&game, &applied)[player];
            assert!((v - br.value).abs() <= 1e-10);
            for _ in 0..50 {
                let other = random_policy(&game, &mut rng);
                let mixed = splice(&game, &policy, &other, player);
                assert!(expected_value(&game, &mixed)[player] <= br.value + 1e-12);
            }
        }
    }
}

#[test]
fn kuhn_uniform_nashconv_is_positive() {
    let game = kuhn_game();
    let r = nashconv(&game, &TabularPolicy::uniform(&game));
    assert!(r.nashconv > 0.1);
    assert!((r.expected_values[0] + r.expected_values[1]).abs() <= 1e-12);
}

/// Full-support equilibrium of a square zero-sum game: solves `A y = v 1`, `Σ y = 1`
/// and the row counterpart by Gaussian elimination.
fn full_support_equilibrium(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let n = a.len();
    let solve = |rows: Vec<Vec<f64>>| -> Vec<f64> {
        // unknowns: x_0..x_{n-1}, v
        let mut m = rows;
        let k = n + 1;
        for c in 0..k {
            let p = (c..k).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            for r in 0..k {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for j in c..=k {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
        (0..k).map(|i| m[i][k] / m[i][i]).collect()
    };
    let mut col_sys: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r: Vec<f64> = a[i].clone();
            r.push(-1.0);
            r.push(0.0);
            r
        })
        .collect();
    let mut ones = vec![1.0; n];
    ones.extend([0.0, 1.0]);
    col_sys.push(ones.clone());
    let y = solve(col_sys);
    let mut row_sys: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut r: Vec<f64> = (0..n).map(|i| a[i][j]).collect();
            r.push(-1.0);
            r.push(0.0);
            r
        })
        .collect();
    row_sys.push(ones);
    let x = solve(row_sys);
    (x[..n].to_vec(), y[..n].to_vec(), y[n])
}

#[test]
fn biased_rps_equilibrium() {
    let game = rps_game(3.0).unwrap();
    let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| game.payoff(i, j)).collect()).collect();
    let (x, y, v) = full_support_equilibrium(&a);
    assert!(x.iter().chain(&y).all(|&p| p > 0.0));
    assert!(v.abs() <= 1e-12);
    assert!(game.nashconv(&x, &y) <= 1e-12);
    for (p, want) in y.iter().zip([0.2, 0.6, 0.2]) {
        assert!((p - want).abs() <= 1e-12);
    }
    let tree = game.to_tree();
    let policy = matrix_policy(&tree, &x, &y);
    assert!(nashconv(&tree, &policy).nashconv <= 1e-12);
    assert!(game.nashconv(&[1.0, 0.0, 0.0], &y) > 0.1);
}

fn matrix_policy(tree: &GameTree, row: &[f64], col: &[f64]) -> TabularPolicy {
    let mut rows = vec![Vec::new(); 2];
    rows[tree.info_state_index("0|").unwrap()] = row.to_vec();
    rows[tree.info_state_index("1|").unwrap()] = col.to_vec();
    TabularPolicy::from_vecs(tree, rows).unwrap()
}

fn matrix_and_policies() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (2usize..5, 2usize..5).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), n),
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(0.01f64..1.0, m),
        )
    })
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

proptest! {
    #[test]
    fn matrix_and_tree_nashconv_agree((payoffs, row, col) in matrix_and_policies()) {
        let game = MatrixGame::new("m", payoffs).unwrap();
        let (row, col) = (normalize(&row), normalize(&col));
        let tree = game.to_tree();
        let t = nashconv(&tree, &matrix_policy(&tree, &row, &col));
        let m = matrix_report(&game, &row, &col, PolicyKind::Current);
        prop_assert!((t.nashconv - m.nashconv).abs() <= 1e-12);
        prop_assert!((m.nashconv - game.nashconv(&row, &col)).abs() <= 1e-12);
        prop_assert!(m.nashconv >= -1e-12);
    }

    #[test]
    fn nashconv_invariant_under_relabeling((payoffs, row, col) in matrix_and_policies(), shift in 0usize..8) {
        let (row, col) = (normalize(&row), normalize(&col));
        let (n, m) = (payoffs.len(), payoffs[0].len());
        let rp: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let cp: Vec<usize> = (0..m).map(|j| (j + shift / 2) % m).rev().collect();
        let permuted: Vec<Vec<f64>> = rp.iter().map(|&i| cp.iter().map(|&j| payoffs[i][j]).collect()).collect();
        let prow: Vec<f64> = rp.iter().map(|&i| row[i]).collect();
        let pcol: Vec<f64> = cp.iter().map(|&j| col[j]).collect();
        let a = MatrixGame::new("a", payoffs).unwrap().nashconv(&row, &col);
        let b = MatrixGame::new("b", permuted).unwrap().nashconv(&prow, &pcol);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn nashconv_scales_with_utilities(seed in 0u64..1000, factor in 0.1f64..10.0) {
        let game = kuhn_game();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = random_policy(&game, &mut rng);
        let a = nashconv(&game, &policy).nashconv;
        let b = nashconv(&game.scaled(factor), &policy).nashconv;
        prop_assert!((a * factor - b).abs() <= 1e-10);
        prop_assert!(a >= -1e-12);
    }
}
