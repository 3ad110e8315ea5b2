//! Continuous-time learning dynamics on two-player matrix games.
//!
//! Two integrators are provided. [`euler_integrate`] steps a field directly on the
//! policy simplex. [`logit_euler_integrate`] steps the logit dynamics
//! `ẏ = q − v` (replicator / NeuRD) or `ẏ = π ⊙ (q − v)` (SPG, whose induced policy
//! field is the QPG field) and maps back through the softmax, so it never leaves the
//! simplex.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::games::MatrixGame;
use crate::learners::softmax;
use crate::policy::SimplexPolicy;

/// Policies of both players.
pub type JointPolicy = [Vec<f64>; 2];

/// `π̇(a) = π(a)[u(a) − π·u]`.
pub fn rd_derivative(pi: &[f64], u: &[f64]) -> Vec<f64> {
    let mean: f64 = pi.iter().zip(u).map(|(p, x)| p * x).sum();
    pi.iter().zip(u).map(|(p, x)| p * (x - mean)).collect()
}

/// `π̇(a) = π(a)(π(a)A(a) − Σ_b π(b)² A(b))`.
pub fn qpg_derivative(pi: &[f64], advantage: &[f64]) -> Vec<f64> {
    let weighted: f64 = pi.iter().zip(advantage).map(|(p, a)| p * p * a).sum();
    pi.iter()
        .zip(advantage)
        .map(|(p, a)| p * (p * a - weighted))
        .collect()
}

/// `‖π̇_RD‖ / ‖π̇_QPG‖` for the payoff vector `u`.
pub fn speed_ratio(pi: &[f64], u: &[f64]) -> f64 {
    let mean: f64 = pi.iter().zip(u).map(|(p, x)| p * x).sum();
    let adv: Vec<f64> = u.iter().map(|x| x - mean).collect();
    norm(&rd_derivative(pi, u)) / norm(&qpg_derivative(pi, &adv))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsKind {
    /// Replicator dynamics, equivalently continuous-time NeuRD.
    Rd,
    /// Q-value policy-gradient dynamics, equivalently continuous-time SPG.
    Qpg,
}

impl DynamicsKind {
    pub fn name(self) -> &'static str {
        match self {
            DynamicsKind::Rd => "rd",
            DynamicsKind::Qpg => "qpg",
        }
    }

    /// Policy-space derivative of both players, evaluated at the same joint policy.
    pub fn field(self, game: &MatrixGame, joint: &JointPolicy) -> JointPolicy {
        let player = |p: usize| {
            let u = game.action_values(p, &joint[1 - p]);
            match self {
                DynamicsKind::Rd => rd_derivative(&joint[p], &u),
                DynamicsKind::Qpg => {
                    let mean: f64 = joint[p].iter().zip(&u).map(|(a, b)| a * b).sum();
                    let adv: Vec<f64> = u.iter().map(|x| x - mean).collect();
                    qpg_derivative(&joint[p], &adv)
                }
            }
        };
        [player(0), player(1)]
    }

    /// Logit-space derivative of both players.
    pub fn logit_field(self, game: &MatrixGame, joint: &JointPolicy) -> JointPolicy {
        let player = |p: usize| {
            let u = game.action_values(p, &joint[1 - p]);
            let mean: f64 = joint[p].iter().zip(&u).map(|(a, b)| a * b).sum();
            u.iter()
                .zip(&joint[p])
                .map(|(x, pi)| match self {
                    DynamicsKind::Rd => x - mean,
                    DynamicsKind::Qpg => pi * (x - mean),
                })
                .collect()
        };
        [player(0), player(1)]
    }
}

impl fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DynamicsKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rd" | "neurd" => Ok(DynamicsKind::Rd),
            "qpg" | "spg" => Ok(DynamicsKind::Qpg),
            _ => Err(Error::InvalidArgument(format!(
                "unknown dynamics `{s}` (valid: rd, qpg)"
            ))),
        }
    }
}

/// Uniformly spaced samples of a joint policy path.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    /// `(time, joint policy)`; the first point is the initial condition at time 0.
    pub points: Vec<(f64, JointPolicy)>,
    /// Number of steps where a negative entry had to be clipped.
    pub clipped_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Clips negative entries to zero and renormalizes, only if some entry is negative.
/// Returns whether clipping happened.
fn project_if_negative(pi: &mut [f64]) -> bool {
    if pi.iter().all(|&p| p >= 0.0) {
        return false;
    }
    for p in pi.iter_mut() {
        *p = p.max(0.0);
    }
    let sum: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= sum;
    }
    true
}

fn check_start(pi0: &JointPolicy) -> Result<()> {
    for p in pi0 {
        SimplexPolicy::new(p.clone())?;
    }
    Ok(())
}

/// Explicit Euler on the policy simplex: `π ← π + dt·field(π)`.
pub fn euler_integrate<F>(field: F, pi0: &JointPolicy, dt: f64, steps: usize) -> Result<Trajectory>
where
    F: Fn(&JointPolicy) -> JointPolicy,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    check_start(pi0)?;
    let mut pi = pi0.clone();
    let mut points = Vec::with_capacity(steps + 1);
    points.push((0.0, pi.clone()));
    let mut clipped_steps = 0;
    for step in 1..=steps {
        let d = field(&pi);
        let mut clipped = false;
        for p in 0..2 {
            ensure_finite(&d[p], &format!("policy derivative at step {step}"))?;
            for (x, dx) in pi[p].iter_mut().zip(&d[p]) {
                *x += dt * dx;
            }
            clipped |= project_if_negative(&mut pi[p]);
        }
        clipped_steps += usize::from(clipped);
        points.push((step as f64 * dt, pi.clone()));
    }
    Ok(Trajectory {
        dt,
        points,
        clipped_steps,
    })
}

/// Euler on the logits, starting from `y = ln π0` (so `π0` must be interior).
pub fn logit_euler_integrate(
    kind: DynamicsKind,
    game: &MatrixGame,
    pi0: &JointPolicy,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    logit_euler_with(kind, |_| game, pi0, dt, steps)
}

/// Like [`logit_euler_integrate`] but the game may change with the step index, for
/// nonstationary payoffs.
pub fn logit_euler_with<'g, G>(
    kind: DynamicsKind,
    game_at: G,
    pi0: &JointPolicy,
    dt: f64,
    steps: usize,
) -> Result<Trajectory>
where
    G: Fn(usize) -> &'g MatrixGame,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    check_start(pi0)?;
    if pi0.iter().flatten().any(|&p| p <= 0.0) {
        return Err(Error::InvalidArgument(
            "logit integration needs an interior starting policy".into(),
        ));
    }
    let mut y: JointPolicy = [
        pi0[0].iter().map(|p| p.ln()).collect(),
        pi0[1].iter().map(|p| p.ln()).collect(),
    ];
    let mut pi = pi0.clone();
    let mut points = Vec::with_capacity(steps + 1);
    points.push((0.0, pi.clone()));
    for step in 1..=steps {
        let d = kind.logit_field(game_at(step - 1), &pi);
        for p in 0..2 {
            ensure_finite(&d[p], &format!("logit derivative at step {step}"))?;
            for (x, dx) in y[p].iter_mut().zip(&d[p]) {
                *x += dt * dx;
            }
        }
        pi = [softmax(&y[0]).into_vec(), softmax(&y[1]).into_vec()];
        points.push((step as f64 * dt, pi.clone()));
    }
    Ok(Trajectory {
        dt,
        points,
        clipped_steps: 0,
    })
}

/// Prefix means of the joint policies along a trajectory.
pub fn time_average(traj: &Trajectory) -> Result<Vec<JointPolicy>> {
    if traj.points.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut sums: JointPolicy = [
        vec![0.0; traj.points[0].1[0].len()],
        vec![0.0; traj.points[0].1[1].len()],
    ];
    Ok(traj
        .points
        .iter()
        .enumerate()
        .map(|(i, (_, joint))| {
            let n = (i + 1) as f64;
            let mut avg: JointPolicy = [Vec::new(), Vec::new()];
            for p in 0..2 {
                for (s, x) in sums[p].iter_mut().zip(&joint[p]) {
                    *s += x;
                }
                avg[p] = sums[p].iter().map(|s| s / n).collect();
            }
            avg
        })
        .collect())
}

/// Uniform sample from the probability simplex (normalized exponential spacings).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|x| x / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::rps_game;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rd_examples() {
        let rps = rps_game(1.0).unwrap();
        let uniform = vec![1.0 / 3.0; 3];
        let u = rps.row_action_values(&uniform);
        assert!(close(&rd_derivative(&uniform, &u), &[0.0; 3], 1e-15));
        assert_eq!(rd_derivative(&[1.0, 0.0, 0.0], &[3.0, -1.0, 2.0]), vec![0.0; 3]);
        assert!(close(&rd_derivative(&[0.5, 0.5], &[1.0, 0.0]), &[0.25, -0.25], 1e-15));
    }

    #[test]
    fn qpg_examples() {
        assert_eq!(qpg_derivative(&[0.2, 0.8], &[0.0, 0.0]), vec![0.0, 0.0]);
        assert!(close(&qpg_derivative(&[0.5, 0.5], &[1.0, -1.0]), &[0.25, -0.25], 1e-15));
    }

    #[test]
    fn speed_ratio_larger_near_vertex() {
        let g = rps_game(3.0).unwrap();
        let opp = [0.2, 0.5, 0.3];
        let u = g.row_action_values(&opp);
        let centre = speed_ratio(&[1.0 / 3.0; 3], &u);
        let vertex = speed_ratio(&[0.96, 0.02, 0.02], &u);
        assert!(vertex > centre, "{vertex} <= {centre}");
    }

    #[test]
    fn zero_field_gives_constant_trajectory() {
        let pi0: JointPolicy = [vec![0.2, 0.3, 0.5], vec![0.6, 0.2, 0.2]];
        let t = euler_integrate(|_| [vec![0.0; 3], vec![0.0; 3]], &pi0, 0.1, 20).unwrap();
        assert_eq!(t.len(), 21);
        assert!(t.points.iter().all(|(_, j)| *j == pi0));
        let avg = time_average(&t).unwrap();
        assert!(avg.iter().all(|j| close(&j[0], &pi0[0], 1e-15)));
    }

    #[test]
    fn non_finite_field_aborts() {
        let pi0: JointPolicy = [vec![0.5, 0.5], vec![0.5, 0.5]];
        let r = euler_integrate(|_| [vec![f64::NAN, 0.0], vec![0.0, 0.0]], &pi0, 0.1, 3);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
        assert!(euler_integrate(|_| [vec![0.0; 2], vec![0.0; 2]], &pi0, 0.0, 3).is_err());
    }

    #[test]
    fn clipping_fires_only_when_needed() {
        let pi0: JointPolicy = [vec![0.1, 0.9], vec![0.5, 0.5]];
        let t = euler_integrate(|_| [vec![-1.0, 1.0], vec![0.0, 0.0]], &pi0, 0.5, 1).unwrap();
        assert_eq!(t.clipped_steps, 1);
        assert_eq!(t.points[1].1[0], vec![0.0, 1.0]);
    }

    #[test]
    fn rd_cycles_in_standard_rps() {
        let g = rps_game(1.0).unwrap();
        let pi0: JointPolicy = [vec![0.5, 0.3, 0.2], vec![0.3, 0.3, 0.4]];
        let t = euler_integrate(|j| DynamicsKind::Rd.field(&g, j), &pi0, 0.01, 5000).unwrap();
        assert_eq!(t.clipped_steps, 0);
        // Σ_p KL(uniform ‖ π_p) is conserved by the flow; Euler lets it creep up slowly.
        let kl = |j: &JointPolicy| {
            j.iter()
                .flat_map(|p| p.iter())
                .map(|&x| -(3.0 * x).ln() / 3.0)
                .sum::<f64>()
        };
        let h0 = kl(&pi0);
        assert!(h0 > 0.0);
        for (_, j) in &t.points {
            let h = kl(j);
            assert!(h >= h0 - 1e-9 && h <= 1.25 * h0, "{h} vs {h0}");
        }
    }

    #[test]
    fn time_average_of_two_vertices() {
        let t = Trajectory {
            dt: 1.0,
            points: vec![
                (0.0, [vec![1.0, 0.0], vec![1.0, 0.0]]),
                (1.0, [vec![0.0, 1.0], vec![0.0, 1.0]]),
            ],
            clipped_steps: 0,
        };
        let avg = time_average(&t).unwrap();
        assert_eq!(avg[1][0], vec![0.5, 0.5]);
        let empty = Trajectory {
            dt: 1.0,
            points: vec![],
            clipped_steps: 0,
        };
        assert!(time_average(&empty).is_err());
    }

    #[test]
    fn logit_and_policy_integrators_agree_for_small_dt() {
        let g = rps_game(3.0).unwrap();
        let pi0: JointPolicy = [vec![0.5, 0.3, 0.2], vec![0.3, 0.3, 0.4]];
        for kind in [DynamicsKind::Rd, DynamicsKind::Qpg] {
            let a = euler_integrate(|j| kind.field(&g, j), &pi0, 1e-4, 2000).unwrap();
            let b = logit_euler_integrate(kind, &g, &pi0, 1e-4, 2000).unwrap();
            let (ja, jb) = (&a.points[2000].1, &b.points[2000].1);
            assert!(close(&ja[0], &jb[0], 1e-4) && close(&ja[1], &jb[1], 1e-4), "{kind}");
        }
    }

    #[test]
    fn simplex_samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = sample_simplex(&mut rng, 3);
            assert!(SimplexPolicy::new(s).is_ok());
        }
    }
}
