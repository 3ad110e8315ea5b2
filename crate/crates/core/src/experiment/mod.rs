//! Experiment runner: configs and presets, per-seed jobs, CSV output and summaries.

mod config;
mod stats;

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{parse_seeds, ExperimentConfig, ExperimentKind, Settings, CONFIG_KEYS, PRESET_NAMES};
pub use stats::{bootstrap_ci, mean, DEFAULT_RESAMPLES};

use crate::cfr::{measured_regret, regret_bound, CfrSolver, CfrStepSize};
use crate::dynamics::{euler_integrate, logit_euler_with, sample_simplex, DynamicsKind, JointPolicy, Trajectory};
use crate::error::{Error, Result};
use crate::eval::{matrix_report, nashconv_of, PolicyKind};
use crate::learners::{run_repeated_game, sweep_step_size, LearnerKind, StepSize, DEFAULT_ETA_GRID};
use crate::neural::{train, Algo, TrainConfig};

pub const SUMMARY_HEADER: [&str; 8] = ["experiment", "algo", "setting", "metric", "n", "mean", "ci_low", "ci_high"];

/// One CSV table held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Samples feeding one summary row.
#[derive(Debug, Clone, PartialEq)]
struct SummaryGroup {
    algo: String,
    setting: String,
    metric: &'static str,
    samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: PathBuf,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Runs an experiment with up to `workers` threads and writes one CSV per job plus
/// `<name>_summary.csv`. Files already written are removed if anything fails.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let (tables, groups) = pool.install(|| match config.kind {
        ExperimentKind::Pennies => run_pennies(config),
        ExperimentKind::Dynamics => run_dynamics(config),
        ExperimentKind::Cfr => run_cfr(config),
        ExperimentKind::Train => run_train(config),
    })?;
    let mut written = Vec::new();
    let result = write_all(config, &tables, &groups, &mut written);
    match result {
        Ok(summary) => Ok(RunOutput {
            files: written[..written.len() - 1].to_vec(),
            summary,
        }),
        Err(e) => {
            for f in &written {
                let _ = fs::remove_file(f);
            }
            Err(e)
        }
    }
}

fn write_all(
    config: &ExperimentConfig,
    tables: &[Table],
    groups: &[SummaryGroup],
    written: &mut Vec<PathBuf>,
) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir)?;
    for t in tables {
        let path = config.out_dir.join(&t.file_name);
        written.push(path.clone());
        write_table(&path, &t.header, &t.rows)?;
    }
    let path = config.out_dir.join(format!("{}_summary.csv", config.name));
    written.push(path.clone());
    let seed = config.seeds[0];
    let mut rows = Vec::new();
    for g in groups {
        let (lo, hi) = if g.samples.len() >= 2 {
            let (lo, hi) = bootstrap_ci(&g.samples, DEFAULT_RESAMPLES, 0.95, seed)?;
            (fmt(lo), fmt(hi))
        } else {
            (String::new(), String::new())
        };
        rows.push(vec![
            config.name.clone(),
            g.algo.clone(),
            g.setting.clone(),
            g.metric.to_string(),
            g.samples.len().to_string(),
            fmt(mean(&g.samples)),
            lo,
            hi,
        ]);
    }
    write_table(&path, &SUMMARY_HEADER, &rows)?;
    Ok(path)
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

type Output = (Vec<Table>, Vec<SummaryGroup>);

fn run_pennies(c: &ExperimentConfig) -> Result<Output> {
    let mut jobs = Vec::new();
    for a in &c.algos {
        let learner: LearnerKind = a.parse()?;
        for e in &c.etas {
            jobs.push((learner, e.clone()));
        }
    }
    let runs = jobs
        .par_iter()
        .map(|(learner, e)| {
            let eta = if e == "auto" {
                sweep_step_size(*learner, c.horizon, c.forfeit, &DEFAULT_ETA_GRID)?.0
            } else {
                e.parse::<f64>()
                    .map_err(|err| Error::Config(format!("bad eta `{e}`: {err}")))?
            };
            Ok((eta, run_repeated_game(*learner, c.horizon, StepSize::Constant(eta), c.forfeit)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::new();
    let mut groups = Vec::new();
    for &seed in &c.seeds {
        // The protocol has no randomness; every seed reproduces the same table.
        let mut rows = Vec::new();
        for (eta, run) in &runs {
            for r in &run.trace {
                for a in 0..r.policy.len() {
                    rows.push(vec![
                        r.round.to_string(),
                        a.to_string(),
                        fmt(r.logits[a]),
                        fmt(r.policy[a]),
                        fmt(r.regrets[a]),
                        run.learner.to_string(),
                        fmt(*eta),
                        c.forfeit.to_string(),
                    ]);
                }
            }
        }
        tables.push(Table {
            file_name: format!("{}_seed{seed}.csv", c.name),
            header: vec!["round", "action", "logit", "prob", "regret", "learner", "eta", "forfeit"],
            rows,
        });
    }
    for (eta, run) in &runs {
        groups.push(SummaryGroup {
            algo: run.learner.to_string(),
            setting: format!("eta={eta}"),
            metric: "final_regret",
            samples: vec![run.final_regret(); c.seeds.len()],
        });
    }
    Ok((tables, groups))
}

/// Prefix means that restart at every phase boundary of the schedule.
fn phase_averages(traj: &Trajectory, c: &ExperimentConfig) -> Vec<JointPolicy> {
    let mut out = Vec::with_capacity(traj.len());
    let mut sums: Option<JointPolicy> = None;
    let mut count = 0.0;
    let mut phase = 0;
    for (step, (_, joint)) in traj.points.iter().enumerate() {
        // point `step` was produced by the game of step `step − 1`
        let p = c.schedule.phase_at(step.saturating_sub(1));
        if p != phase {
            phase = p;
            sums = None;
            count = 0.0;
        }
        let s = sums.get_or_insert_with(|| [vec![0.0; joint[0].len()], vec![0.0; joint[1].len()]]);
        for k in 0..2 {
            for (a, x) in s[k].iter_mut().zip(&joint[k]) {
                *a += x;
            }
        }
        count += 1.0;
        out.push([
            s[0].iter().map(|x| x / count).collect(),
            s[1].iter().map(|x| x / count).collect(),
        ]);
    }
    out
}

fn run_dynamics(c: &ExperimentConfig) -> Result<Output> {
    let base = c.game.matrix().expect("validated as a matrix game");
    let games = c.schedule.phase_games(&base)?;
    let kinds: Vec<DynamicsKind> = c.algos.iter().map(|a| a.parse()).collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for &k in &kinds {
        for &seed in &c.seeds {
            jobs.push((k, seed));
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(kind, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::new();
            let mut finals = Vec::new();
            for id in 0..c.trajectories {
                let pi0: JointPolicy = [
                    sample_simplex(&mut rng, base.num_actions_row()),
                    sample_simplex(&mut rng, base.num_actions_col()),
                ];
                let game_at = |step: usize| &games[c.schedule.phase_at(step)];
                let traj = if c.integrator == "logit" {
                    logit_euler_with(kind, game_at, &pi0, c.dt, c.horizon)?
                } else if c.schedule.num_phases() == 1 {
                    euler_integrate(|j| kind.field(&games[0], j), &pi0, c.dt, c.horizon)?
                } else {
                    return Err(Error::Config(
                        "the policy integrator only supports stationary games".into(),
                    ));
                };
                let avgs = phase_averages(&traj, c);
                let mut last = f64::NAN;
                for (step, ((time, joint), avg)) in traj.points.iter().zip(&avgs).enumerate() {
                    let g = &games[c.schedule.phase_at(step.saturating_sub(1))];
                    last = matrix_report(g, &avg[0], &avg[1], PolicyKind::PrefixMean).nashconv;
                    if step % c.eval_every != 0 && step != c.horizon {
                        continue;
                    }
                    for p in 0..2 {
                        for a in 0..joint[p].len() {
                            rows.push(vec![
                                id.to_string(),
                                step.to_string(),
                                fmt(*time),
                                p.to_string(),
                                a.to_string(),
                                fmt(joint[p][a]),
                                fmt(avg[p][a]),
                                fmt(last),
                            ]);
                        }
                    }
                }
                finals.push(last);
            }
            Ok((kind, seed, rows, finals))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::new();
    let mut groups: Vec<SummaryGroup> = Vec::new();
    for (kind, seed, rows, finals) in results {
        tables.push(Table {
            file_name: format!("{}_{kind}_seed{seed}.csv", c.name),
            header: vec![
                "trajectory_id",
                "step",
                "time",
                "player",
                "action",
                "prob",
                "avg_prob",
                "nashconv_avg",
            ],
            rows,
        });
        match groups.iter_mut().find(|g| g.algo == kind.name()) {
            Some(g) => g.samples.extend(finals),
            None => groups.push(SummaryGroup {
                algo: kind.to_string(),
                setting: format!("dt={}", c.dt),
                metric: "final_nashconv_avg",
                samples: finals,
            }),
        }
    }
    Ok((tables, groups))
}

fn run_cfr(c: &ExperimentConfig) -> Result<Output> {
    let game = c.game.tree();
    let mut jobs = Vec::new();
    for a in &c.algos {
        let learner: LearnerKind = a.parse()?;
        for e in &c.etas {
            let step: CfrStepSize = e.parse().map_err(|err: Error| Error::Config(err.to_string()))?;
            jobs.push((learner, e.clone(), step));
        }
    }
    let results = jobs
        .par_iter()
        .map(|(learner, eta, step)| {
            let mut solver = CfrSolver::with_schedule(&game, *learner, *step, c.schedule.clone())?;
            let mut rows = Vec::new();
            let mut last = f64::NAN;
            for it in 1..=c.horizon {
                let phase = solver.phase();
                solver.step();
                if it % c.eval_every != 0 && it != c.horizon {
                    continue;
                }
                let g = solver.game_of_phase(phase);
                last = nashconv_of(g, &solver.average_policy(), PolicyKind::SequenceAverage).nashconv;
                rows.push(vec![
                    it.to_string(),
                    phase.to_string(),
                    learner.to_string(),
                    eta.clone(),
                    fmt(last),
                    fmt(measured_regret(&game, &solver.table, 0)),
                    fmt(measured_regret(&game, &solver.table, 1)),
                    fmt(regret_bound(&game, 0, it)),
                    fmt(regret_bound(&game, 1, it)),
                ]);
            }
            Ok((learner.to_string(), eta.clone(), rows, last))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = results.iter().flat_map(|r| r.2.clone()).collect();
    let tables = c
        .seeds
        .iter()
        .map(|seed| Table {
            file_name: format!("{}_seed{seed}.csv", c.name),
            header: vec![
                "iter", "phase", "learner", "eta", "nashconv", "regret_p0", "regret_p1", "bound_p0",
                "bound_p1",
            ],
            rows: rows.clone(),
        })
        .collect();
    let groups = results
        .into_iter()
        .map(|(algo, eta, _, last)| SummaryGroup {
            algo,
            setting: format!("eta={eta}"),
            metric: "final_nashconv",
            samples: vec![last; c.seeds.len()],
        })
        .collect();
    Ok((tables, groups))
}

fn run_train(c: &ExperimentConfig) -> Result<Output> {
    let game = c.game.tree();
    let mut jobs = Vec::new();
    for a in &c.algos {
        let algo: Algo = a.parse()?;
        for &seed in &c.seeds {
            for &tau in &c.taus {
                jobs.push((algo, seed, tau));
            }
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(algo, seed, tau)| {
            let cfg = TrainConfig {
                hidden: c.hidden,
                policy_updates: c.horizon,
                critic_updates_per_policy: c.critic_updates,
                policy_batch: c.policy_batch,
                critic_batch: c.critic_batch,
                policy_lr: c.policy_lr,
                critic_lr: c.critic_lr,
                tau,
                beta: c.beta,
                gamma: 1.0,
                eval_every: c.eval_every,
                schedule: c.schedule.clone(),
                seed,
            };
            Ok((algo, seed, tau, train(&game, algo, &cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tables: Vec<Table> = Vec::new();
    let mut groups: Vec<SummaryGroup> = Vec::new();
    for (algo, seed, tau, r) in results {
        let name = format!("{}_{algo}_seed{seed}.csv", c.name);
        let rows = r.records.iter().map(|rec| {
            vec![
                seed.to_string(),
                rec.update.to_string(),
                rec.phase.to_string(),
                fmt(tau),
                fmt(rec.nashconv),
            ]
        });
        match tables.iter_mut().find(|t| t.file_name == name) {
            Some(t) => t.rows.extend(rows),
            None => tables.push(Table {
                file_name: name,
                header: vec!["seed", "update", "phase", "tau", "nashconv"],
                rows: rows.collect(),
            }),
        }
        let setting = format!("tau={tau}");
        match groups.iter_mut().find(|g| g.algo == algo.name() && g.setting == setting) {
            Some(g) => g.samples.push(r.final_nashconv()),
            None => groups.push(SummaryGroup {
                algo: algo.to_string(),
                setting,
                metric: "final_nashconv",
                samples: vec![r.final_nashconv()],
            }),
        }
    }
    Ok((tables, groups))
}
