//! Counterfactual regret minimization with softmax-parameterized local learners.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{reach_probabilities, Reach};
use crate::games::{GameTree, NodeKind, RewardSchedule};
use crate::learners::{softmax, LearnerKind};
use crate::policy::{LogitVector, SimplexPolicy, TabularPolicy};

/// Step sizes from the Leduc comparison grid.
pub const LEDUC_ETA_GRID: [f64; 9] = [0.5, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// Counterfactual quantities for one player's information states.
///
/// Vectors are indexed by global info-state index; entries for the other player's
/// states are left empty / zero.
#[derive(Debug, Clone)]
pub struct CounterfactualState {
    pub player: usize,
    pub q: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    /// Opponent-and-chance reach mass summed over the histories of each state.
    pub beta: Vec<f64>,
}

impl CounterfactualState {
    pub fn reachable(&self, state: usize) -> bool {
        self.beta[state] > 0.0
    }
}

/// Expected value for `player` at every node when everyone follows `policy`.
pub fn history_values(game: &GameTree, policy: &TabularPolicy, player: usize) -> Vec<f64> {
    let mut values = vec![0.0; game.num_nodes()];
    for id in (0..game.num_nodes()).rev() {
        values[id] = match &game.node(id).kind {
            NodeKind::Terminal { utility } => utility[player],
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(p, c)| p * values[c]).sum(),
            NodeKind::Decision {
                info_state,
                children,
                ..
            } => policy
                .get(*info_state)
                .iter()
                .zip(children)
                .map(|(pr, &c)| pr * values[c])
                .sum(),
        };
    }
    values
}

pub fn counterfactual_values(
    game: &GameTree,
    policy: &TabularPolicy,
    player: usize,
) -> CounterfactualState {
    let reach = reach_probabilities(game, policy);
    counterfactual_values_with(game, policy, player, &reach)
}

fn counterfactual_values_with(
    game: &GameTree,
    policy: &TabularPolicy,
    player: usize,
    reach: &Reach,
) -> CounterfactualState {
    let values = history_values(game, policy, player);
    let n = game.num_info_states();
    let mut q: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &s in game.player_states(player) {
        q[s] = vec![0.0; game.info_state(s).num_actions()];
    }
    let mut beta = vec![0.0; n];
    for (id, node) in game.nodes().iter().enumerate() {
        if let NodeKind::Decision {
            player: p,
            info_state,
            children,
        } = &node.kind
        {
            if *p != player {
                continue;
            }
            let w = reach.others(id, player);
            beta[*info_state] += w;
            for (acc, &c) in q[*info_state].iter_mut().zip(children) {
                *acc += w * values[c];
            }
        }
    }
    let mut v = vec![0.0; n];
    for &s in game.player_states(player) {
        if beta[s] > 0.0 {
            for x in q[s].iter_mut() {
                *x /= beta[s];
            }
            v[s] = policy.get(s).iter().zip(&q[s]).map(|(p, x)| p * x).sum();
        } else {
            q[s].iter_mut().for_each(|x| *x = 0.0);
        }
    }
    CounterfactualState { player, q, v, beta }
}

/// Learner state for one information state.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub logits: LogitVector,
    pub policy: SimplexPolicy,
    /// `Σ_t ρ_i(s) π_t(s)`.
    pub average: Vec<f64>,
    /// `Σ_t β_{−i}(s) (q(s,·) − v(s))`.
    pub cum_regret: Vec<f64>,
    pub visits: usize,
}

impl TableEntry {
    pub fn new(num_actions: usize) -> Self {
        Self {
            logits: LogitVector::zeros(num_actions),
            policy: SimplexPolicy::uniform(num_actions),
            average: vec![0.0; num_actions],
            cum_regret: vec![0.0; num_actions],
            visits: 0,
        }
    }

    /// Normalized accumulated policy, uniform if nothing was accumulated.
    pub fn average_policy(&self) -> SimplexPolicy {
        SimplexPolicy::normalize(&self.average)
    }
}

/// Per-information-state learner entries, indexed by global info-state index.
#[derive(Debug, Clone)]
pub struct InfoStateTable {
    entries: Vec<TableEntry>,
}

impl InfoStateTable {
    pub fn new(game: &GameTree) -> Self {
        Self {
            entries: game
                .info_states()
                .iter()
                .map(|s| TableEntry::new(s.num_actions()))
                .collect(),
        }
    }

    pub fn entry(&self, state: usize) -> &TableEntry {
        &self.entries[state]
    }

    pub fn entry_mut(&mut self, state: usize) -> &mut TableEntry {
        &mut self.entries[state]
    }

    pub fn by_key<'a>(&'a self, game: &GameTree, key: &str) -> Result<&'a TableEntry> {
        game.info_state_index(key)
            .map(|s| &self.entries[s])
            .ok_or_else(|| Error::UnknownInfoState(key.to_string()))
    }

    pub fn current_policy(&self) -> TabularPolicy {
        TabularPolicy::from_rows(self.entries.iter().map(|e| e.policy.to_vec()).collect())
    }

    pub fn average_policy(&self) -> TabularPolicy {
        average_policy(self)
    }
}

/// Normalized average sequence weights; states with no mass fall back to uniform.
pub fn average_policy(table: &InfoStateTable) -> TabularPolicy {
    TabularPolicy::from_rows(
        table
            .entries
            .iter()
            .map(|e| e.average_policy().into_vec())
            .collect(),
    )
}

/// Applies one local learner step using the counterfactual regrets of `state`.
///
/// The cumulative counterfactual regret is tracked alongside. Unreachable states are
/// left untouched.
pub fn cfr_local_update(
    entry: &mut TableEntry,
    cf: &CounterfactualState,
    state: usize,
    learner: LearnerKind,
    eta: f64,
) {
    let beta = cf.beta[state];
    if beta <= 0.0 {
        return;
    }
    let regret: Vec<f64> = cf.q[state].iter().map(|q| beta * (q - cf.v[state])).collect();
    for (acc, r) in entry.cum_regret.iter_mut().zip(&regret) {
        *acc += r;
    }
    match learner {
        // Follow-the-regularized-leader form: logits are the scaled cumulative regret.
        LearnerKind::Hedge => {
            for (y, r) in entry.logits.0.iter_mut().zip(&entry.cum_regret) {
                *y = eta * r;
            }
        }
        LearnerKind::Neurd => {
            for (y, r) in entry.logits.0.iter_mut().zip(&regret) {
                *y += eta * r;
            }
        }
        LearnerKind::Spg => {
            for ((y, r), p) in entry.logits.0.iter_mut().zip(&regret).zip(entry.policy.iter()) {
                *y += eta * p * r;
            }
        }
    }
    entry.policy = softmax(&entry.logits);
    entry.visits += 1;
}

/// Per-state step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfrStepSize {
    Constant(f64),
    /// `√(2 ln|A(s)| / T)` for a known horizon `T`.
    BoundTuned { horizon: usize },
}

impl CfrStepSize {
    pub fn eta(&self, num_actions: usize) -> f64 {
        match *self {
            CfrStepSize::Constant(eta) => eta,
            CfrStepSize::BoundTuned { horizon } => {
                (2.0 * (num_actions as f64).ln() / horizon as f64).sqrt()
            }
        }
    }
}

impl fmt::Display for CfrStepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfrStepSize::Constant(eta) => write!(f, "{eta}"),
            CfrStepSize::BoundTuned { horizon } => write!(f, "bound:{horizon}"),
        }
    }
}

impl FromStr for CfrStepSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(h) = s.strip_prefix("bound:") {
            let horizon: usize = h
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad horizon `{h}`: {e}")))?;
            if horizon == 0 {
                return Err(Error::InvalidArgument("horizon must be positive".into()));
            }
            return Ok(CfrStepSize::BoundTuned { horizon });
        }
        let eta: f64 = s
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad step size `{s}`: {e}")))?;
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidArgument(format!("step size must be finite and ≥ 0, got {eta}")));
        }
        Ok(CfrStepSize::Constant(eta))
    }
}

/// When the average sequence weights are accumulated within an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AverageTiming {
    /// After the player's update, with the just-updated policy.
    #[default]
    AfterUpdate,
    /// Before the player's update, with the policy that produced the values.
    BeforeUpdate,
}

fn accumulate_average(game: &GameTree, table: &mut InfoStateTable, player: usize) {
    let policy = table.current_policy();
    let reach = reach_probabilities(game, &policy);
    let mut own = vec![f64::NAN; game.num_info_states()];
    for (id, node) in game.nodes().iter().enumerate() {
        if let NodeKind::Decision {
            player: p,
            info_state,
            ..
        } = &node.kind
        {
            if *p == player && own[*info_state].is_nan() {
                own[*info_state] = reach.player[player][id];
            }
        }
    }
    for &s in game.player_states(player) {
        let e = &mut table.entries[s];
        for (acc, p) in e.average.iter_mut().zip(e.policy.iter()) {
            *acc += own[s] * p;
        }
    }
}

/// One alternating iteration: player 0 updates, then player 1 against the new policy.
pub fn cfr_iteration(
    game: &GameTree,
    table: &mut InfoStateTable,
    learner: LearnerKind,
    step: CfrStepSize,
    timing: AverageTiming,
) {
    for player in 0..2 {
        if timing == AverageTiming::BeforeUpdate {
            accumulate_average(game, table, player);
        }
        let policy = table.current_policy();
        let cf = counterfactual_values(game, &policy, player);
        for &s in game.player_states(player) {
            let eta = step.eta(game.info_state(s).num_actions());
            cfr_local_update(&mut table.entries[s], &cf, s, learner, eta);
        }
        if timing == AverageTiming::AfterUpdate {
            accumulate_average(game, table, player);
        }
    }
}

/// `|S_i| Δ_u √(2 ln|A| T)`.
pub fn regret_bound(game: &GameTree, player: usize, iterations: usize) -> f64 {
    let states = game.player_states(player).len() as f64;
    let actions = game.max_actions(player) as f64;
    states * game.utility_spread() * (2.0 * actions.ln() * iterations as f64).sqrt()
}

/// Sum over `player`'s states of the positive part of the largest cumulative
/// counterfactual regret.
pub fn measured_regret(game: &GameTree, table: &InfoStateTable, player: usize) -> f64 {
    game.player_states(player)
        .iter()
        .map(|&s| {
            table.entries[s]
                .cum_regret
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        })
        .sum()
}

/// A CFR run over a possibly nonstationary game.
#[derive(Debug, Clone)]
pub struct CfrSolver {
    phases: Vec<GameTree>,
    schedule: RewardSchedule,
    pub table: InfoStateTable,
    pub learner: LearnerKind,
    pub step: CfrStepSize,
    pub timing: AverageTiming,
    iteration: usize,
}

impl CfrSolver {
    pub fn new(game: &GameTree, learner: LearnerKind, step: CfrStepSize) -> Self {
        Self::with_schedule(game, learner, step, RewardSchedule::stationary())
            .expect("the stationary schedule applies to any game")
    }

    pub fn with_schedule(
        game: &GameTree,
        learner: LearnerKind,
        step: CfrStepSize,
        schedule: RewardSchedule,
    ) -> Result<Self> {
        Ok(Self {
            phases: schedule.phase_games(game)?,
            schedule,
            table: InfoStateTable::new(game),
            learner,
            step,
            timing: AverageTiming::default(),
            iteration: 0,
        })
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn phase(&self) -> usize {
        self.schedule.phase_at(self.iteration)
    }

    /// The game played in the current phase.
    pub fn game(&self) -> &GameTree {
        &self.phases[self.phase()]
    }

    pub fn game_of_phase(&self, phase: usize) -> &GameTree {
        &self.phases[phase]
    }

    pub fn step(&mut self) {
        let game = &self.phases[self.schedule.phase_at(self.iteration)];
        cfr_iteration(game, &mut self.table, self.learner, self.step, self.timing);
        self.iteration += 1;
    }

    pub fn run(&mut self, iterations: usize) {
        for _ in 0..iterations {
            self.step();
        }
    }

    pub fn average_policy(&self) -> TabularPolicy {
        average_policy(&self.table)
    }

    pub fn current_policy(&self) -> TabularPolicy {
        self.table.current_policy()
    }
}
