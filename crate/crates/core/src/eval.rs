//! Exact evaluation: reach probabilities, expected values, best responses and NashConv.

use std::fmt;

use crate::games::{GameTree, MatrixGame, NodeKind};
use crate::policy::TabularPolicy;

/// Gap below which two best-response action values count as tied.
const TIE_TOL: f64 = 1e-12;

/// Which policy an [`EvalReport`] was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// The current (last-iterate) policy.
    Current,
    /// Reach-weighted average of the iterates, as produced by CFR.
    SequenceAverage,
    /// Arithmetic mean of the iterates over time, as used for continuous dynamics.
    PrefixMean,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Current => "current",
            PolicyKind::SequenceAverage => "sequence_average",
            PolicyKind::PrefixMean => "prefix_mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub br_values: [f64; 2],
    pub expected_values: [f64; 2],
    pub nashconv: f64,
    pub policy_kind: PolicyKind,
}

impl EvalReport {
    fn new(br_values: [f64; 2], expected_values: [f64; 2], policy_kind: PolicyKind) -> Self {
        let nashconv = (br_values[0] - expected_values[0]) + (br_values[1] - expected_values[1]);
        Self {
            br_values,
            expected_values,
            nashconv,
            policy_kind,
        }
    }
}

/// Per-node reach probabilities, split by contributor.
#[derive(Debug, Clone)]
pub struct Reach {
    pub chance: Vec<f64>,
    pub player: [Vec<f64>; 2],
}

impl Reach {
    /// Total probability of reaching `node`.
    pub fn total(&self, node: usize) -> f64 {
        self.chance[node] * self.player[0][node] * self.player[1][node]
    }

    /// Probability contributed by everyone except `player`.
    pub fn others(&self, node: usize, player: usize) -> f64 {
        self.chance[node] * self.player[1 - player][node]
    }
}

pub fn reach_probabilities(game: &GameTree, policy: &TabularPolicy) -> Reach {
    let n = game.num_nodes();
    let mut r = Reach {
        chance: vec![0.0; n],
        player: [vec![0.0; n], vec![0.0; n]],
    };
    let root = game.root();
    r.chance[root] = 1.0;
    r.player[0][root] = 1.0;
    r.player[1][root] = 1.0;
    // Children always have larger ids than their parent.
    for id in 0..n {
        match &game.node(id).kind {
            NodeKind::Chance { outcomes } => {
                for &(p, c) in outcomes {
                    r.chance[c] = r.chance[id] * p;
                    r.player[0][c] = r.player[0][id];
                    r.player[1][c] = r.player[1][id];
                }
            }
            NodeKind::Decision {
                player,
                info_state,
                children,
            } => {
                let probs = policy.get(*info_state);
                for (&c, &p) in children.iter().zip(probs) {
                    r.chance[c] = r.chance[id];
                    r.player[*player][c] = r.player[*player][id] * p;
                    r.player[1 - player][c] = r.player[1 - player][id];
                }
            }
            NodeKind::Terminal { .. } => {}
        }
    }
    r
}

/// Expected utility of each player when both follow `policy`.
pub fn expected_value(game: &GameTree, policy: &TabularPolicy) -> [f64; 2] {
    let reach = reach_probabilities(game, policy);
    let mut v = [0.0; 2];
    for (id, node) in game.nodes().iter().enumerate() {
        if let NodeKind::Terminal { utility } = node.kind {
            let w = reach.total(id);
            v[0] += w * utility[0];
            v[1] += w * utility[1];
        }
    }
    v
}

/// A best response of `player` to the opponent part of `policy`.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub value: f64,
    /// Chosen local action index for every information state of `player`, indexed by
    /// global info-state index; other players' entries are unused.
    pub actions: Vec<usize>,
}

impl BestResponse {
    /// `policy` with `player`'s states replaced by the pure best response.
    pub fn apply(&self, game: &GameTree, policy: &TabularPolicy, player: usize) -> TabularPolicy {
        let mut out = policy.clone();
        for &s in game.player_states(player) {
            let mut p = vec![0.0; game.info_state(s).num_actions()];
            p[self.actions[s]] = 1.0;
            out.set(s, &p);
        }
        out
    }
}

/// Exact best response by backward induction over `player`'s own decision depth.
///
/// States at the deepest own depth are resolved first; each level then sees fixed
/// choices everywhere below it. Action values are weighted by chance and opponent
/// reach, so states the opponent never reaches get all-zero values and resolve to
/// action 0.
pub fn best_response(game: &GameTree, policy: &TabularPolicy, player: usize) -> BestResponse {
    let reach = reach_probabilities(game, policy);
    let mut actions = vec![0usize; game.num_info_states()];
    let max_depth = game
        .player_states(player)
        .iter()
        .map(|&s| game.info_state(s).own_depth)
        .max();
    let mut values = vec![0.0; game.num_nodes()];
    let Some(max_depth) = max_depth else {
        node_values(game, policy, player, &actions, &mut values);
        return BestResponse {
            value: values[game.root()],
            actions,
        };
    };
    for depth in (0..=max_depth).rev() {
        node_values(game, policy, player, &actions, &mut values);
        let mut action_values: Vec<Vec<f64>> = game
            .info_states()
            .iter()
            .map(|s| vec![0.0; s.num_actions()])
            .collect();
        for (id, node) in game.nodes().iter().enumerate() {
            if let NodeKind::Decision {
                player: p,
                info_state,
                children,
            } = &node.kind
            {
                if *p != player || game.info_state(*info_state).own_depth != depth {
                    continue;
                }
                let w = reach.others(id, player);
                for (acc, &c) in action_values[*info_state].iter_mut().zip(children) {
                    *acc += w * values[c];
                }
            }
        }
        for &s in game.player_states(player) {
            if game.info_state(s).own_depth == depth {
                actions[s] = argmax_lowest(&action_values[s]);
            }
        }
    }
    node_values(game, policy, player, &actions, &mut values);
    BestResponse {
        value: values[game.root()],
        actions,
    }
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (a, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] + TIE_TOL {
            best = a;
        }
    }
    best
}

/// Values for `player` at every node, with `player` following the pure `actions`.
fn node_values(
    game: &GameTree,
    policy: &TabularPolicy,
    player: usize,
    actions: &[usize],
    values: &mut [f64],
) {
    for id in (0..game.num_nodes()).rev() {
        values[id] = match &game.node(id).kind {
            NodeKind::Terminal { utility } => utility[player],
            NodeKind::Chance { outcomes } => outcomes.iter().map(|&(p, c)| p * values[c]).sum(),
            NodeKind::Decision {
                player: p,
                info_state,
                children,
            } => {
                if *p == player {
                    values[children[actions[*info_state]]]
                } else {
                    policy
                        .get(*info_state)
                        .iter()
                        .zip(children)
                        .map(|(pr, &c)| pr * values[c])
                        .sum()
                }
            }
        };
    }
}

/// NashConv of the last iterate.
pub fn nashconv(game: &GameTree, policy: &TabularPolicy) -> EvalReport {
    nashconv_of(game, policy, PolicyKind::Current)
}

/// NashConv, recording which kind of policy was evaluated.
pub fn nashconv_of(game: &GameTree, policy: &TabularPolicy, kind: PolicyKind) -> EvalReport {
    let ev = expected_value(game, policy);
    let br = [
        best_response(game, policy, 0).value,
        best_response(game, policy, 1).value,
    ];
    EvalReport::new(br, ev, kind)
}

/// NashConv of a matrix-game joint policy computed from the payoff matrix.
pub fn matrix_report(game: &MatrixGame, row: &[f64], col: &[f64], kind: PolicyKind) -> EvalReport {
    let v = game.value(row, col);
    let br0 = game.row_action_values(col).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let br1 = game.col_action_values(row).into_iter().fold(f64::NEG_INFINITY, f64::max);
    EvalReport::new([br0, br1], [v, -v], kind)
}
