use std::collections::HashMap;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Tolerance on chance-probability sums.
pub const CHANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum NodeKind {
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Decision {
        player: usize,
        info_state: usize,
        children: Vec<NodeId>,
    },
    Terminal {
        utility: [f64; 2],
    },
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    /// Index of this node among its parent's children / outcomes.
    pub branch: usize,
}

/// A set of histories the acting player cannot tell apart.
#[derive(Debug, Clone)]
pub struct InfoState {
    pub key: String,
    pub player: usize,
    /// Global action ids of the legal actions, in child order.
    pub actions: Vec<usize>,
    /// Fixed-length binary encoding used by the neural policies.
    pub features: Vec<f64>,
    /// Number of decisions the acting player made before reaching this state.
    pub own_depth: usize,
}

impl InfoState {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// A finite two-player zero-sum extensive-form game with chance.
///
/// Node 0 is the root. Nodes are immutable after construction, so a tree can be
/// shared read-only between any number of workers.
#[derive(Debug, Clone)]
pub struct GameTree {
    name: String,
    nodes: Vec<Node>,
    info_states: Vec<InfoState>,
    key_index: HashMap<String, usize>,
    player_states: [Vec<usize>; 2],
    action_names: Vec<String>,
    feature_len: usize,
    max_decisions: usize,
}

impl GameTree {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn info_states(&self) -> &[InfoState] {
        &self.info_states
    }

    pub fn info_state(&self, idx: usize) -> &InfoState {
        &self.info_states[idx]
    }

    pub fn num_info_states(&self) -> usize {
        self.info_states.len()
    }

    /// Indices of the information states where `player` acts.
    pub fn player_states(&self, player: usize) -> &[usize] {
        &self.player_states[player]
    }

    pub fn info_state_index(&self, key: &str) -> Option<usize> {
        self.key_index.get(key).copied()
    }

    /// Size of the global action space (the policy network's output width).
    pub fn num_global_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.action_names[action]
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    /// Feature encoding of the information state with the given key.
    pub fn featurize(&self, key: &str) -> Result<&[f64]> {
        self.info_state_index(key)
            .map(|i| self.info_states[i].features.as_slice())
            .ok_or_else(|| Error::UnknownInfoState(key.to_string()))
    }

    /// Longest number of player decisions on any root-to-terminal path.
    pub fn max_decisions(&self) -> usize {
        self.max_decisions
    }

    /// Largest `|u(z) - u(z')|` over terminal pairs, for player 0 (equal for player 1).
    pub fn utility_spread(&self) -> f64 {
        let (lo, hi) = self
            .terminal_utilities()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
                (lo.min(u[0]), hi.max(u[0]))
            });
        hi - lo
    }

    /// Largest action count over `player`'s information states.
    pub fn max_actions(&self, player: usize) -> usize {
        self.player_states[player]
            .iter()
            .map(|&s| self.info_states[s].num_actions())
            .max()
            .unwrap_or(0)
    }

    pub fn terminal_utilities(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::Terminal { utility } => Some(utility),
            _ => None,
        })
    }

    /// Returns a copy with every terminal utility multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> GameTree {
        let mut out = self.clone();
        for node in &mut out.nodes {
            if let NodeKind::Terminal { utility } = &mut node.kind {
                utility[0] *= factor;
                utility[1] *= factor;
            }
        }
        out
    }

    /// Sequence of (node, branch) pairs from the root down to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<(NodeId, usize)> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(parent) = self.nodes[cur].parent {
            path.push((parent, self.nodes[cur].branch));
            cur = parent;
        }
        path.reverse();
        path
    }
}

/// Incremental tree construction used by the game definitions.
pub(crate) struct TreeBuilder {
    name: String,
    nodes: Vec<Node>,
    info_states: Vec<InfoState>,
    key_index: HashMap<String, usize>,
    action_names: Vec<String>,
    feature_len: usize,
}

impl TreeBuilder {
    pub fn new(name: &str, action_names: &[&str], feature_len: usize) -> Self {
        Self {
            name: name.to_string(),
            nodes: Vec::new(),
            info_states: Vec::new(),
            key_index: HashMap::new(),
            action_names: action_names.iter().map(|s| s.to_string()).collect(),
            feature_len,
        }
    }

    /// Allocates a node; its kind is filled in once the children exist.
    pub fn reserve(&mut self, parent: Option<NodeId>, branch: usize) -> NodeId {
        self.nodes.push(Node {
            kind: NodeKind::Terminal {
                utility: [f64::NAN; 2],
            },
            parent,
            branch,
        });
        self.nodes.len() - 1
    }

    pub fn set_terminal(&mut self, id: NodeId, utility: [f64; 2]) {
        self.nodes[id].kind = NodeKind::Terminal { utility };
    }

    pub fn set_chance(&mut self, id: NodeId, outcomes: Vec<(f64, NodeId)>) {
        self.nodes[id].kind = NodeKind::Chance { outcomes };
    }

    pub fn set_decision(
        &mut self,
        id: NodeId,
        player: usize,
        key: String,
        actions: Vec<usize>,
        features: Vec<f64>,
        children: Vec<NodeId>,
    ) -> Result<()> {
        if actions.is_empty() || actions.len() != children.len() {
            return Err(Error::InvalidGame(format!(
                "state `{key}` has {} actions and {} children",
                actions.len(),
                children.len()
            )));
        }
        if features.len() != self.feature_len {
            return Err(Error::InvalidGame(format!(
                "state `{key}` has {} features, expected {}",
                features.len(),
                self.feature_len
            )));
        }
        let info_state = match self.key_index.get(&key) {
            Some(&idx) => {
                let existing = &self.info_states[idx];
                if existing.player != player || existing.actions != actions {
                    return Err(Error::InvalidGame(format!(
                        "histories in `{key}` disagree on player or legal actions"
                    )));
                }
                if existing.features != features {
                    return Err(Error::InvalidGame(format!(
                        "histories in `{key}` disagree on features"
                    )));
                }
                idx
            }
            None => {
                let idx = self.info_states.len();
                self.key_index.insert(key.clone(), idx);
                self.info_states.push(InfoState {
                    key,
                    player,
                    actions,
                    features,
                    own_depth: 0,
                });
                idx
            }
        };
        self.nodes[id].kind = NodeKind::Decision {
            player,
            info_state,
            children,
        };
        Ok(())
    }

    /// Validates structural invariants and freezes the tree.
    pub fn finish(mut self) -> Result<GameTree> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidGame("empty tree".into()));
        }
        for node in &self.nodes {
            match &node.kind {
                NodeKind::Chance { outcomes } => {
                    let sum: f64 = outcomes.iter().map(|(p, _)| p).sum();
                    if outcomes.is_empty() || (sum - 1.0).abs() > CHANCE_TOL {
                        return Err(Error::InvalidGame(format!(
                            "chance probabilities sum to {sum}"
                        )));
                    }
                }
                NodeKind::Terminal { utility } => {
                    if !utility[0].is_finite() || utility[0] + utility[1] != 0.0 {
                        return Err(Error::InvalidGame(format!(
                            "terminal utility {utility:?} is not zero-sum"
                        )));
                    }
                }
                NodeKind::Decision { .. } => {}
            }
        }

        // Perfect recall: every history of a state shares the acting player's own
        // (state, action) sequence.
        let mut own_seq: Vec<Option<Vec<(usize, usize)>>> = vec![None; self.info_states.len()];
        let mut max_decisions = 0;
        type Frame = (NodeId, [Vec<(usize, usize)>; 2], usize);
        let mut stack: Vec<Frame> = vec![(0, [Vec::new(), Vec::new()], 0)];
        while let Some((id, seqs, decisions)) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Terminal { .. } => max_decisions = max_decisions.max(decisions),
                NodeKind::Chance { outcomes } => {
                    for &(_, child) in outcomes {
                        stack.push((child, seqs.clone(), decisions));
                    }
                }
                NodeKind::Decision {
                    player,
                    info_state,
                    children,
                } => {
                    let mine = &seqs[*player];
                    match &own_seq[*info_state] {
                        Some(prev) if prev != mine => {
                            return Err(Error::InvalidGame(format!(
                                "perfect recall violated at `{}`",
                                self.info_states[*info_state].key
                            )))
                        }
                        Some(_) => {}
                        None => own_seq[*info_state] = Some(mine.clone()),
                    }
                    for (a, &child) in children.iter().enumerate() {
                        let mut next = seqs.clone();
                        next[*player].push((*info_state, a));
                        stack.push((child, next, decisions + 1));
                    }
                }
            }
        }
        for (state, seq) in self.info_states.iter_mut().zip(&own_seq) {
            state.own_depth = seq.as_ref().map_or(0, |s| s.len());
        }

        let mut player_states = [Vec::new(), Vec::new()];
        for (i, s) in self.info_states.iter().enumerate() {
            if s.player > 1 {
                return Err(Error::InvalidGame(format!("player {} out of range", s.player)));
            }
            player_states[s.player].push(i);
        }

        Ok(GameTree {
            name: self.name,
            nodes: self.nodes,
            info_states: self.info_states,
            key_index: self.key_index,
            player_states,
            action_names: self.action_names,
            feature_len: self.feature_len,
            max_decisions,
        })
    }
}

/// One-hot helper: writes 1.0 at `offset + index`.
pub(crate) fn one_hot(features: &mut [f64], offset: usize, index: usize) {
    features[offset + index] = 1.0;
}
