//! Five-card imperfect-information Goofspiel.
//!
//! Point cards are revealed in the fixed order 5, 4, 3, 2, 1. Each turn both players
//! bid one of their remaining cards; the simultaneous bids are serialized as player 0
//! then player 1, and player 1's state does not include player 0's bid. Bids stay
//! hidden: each player only learns whether they won, lost or tied the turn. The
//! higher bid wins the point card and ties discard it. When a single card remains it
//! is played automatically. The utility is the point difference.

use super::tree::{one_hot, GameTree, NodeId, TreeBuilder};
use crate::error::Result;

const CARDS: usize = 5;
const DECISION_TURNS: usize = CARDS - 1;
const OUTCOMES: usize = 3;
pub const FEATURE_LEN: usize = 2 + DECISION_TURNS * CARDS + DECISION_TURNS * OUTCOMES;

/// Turn result from one player's point of view.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Win = 0,
    Loss = 1,
    Tie = 2,
}

impl Outcome {
    fn symbol(self) -> char {
        match self {
            Outcome::Win => 'W',
            Outcome::Loss => 'L',
            Outcome::Tie => 'T',
        }
    }
}

#[derive(Clone)]
struct State {
    bids: [Vec<usize>; 2],
    /// Outcomes from player 0's perspective.
    outcomes: Vec<Outcome>,
    points: [f64; 2],
}

impl State {
    fn turn(&self) -> usize {
        self.outcomes.len()
    }

    fn point_card(&self) -> f64 {
        (CARDS - self.turn()) as f64
    }

    fn remaining(&self, player: usize) -> Vec<usize> {
        (0..CARDS).filter(|c| !self.bids[player].contains(c)).collect()
    }

    fn outcome_for(&self, player: usize, o: Outcome) -> Outcome {
        match (player, o) {
            (1, Outcome::Win) => Outcome::Loss,
            (1, Outcome::Loss) => Outcome::Win,
            _ => o,
        }
    }

    fn key(&self, player: usize) -> String {
        let bids: String = self.bids[player]
            .iter()
            .map(|c| char::from(b'1' + *c as u8))
            .collect();
        let outcomes: String = self
            .outcomes
            .iter()
            .map(|&o| self.outcome_for(player, o).symbol())
            .collect();
        format!("{player}|{bids}|{outcomes}")
    }

    fn features(&self, player: usize) -> Vec<f64> {
        let mut f = vec![0.0; FEATURE_LEN];
        one_hot(&mut f, 0, player);
        // Only bids from completed turns are encoded.
        for (turn, &c) in self.bids[player].iter().take(self.turn()).enumerate() {
            one_hot(&mut f, 2 + turn * CARDS, c);
        }
        let base = 2 + DECISION_TURNS * CARDS;
        for (turn, &o) in self.outcomes.iter().enumerate() {
            one_hot(&mut f, base + turn * OUTCOMES, self.outcome_for(player, o) as usize);
        }
        f
    }

    fn resolve(&mut self) {
        let turn = self.turn();
        let (b0, b1) = (self.bids[0][turn], self.bids[1][turn]);
        let value = self.point_card();
        let outcome = match b0.cmp(&b1) {
            std::cmp::Ordering::Greater => {
                self.points[0] += value;
                Outcome::Win
            }
            std::cmp::Ordering::Less => {
                self.points[1] += value;
                Outcome::Loss
            }
            std::cmp::Ordering::Equal => Outcome::Tie,
        };
        self.outcomes.push(outcome);
    }
}

pub fn goofspiel5_game() -> GameTree {
    let mut b = TreeBuilder::new("goofspiel5", &["1", "2", "3", "4", "5"], FEATURE_LEN);
    let root = b.reserve(None, 0);
    let state = State {
        bids: [Vec::new(), Vec::new()],
        outcomes: Vec::new(),
        points: [0.0; 2],
    };
    build(&mut b, root, state).expect("goofspiel is well formed");
    b.finish().expect("goofspiel is well formed")
}

fn build(b: &mut TreeBuilder, id: NodeId, mut state: State) -> Result<()> {
    if state.turn() == DECISION_TURNS {
        for p in 0..2 {
            let last = state.remaining(p)[0];
            state.bids[p].push(last);
        }
        state.resolve();
        let u0 = state.points[0] - state.points[1];
        b.set_terminal(id, [u0, -u0]);
        return Ok(());
    }
    // Player 0 has bid this turn iff their bid list is one longer than the outcomes.
    let player = usize::from(state.bids[0].len() > state.turn());
    let actions = state.remaining(player);
    let mut children = Vec::with_capacity(actions.len());
    for (branch, &card) in actions.iter().enumerate() {
        let child = b.reserve(Some(id), branch);
        let mut next = state.clone();
        next.bids[player].push(card);
        if player == 1 {
            next.resolve();
        }
        build(b, child, next)?;
        children.push(child);
    }
    b.set_decision(
        id,
        player,
        state.key(player),
        actions,
        state.features(player),
        children,
    )
}
