//! Three-card Kuhn poker.
//!
//! Both players ante one chip and receive one private card from {J, Q, K}. Player 0
//! acts first; the actions are pass (check/fold) and bet (bet/call) of one chip.

use super::tree::{one_hot, GameTree, NodeId, TreeBuilder};
use crate::error::Result;

const CARDS: [char; 3] = ['J', 'Q', 'K'];
const PASS: usize = 0;
const BET: usize = 1;
const SLOTS: usize = 2;
pub const FEATURE_LEN: usize = 3 + SLOTS * 2;

pub fn kuhn_game() -> GameTree {
    let mut b = TreeBuilder::new("kuhn", &["pass", "bet"], FEATURE_LEN);
    let root = b.reserve(None, 0);
    let mut deals = Vec::new();
    for (i, c0) in (0..3).enumerate() {
        let node = b.reserve(Some(root), i);
        let mut second = Vec::new();
        for (j, c1) in (0..3).filter(|&c| c != c0).enumerate() {
            let child = b.reserve(Some(node), j);
            build_betting(&mut b, child, [c0, c1], &mut Vec::new()).expect("kuhn is well formed");
            second.push((0.5, child));
        }
        b.set_chance(node, second);
        deals.push((1.0 / 3.0, node));
    }
    b.set_chance(root, deals);
    b.finish().expect("kuhn is well formed")
}

fn build_betting(
    b: &mut TreeBuilder,
    id: NodeId,
    cards: [usize; 2],
    history: &mut Vec<usize>,
) -> Result<()> {
    if let Some(u0) = terminal_utility(cards, history) {
        b.set_terminal(id, [u0, -u0]);
        return Ok(());
    }
    let player = history.len() % 2;
    let mut children = Vec::new();
    for action in [PASS, BET] {
        let child = b.reserve(Some(id), action);
        history.push(action);
        build_betting(b, child, cards, history)?;
        history.pop();
        children.push(child);
    }
    let seq: String = history.iter().map(|&a| if a == PASS { 'p' } else { 'b' }).collect();
    let key = format!("{player}|{}|{seq}", CARDS[cards[player]]);
    let mut features = vec![0.0; FEATURE_LEN];
    one_hot(&mut features, 0, cards[player]);
    for (slot, &a) in history.iter().enumerate() {
        one_hot(&mut features, 3 + slot * 2, a);
    }
    b.set_decision(id, player, key, vec![PASS, BET], features, children)
}

fn terminal_utility(cards: [usize; 2], history: &[usize]) -> Option<f64> {
    let showdown = |stake: f64| if cards[0] > cards[1] { stake } else { -stake };
    match history {
        [PASS, PASS] => Some(showdown(1.0)),
        [PASS, BET, PASS] => Some(-1.0),
        [PASS, BET, BET] => Some(showdown(2.0)),
        [BET, PASS] => Some(1.0),
        [BET, BET] => Some(showdown(2.0)),
        _ => None,
    }
}
