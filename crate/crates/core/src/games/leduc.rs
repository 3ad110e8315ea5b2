//! Two-player Leduc poker.
//!
//! Six-card deck (J, Q, K in two suits), one-chip ante, fixed raise sizes of 2 and 4
//! chips in the first and second betting round, at most two raises per round. A
//! public card is dealt between the rounds; pairing it beats any unpaired hand,
//! otherwise the higher rank wins and equal ranks split the pot.
//!
//! Information states are keyed on the exact private card (rank and suit), which
//! gives 936 states in total.

use super::tree::{one_hot, GameTree, NodeId, TreeBuilder};
use crate::error::Result;

const DECK: usize = 6;
const CARD_NAMES: [&str; DECK] = ["Js", "Jh", "Qs", "Qh", "Ks", "Kh"];
const FOLD: usize = 0;
const CALL: usize = 1;
const RAISE: usize = 2;
const MAX_RAISES: usize = 2;
const ROUND_ONE_SLOTS: usize = 4;
const ROUND_TWO_SLOTS: usize = 3;
pub const FEATURE_LEN: usize = 2 * DECK + (ROUND_ONE_SLOTS + ROUND_TWO_SLOTS) * 3;

fn rank(card: usize) -> usize {
    card / 2
}

#[derive(Clone)]
struct State {
    cards: [usize; 2],
    public: Option<usize>,
    rounds: [Vec<usize>; 2],
    contrib: [f64; 2],
}

impl State {
    fn round(&self) -> usize {
        usize::from(self.public.is_some())
    }

    fn to_act(&self) -> usize {
        self.rounds[self.round()].len() % 2
    }

    fn raises(&self) -> usize {
        self.rounds[self.round()].iter().filter(|&&a| a == RAISE).count()
    }

    fn legal_actions(&self) -> Vec<usize> {
        let p = self.to_act();
        let mut actions = Vec::with_capacity(3);
        if self.contrib[p] < self.contrib[1 - p] {
            actions.push(FOLD);
        }
        actions.push(CALL);
        if self.raises() < MAX_RAISES {
            actions.push(RAISE);
        }
        actions
    }

    fn seq(&self, round: usize) -> String {
        self.rounds[round]
            .iter()
            .map(|&a| match a {
                FOLD => 'f',
                CALL => 'c',
                _ => 'r',
            })
            .collect()
    }

    fn key(&self, player: usize) -> String {
        let public = self.public.map_or("-", |c| CARD_NAMES[c]);
        format!(
            "{player}|{}|{public}|{}/{}",
            CARD_NAMES[self.cards[player]],
            self.seq(0),
            self.seq(1)
        )
    }

    fn features(&self, player: usize) -> Vec<f64> {
        let mut f = vec![0.0; FEATURE_LEN];
        one_hot(&mut f, 0, self.cards[player]);
        if let Some(c) = self.public {
            one_hot(&mut f, DECK, c);
        }
        let base = 2 * DECK;
        for (slot, &a) in self.rounds[0].iter().enumerate() {
            one_hot(&mut f, base + slot * 3, a);
        }
        let base = base + ROUND_ONE_SLOTS * 3;
        for (slot, &a) in self.rounds[1].iter().enumerate() {
            one_hot(&mut f, base + slot * 3, a);
        }
        f
    }

    fn showdown(&self) -> f64 {
        let public = self.public.expect("showdown after the public card");
        let strength = |c: usize| (usize::from(rank(c) == rank(public)), rank(c));
        let (s0, s1) = (strength(self.cards[0]), strength(self.cards[1]));
        let stake = self.contrib[0];
        match s0.cmp(&s1) {
            std::cmp::Ordering::Greater => stake,
            std::cmp::Ordering::Less => -stake,
            std::cmp::Ordering::Equal => 0.0,
        }
    }
}

pub fn leduc_game() -> GameTree {
    let mut b = TreeBuilder::new("leduc", &["fold", "call", "raise"], FEATURE_LEN);
    let root = b.reserve(None, 0);
    let mut first = Vec::new();
    for c0 in 0..DECK {
        let node = b.reserve(Some(root), c0);
        let mut second = Vec::new();
        for (j, c1) in (0..DECK).filter(|&c| c != c0).enumerate() {
            let child = b.reserve(Some(node), j);
            let state = State {
                cards: [c0, c1],
                public: None,
                rounds: [Vec::new(), Vec::new()],
                contrib: [1.0, 1.0],
            };
            build(&mut b, child, state).expect("leduc is well formed");
            second.push((1.0 / (DECK - 1) as f64, child));
        }
        b.set_chance(node, second);
        first.push((1.0 / DECK as f64, node));
    }
    b.set_chance(root, first);
    b.finish().expect("leduc is well formed")
}

fn build(b: &mut TreeBuilder, id: NodeId, state: State) -> Result<()> {
    let player = state.to_act();
    let round = state.round();
    let bet = if round == 0 { 2.0 } else { 4.0 };
    let actions = state.legal_actions();
    let mut children = Vec::with_capacity(actions.len());
    for (branch, &action) in actions.iter().enumerate() {
        let child = b.reserve(Some(id), branch);
        children.push(child);
        let mut next = state.clone();
        next.rounds[round].push(action);
        match action {
            FOLD => {
                let u = -next.contrib[player];
                let mut utility = [0.0; 2];
                utility[player] = u;
                utility[1 - player] = -u;
                b.set_terminal(child, utility);
            }
            CALL => {
                next.contrib[player] = next.contrib[1 - player];
                if next.rounds[round].len() < 2 {
                    build(b, child, next)?;
                } else if round == 0 {
                    deal_public(b, child, next)?;
                } else {
                    let u0 = next.showdown();
                    b.set_terminal(child, [u0, -u0]);
                }
            }
            _ => {
                next.contrib[player] = next.contrib[1 - player] + bet;
                build(b, child, next)?;
            }
        }
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

fn deal_public(b: &mut TreeBuilder, id: NodeId, state: State) -> Result<()> {
    let remaining: Vec<usize> = (0..DECK).filter(|c| !state.cards.contains(c)).collect();
    let p = 1.0 / remaining.len() as f64;
    let mut outcomes = Vec::with_capacity(remaining.len());
    for (branch, &card) in remaining.iter().enumerate() {
        let child = b.reserve(Some(id), branch);
        let mut next = state.clone();
        next.public = Some(card);
        build(b, child, next)?;
        outcomes.push((p, child));
    }
    b.set_chance(id, outcomes);
    Ok(())
}
