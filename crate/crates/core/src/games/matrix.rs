use super::tree::{GameTree, TreeBuilder};
use crate::error::{Error, Result};

/// A two-player zero-sum normal-form game, stored as the row player's payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    name: String,
    rows: usize,
    cols: usize,
    payoffs: Vec<f64>,
}

impl MatrixGame {
    pub fn new(name: &str, row_payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let rows = row_payoffs.len();
        let cols = row_payoffs.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || row_payoffs.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGame("payoff matrix must be rectangular and non-empty".into()));
        }
        let payoffs: Vec<f64> = row_payoffs.into_iter().flatten().collect();
        if payoffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGame("payoff matrix has non-finite entries".into()));
        }
        Ok(Self {
            name: name.to_string(),
            rows,
            cols,
            payoffs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_actions_row(&self) -> usize {
        self.rows
    }

    pub fn num_actions_col(&self) -> usize {
        self.cols
    }

    /// Row player's payoff at `(i, j)`; the column player receives the negation.
    pub fn payoff(&self, i: usize, j: usize) -> f64 {
        self.payoffs[i * self.cols + j]
    }

    /// Row player's per-action expected payoff against column strategy `col`.
    pub fn row_action_values(&self, col: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.payoff(i, j) * col[j]).sum())
            .collect()
    }

    /// Column player's per-action expected payoff against row strategy `row`.
    pub fn col_action_values(&self, row: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| -(0..self.rows).map(|i| self.payoff(i, j) * row[i]).sum::<f64>())
            .collect()
    }

    /// Per-action payoffs for `player` against the other player's strategy.
    pub fn action_values(&self, player: usize, opponent: &[f64]) -> Vec<f64> {
        if player == 0 {
            self.row_action_values(opponent)
        } else {
            self.col_action_values(opponent)
        }
    }

    /// Row player's expected payoff under `(row, col)`.
    pub fn value(&self, row: &[f64], col: &[f64]) -> f64 {
        row.iter()
            .zip(self.row_action_values(col))
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn negated(&self) -> MatrixGame {
        MatrixGame {
            name: format!("-{}", self.name),
            rows: self.rows,
            cols: self.cols,
            payoffs: self.payoffs.iter().map(|x| -x).collect(),
        }
    }

    /// Sequential encoding: row player moves, then the column player moves without
    /// observing the row action.
    pub fn to_tree(&self) -> GameTree {
        // Action ids are shared by both players; the space is wide enough for either.
        let width = self.rows.max(self.cols);
        let names: Vec<String> = (0..width).map(|a| format!("a{a}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut b = TreeBuilder::new(&self.name, &names, 2);

        let root = b.reserve(None, 0);
        let mut row_children = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let col_node = b.reserve(Some(root), i);
            let mut col_children = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                let leaf = b.reserve(Some(col_node), j);
                let u = self.payoff(i, j);
                b.set_terminal(leaf, [u, -u]);
                col_children.push(leaf);
            }
            b.set_decision(
                col_node,
                1,
                "1|".to_string(),
                (0..self.cols).collect(),
                vec![0.0, 1.0],
                col_children,
            )
            .expect("column state is consistent");
            row_children.push(col_node);
        }
        b.set_decision(
            root,
            0,
            "0|".to_string(),
            (0..self.rows).collect(),
            vec![1.0, 0.0],
            row_children,
        )
        .expect("row state is consistent");
        b.finish().expect("matrix game trees are well formed")
    }

    /// NashConv computed directly from the payoff matrix.
    pub fn nashconv(&self, row: &[f64], col: &[f64]) -> f64 {
        let v = self.value(row, col);
        let best_row = self
            .row_action_values(col)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let best_col = self
            .col_action_values(row)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        (best_row - v) + (best_col + v)
    }
}

/// Rock-paper-scissors with the rock/scissors payoff scaled by `nu`.
pub fn rps_game(nu: f64) -> Result<MatrixGame> {
    if !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("nu must be finite, got {nu}")));
    }
    MatrixGame::new(
        &format!("rps:{nu}"),
        vec![
            vec![0.0, -1.0, nu],
            vec![1.0, 0.0, -1.0],
            vec![-nu, 1.0, 0.0],
        ],
    )
}

/// Matching pennies from the "even" (row) player's perspective; the forfeit row
/// always pays -1.
pub fn matching_pennies(forfeit: bool) -> MatrixGame {
    let mut rows = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
    if forfeit {
        rows.push(vec![-1.0, -1.0]);
    }
    let name = if forfeit {
        "matching_pennies:forfeit"
    } else {
        "matching_pennies"
    };
    MatrixGame::new(name, rows).expect("static payoffs")
}

/// Utilities seen by the "even" player against the scripted opponent that plays
/// heads for the first 40% of `horizon` rounds and tails afterwards.
///
/// Rounds are 1-based. Each vector is `(u(H), u(T))`, plus `-1` for the forfeit action.
pub fn matching_pennies_utilities(horizon: usize, forfeit: bool) -> Result<Vec<Vec<f64>>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let switch = horizon * 2 / 5;
    Ok((1..=horizon)
        .map(|t| {
            let mut u = if t <= switch {
                vec![1.0, -1.0]
            } else {
                vec![-1.0, 1.0]
            };
            if forfeit {
                u.push(-1.0);
            }
            u
        })
        .collect())
}
