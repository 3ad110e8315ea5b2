//! Benchmark games: matrix games, Kuhn and Leduc poker, Goofspiel, and reward
//! schedules that change the utilities over time.

mod goofspiel;
mod kuhn;
mod leduc;
mod matrix;
mod schedule;
mod tree;

use std::fmt;
use std::str::FromStr;

pub use goofspiel::goofspiel5_game;
pub use kuhn::kuhn_game;
pub use leduc::leduc_game;
pub use matrix::{matching_pennies, matching_pennies_utilities, rps_game, MatrixGame};
pub use schedule::{apply_schedule, PhaseTransform, RewardSchedule, Transformable};
pub use tree::{GameTree, InfoState, Node, NodeId, NodeKind, CHANCE_TOL};

use crate::error::{Error, Result};

pub const GAME_NAMES: &str = "kuhn, leduc, goofspiel5, rps:<nu>, matching_pennies[:forfeit]";

/// A game selected by name on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GameId {
    Kuhn,
    Leduc,
    Goofspiel5,
    Rps(f64),
    MatchingPennies { forfeit: bool },
}

impl GameId {
    /// The normal-form payoffs, for matrix games.
    pub fn matrix(&self) -> Option<MatrixGame> {
        match *self {
            GameId::Rps(nu) => Some(rps_game(nu).expect("nu validated at parse time")),
            GameId::MatchingPennies { forfeit } => Some(matching_pennies(forfeit)),
            _ => None,
        }
    }

    pub fn tree(&self) -> GameTree {
        match self {
            GameId::Kuhn => kuhn_game(),
            GameId::Leduc => leduc_game(),
            GameId::Goofspiel5 => goofspiel5_game(),
            _ => self.matrix().expect("matrix game").to_tree(),
        }
    }
}

impl FromStr for GameId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownGame {
            name: s.to_string(),
            valid: GAME_NAMES.to_string(),
        };
        match s {
            "kuhn" => Ok(GameId::Kuhn),
            "leduc" => Ok(GameId::Leduc),
            "goofspiel5" => Ok(GameId::Goofspiel5),
            "matching_pennies" => Ok(GameId::MatchingPennies { forfeit: false }),
            "matching_pennies:forfeit" => Ok(GameId::MatchingPennies { forfeit: true }),
            _ => {
                let nu: f64 = s
                    .strip_prefix("rps:")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(unknown)?;
                if nu.is_finite() {
                    Ok(GameId::Rps(nu))
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameId::Kuhn => write!(f, "kuhn"),
            GameId::Leduc => write!(f, "leduc"),
            GameId::Goofspiel5 => write!(f, "goofspiel5"),
            GameId::Rps(nu) => write!(f, "rps:{nu}"),
            GameId::MatchingPennies { forfeit: false } => write!(f, "matching_pennies"),
            GameId::MatchingPennies { forfeit: true } => write!(f, "matching_pennies:forfeit"),
        }
    }
}
