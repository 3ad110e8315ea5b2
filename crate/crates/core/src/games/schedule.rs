use std::fmt;
use std::str::FromStr;

use super::matrix::{rps_game, MatrixGame};
use super::tree::GameTree;
use crate::error::{Error, Result};

/// Utility transformation active during one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseTransform {
    Identity,
    Negate,
    /// Replace the payoffs by `rps_game(nu)`; only meaningful for matrix games.
    Nu(f64),
}

impl fmt::Display for PhaseTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTransform::Identity => write!(f, "identity"),
            PhaseTransform::Negate => write!(f, "negate"),
            PhaseTransform::Nu(v) => write!(f, "nu={v}"),
        }
    }
}

impl FromStr for PhaseTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" | "id" => Ok(PhaseTransform::Identity),
            "negate" | "neg" => Ok(PhaseTransform::Negate),
            other => match other.strip_prefix("nu=") {
                Some(v) => v
                    .parse()
                    .map(PhaseTransform::Nu)
                    .map_err(|e| Error::InvalidArgument(format!("bad nu `{v}`: {e}"))),
                None => Err(Error::InvalidArgument(format!(
                    "unknown phase transform `{other}` (valid: identity, negate, nu=<value>)"
                ))),
            },
        }
    }
}

/// Piecewise-constant utility schedule over iterations.
///
/// Phase `k` covers iterations `[boundaries[k-1], boundaries[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSchedule {
    boundaries: Vec<usize>,
    transforms: Vec<PhaseTransform>,
}

impl RewardSchedule {
    pub fn new(boundaries: Vec<usize>, transforms: Vec<PhaseTransform>) -> Result<Self> {
        if transforms.len() != boundaries.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} boundaries need {} transforms, got {}",
                boundaries.len(),
                boundaries.len() + 1,
                transforms.len()
            )));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.first() == Some(&0) {
            return Err(Error::InvalidArgument(
                "phase boundaries must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            boundaries,
            transforms,
        })
    }

    /// A single identity phase.
    pub fn stationary() -> Self {
        Self {
            boundaries: Vec::new(),
            transforms: vec![PhaseTransform::Identity],
        }
    }

    /// Negates utilities every `every` iterations, up to `horizon`.
    pub fn alternating_negation(every: usize, horizon: usize) -> Result<Self> {
        if every == 0 {
            return Err(Error::InvalidArgument("switch interval must be positive".into()));
        }
        let boundaries: Vec<usize> = (1..).map(|k| k * every).take_while(|&b| b < horizon).collect();
        let transforms = (0..=boundaries.len())
            .map(|k| {
                if k % 2 == 0 {
                    PhaseTransform::Identity
                } else {
                    PhaseTransform::Negate
                }
            })
            .collect();
        Self::new(boundaries, transforms)
    }

    /// Cycles through `nus`, one value per `every` iterations.
    pub fn nu_phases(nus: &[f64], every: usize) -> Result<Self> {
        if nus.is_empty() || every == 0 {
            return Err(Error::InvalidArgument("need at least one nu and a positive interval".into()));
        }
        let boundaries = (1..nus.len()).map(|k| k * every).collect();
        Self::new(boundaries, nus.iter().map(|&v| PhaseTransform::Nu(v)).collect())
    }

    pub fn num_phases(&self) -> usize {
        self.transforms.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn transforms(&self) -> &[PhaseTransform] {
        &self.transforms
    }

    /// Index of the phase containing iteration `t`.
    pub fn phase_at(&self, t: usize) -> usize {
        self.boundaries.partition_point(|&b| b <= t)
    }

    pub fn transform_at(&self, t: usize) -> PhaseTransform {
        self.transforms[self.phase_at(t)]
    }

    /// One transformed game per phase.
    pub fn phase_games<G: Transformable>(&self, game: &G) -> Result<Vec<G>> {
        self.transforms.iter().map(|t| game.transformed(t)).collect()
    }
}

impl fmt::Display for RewardSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.transforms[0])?;
        for (b, t) in self.boundaries.iter().zip(&self.transforms[1..]) {
            write!(f, ",{b}:{t}")?;
        }
        Ok(())
    }
}

/// Parses `first[,boundary:transform]...`, e.g. `identity,1000:negate,2000:identity`.
impl FromStr for RewardSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let first = parts.next().unwrap_or("identity").parse()?;
        let mut boundaries = Vec::new();
        let mut transforms = vec![first];
        for part in parts {
            let (b, t) = part.split_once(':').ok_or_else(|| {
                Error::InvalidArgument(format!("expected `<iteration>:<transform>`, got `{part}`"))
            })?;
            boundaries.push(
                b.trim()
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("bad boundary `{b}`: {e}")))?,
            );
            transforms.push(t.parse()?);
        }
        Self::new(boundaries, transforms)
    }
}

/// Games whose utilities can be rewritten by a [`PhaseTransform`].
pub trait Transformable: Sized {
    fn transformed(&self, transform: &PhaseTransform) -> Result<Self>;
}

impl Transformable for MatrixGame {
    fn transformed(&self, transform: &PhaseTransform) -> Result<Self> {
        match transform {
            PhaseTransform::Identity => Ok(self.clone()),
            PhaseTransform::Negate => Ok(self.negated()),
            PhaseTransform::Nu(v) => rps_game(*v),
        }
    }
}

impl Transformable for GameTree {
    fn transformed(&self, transform: &PhaseTransform) -> Result<Self> {
        match transform {
            PhaseTransform::Identity => Ok(self.clone()),
            PhaseTransform::Negate => Ok(self.scaled(-1.0)),
            PhaseTransform::Nu(_) => Err(Error::InvalidArgument(format!(
                "nu transforms apply to matrix games, not `{}`",
                self.name()
            ))),
        }
    }
}

/// The game seen at iteration `t`. Learner state indexed by information state stays
/// valid because transforms never change the tree structure.
pub fn apply_schedule<G: Transformable>(game: &G, schedule: &RewardSchedule, t: usize) -> Result<G> {
    game.transformed(&schedule.transform_at(t))
}
