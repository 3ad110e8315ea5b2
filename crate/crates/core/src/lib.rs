//! Neural replicator dynamics (NeuRD) and its relatives over small benchmark games.

pub mod cfr;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod games;
pub mod learners;
pub mod neural;
pub mod policy;

pub use error::{Error, Result};
