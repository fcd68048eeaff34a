pub mod bohmian;
pub mod cli;
pub mod correlations;
pub mod ensembles;
pub mod error;
pub mod lhv;
pub mod rng;
pub mod spin_algebra;

pub use error::{Error, Result};
