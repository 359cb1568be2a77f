pub mod baselines;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod kernel;
pub mod learn;
mod linalg;
pub mod metrics;
pub mod persistence;

pub use error::{Error, Result};
