pub mod baselines;
pub mod error;
pub mod harness;
pub mod optimality;
pub mod sampling;
pub mod scale_invariant;
pub mod specfun;
pub mod stats;
pub mod universal;

pub use error::{Error, Result};
