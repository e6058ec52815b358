//! Liquidity commonality estimation: Amihud illiquidity changes, market and
//! high-ownership liquidity betas, portfolio sorts, Fama-MacBeth and
//! time-series regressions with Newey-West errors, plus a synthetic panel
//! generator with known ground truth.

pub mod analytics;
pub mod commonality;
pub mod econ;
pub mod error;
pub mod illiq;
pub mod ingest;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
