//! Laboratory for the random-order streaming lower bound on frequency
//! moments: exact and sampled `F_k`, the t-party set-disjointness reduction
//! that assembles a random-order stream from the players' sets, and
//! Monte-Carlo checks of the probabilistic claims it relies on.

pub mod diagnostics;
pub mod disjointness;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod intervals;
pub mod moments;
pub mod params;
pub mod protocol;
pub mod seed;
pub mod stats;

pub use error::{LabError, Result};
pub use params::Params;
