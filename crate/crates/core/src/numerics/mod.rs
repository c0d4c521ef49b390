//! Shared numerical kernels.

mod mc;
mod quad;
mod rng;
mod special;
pub mod stats;

use thiserror::Error;

pub use mc::{
    chunked_map, integrate_ordered_triple_mc, pairwise_sum, McEstimate, MeanAccumulator,
    TripleSampler, MC_CHUNK, MIN_TRIALS,
};
pub use quad::{integrate_1d, QuadratureSpec};
pub use rng::{RngStream, StreamRng};
pub use special::{binomial, factorial, gamma_fn, ln_gamma, reg_lower_gamma, reg_upper_gamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("domain violation in {func}: {detail}")]
    Domain { func: &'static str, detail: String },
    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },
    #[error("Monte Carlo needs at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}
