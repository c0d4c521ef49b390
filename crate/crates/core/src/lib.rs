//! Coverage analysis for vertical heterogeneous networks in which a finite
//! swarm of aerial base stations (ABSs) shares the sky with a Poisson field of
//! terrestrial base stations (TBSs), and aerial users are served by
//! three-station coherent joint transmission (CoMP).
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: scenario parameters, validation, enumerations.
//! * [`numerics`]: special functions, quadrature, seeded streams, MC drivers.
//! * [`channel`]: LoS probability, Nakagami fading, path loss.
//! * [`dist`]: nearest-neighbour distance laws and exact samplers.
//! * [`sigstats`]: Gamma moment matching of the aggregate CoMP signal.
//! * [`assoc`]: tier association probabilities and the altitude regime.
//! * [`coverage`]: the semi-analytic coverage pipeline.
//! * [`sim`]: full Monte Carlo ground truth.
//! * [`deploy`]: Delaunay clustering and ABS placement optimisation.
//! * [`experiments`]: end-to-end experiment drivers shared by the CLI and tests.

pub mod assoc;
pub mod channel;
pub mod coverage;
pub mod deploy;
pub mod dist;
mod error;
pub mod experiments;
pub mod model;
pub mod numerics;
pub mod sigstats;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Environment, LinkState, LinkStateVector, NetworkConfig, Tier, ValidatedConfig};
pub use numerics::{QuadratureSpec, RngStream};
