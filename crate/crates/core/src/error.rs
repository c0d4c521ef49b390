use thiserror::Error;

use crate::{assoc, channel, coverage, deploy, dist, model, numerics, sigstats, sim};

/// Crate-wide error: one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] model::ConfigError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
    #[error(transparent)]
    Dist(#[from] dist::DistError),
    #[error(transparent)]
    Sigstats(#[from] sigstats::SigstatsError),
    #[error(transparent)]
    Assoc(#[from] assoc::AssocError),
    #[error(transparent)]
    Coverage(#[from] coverage::CoverageError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Deploy(#[from] deploy::DeployError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
