//! Delaunay CoMP clusters and ABS placement optimisation.

pub mod delaunay;
pub mod kmeans;
pub mod strategies;

use thiserror::Error;

pub use delaunay::{comp_cluster_for_user, delaunay, ClusterLookup, Location, Triangulation};
pub use kmeans::{
    classical_weighted_kmeans, fading_assign, fading_aware_kmeans, fading_objective,
    kmeans_objective, kmeans_pp_init, ClusterState, ClusteringRun, FadingKernel, IterationRecord,
    WeightedSamples,
};
pub use strategies::{
    compare_strategies, coverage_map, grid_points, pgm_bytes, place_abs, sir_gap_weights,
    write_pgm, Comparison, CoverageMap, DeploymentScenario, HeatmapExtents, Strategy,
    StrategyResult,
};

#[derive(Debug, Error)]
pub enum DeployError {
    #[error("triangulation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all input points are collinear")]
    Collinear,
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("triangulation did not recover the convex hull")]
    HullNotRecovered,
    #[error("{points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },
    #[error("weight {index} must be finite and >= 0, got {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("i/o: {0}")]
    Io(#[source] std::io::Error),
}
