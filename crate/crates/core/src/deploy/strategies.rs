//! System-level coverage maps with Delaunay CoMP clusters, SIR-gap weights
//! and the four-way deployment comparison.

use std::io::Write;
use std::path::Path;

use rand::RngExt;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::delaunay::{comp_cluster_for_user, delaunay, Triangulation};
use super::kmeans::{
    classical_weighted_kmeans, fading_aware_kmeans, kmeans_pp_init, FadingKernel, WeightedSamples,
};
use super::DeployError;
use crate::model::{db_to_linear, ValidatedConfig};
use crate::numerics::{RngStream, StreamRng};
use crate::sim::{draw_links, sir_for_set, Deployment, FadingSet, Link, Sir};

/// Square study area with a TBS field on a larger concentric square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentScenario {
    /// Side of the study area (m); the area spans `[0, side]²`.
    pub area_side: f64,
    /// Grid cells per side.
    pub grid_n: usize,
    /// Side of the square carrying the TBS field, centred on the area.
    pub tbs_side: f64,
    /// ABS budget.
    pub k: usize,
    /// Coverage threshold, also the target SIR of the weights (dB).
    pub gamma_db: f64,
    /// Fading/link-state draws per grid cell for coverage maps.
    pub trials_per_cell: usize,
    /// Draws per grid cell for the TBS-only SIR estimate behind the weights.
    pub weight_trials: usize,
    pub kernel: FadingKernel,
    pub epsilon: f64,
    pub t_max: usize,
}

impl Default for DeploymentScenario {
    fn default() -> Self {
        Self {
            area_side: 1000.0,
            grid_n: 20,
            tbs_side: 3000.0,
            k: 18,
            gamma_db: 0.0,
            trials_per_cell: 200,
            weight_trials: 200,
            kernel: FadingKernel {
                alpha: 2.0,
                m: 2.0,
                length_scale: 1.0,
            },
            epsilon: 1e-3,
            t_max: 100,
        }
    }
}

/// Cell centres of an `n × n` grid over `[0, side]²`, row-major with `y`
/// increasing.
pub fn grid_points(side: f64, n: usize) -> Vec<[f64; 2]> {
    let step = side / n as f64;
    (0..n * n)
        .map(|i| [((i % n) as f64 + 0.5) * step, ((i / n) as f64 + 0.5) * step])
        .collect()
}

/// PPP of TBSs on the square `center ± side/2`.
pub fn sample_tbs_square(
    cfg: &ValidatedConfig,
    side: f64,
    center: [f64; 2],
    rng: &mut StreamRng,
) -> Vec<[f64; 3]> {
    let count = Poisson::new(cfg.lambda() * side * side)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    (0..count)
        .map(|_| {
            [
                center[0] + side * (rng.random::<f64>() - 0.5),
                center[1] + side * (rng.random::<f64>() - 0.5),
                0.0,
            ]
        })
        .collect()
}

fn triangulate(points: &[[f64; 3]]) -> Option<Triangulation> {
    if points.len() < 3 {
        return None;
    }
    let xy: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    delaunay(&xy).ok()
}

fn nearest3(links: &[Link], range: std::ops::Range<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = range.collect();
    idx.sort_by(|&a, &b| links[a].dist.total_cmp(&links[b].dist).then(a.cmp(&b)));
    idx.truncate(3);
    idx
}

/// Per-cell coverage and mean SIR (dB, finite samples only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub coverage: Vec<f64>,
    pub mean_sir_db: Vec<f64>,
}

impl CoverageMap {
    pub fn aggregate(&self) -> f64 {
        self.coverage.iter().sum::<f64>() / self.coverage.len().max(1) as f64
    }
}

/// Coverage over `grid` for users at altitude `h`. Each tier's CoMP cluster
/// is the Delaunay triangle containing the user (three nearest when outside
/// the hull or when the tier cannot be triangulated); the tier with the larger
/// long-term aggregate amplitude serves.
pub fn coverage_map(
    grid: &[[f64; 2]],
    dep: &Deployment,
    cfg: &ValidatedConfig,
    gamma_db: f64,
    trials: usize,
    rng: &RngStream,
) -> Result<CoverageMap, DeployError> {
    if trials == 0 {
        return Err(DeployError::BadParameter("trials must be >= 1".into()));
    }
    let fad = FadingSet::for_config(cfg).map_err(crate::sim::SimError::from)?;
    let tbs_tri = triangulate(&dep.tbs_positions);
    let abs_tri = triangulate(&dep.abs_positions);
    let n_abs = dep.abs_positions.len();
    let n_tbs = dep.tbs_positions.len();
    let threshold = db_to_linear(gamma_db);
    let per_cell: Vec<(f64, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(ci, &u)| {
            let mut r = rng.substream(ci as u64).rng();
            let user = [u[0], u[1], cfg.h()];
            let tbs_fixed = tbs_tri.as_ref().map(|t| {
                let c = comp_cluster_for_user(u, t);
                (c.vertices, c.fallback)
            });
            let abs_fixed = abs_tri.as_ref().map(|t| {
                let c = comp_cluster_for_user(u, t);
                (c.vertices, c.fallback)
            });
            let (mut covered, mut sir_db, mut finite) = (0usize, 0.0, 0usize);
            for _ in 0..trials {
                let links = draw_links(user, dep, cfg, &fad, &mut r);
                let tbs_set: Vec<usize> = match tbs_fixed {
                    Some((v, false)) => v.iter().map(|&k| n_abs + k).collect(),
                    _ => nearest3(&links, n_abs..n_abs + n_tbs),
                };
                let abs_set: Vec<usize> = match abs_fixed {
                    Some((v, false)) => v.to_vec(),
                    _ => nearest3(&links, 0..n_abs),
                };
                let v = |s: &[usize]| s.iter().map(|&i| links[i].amp).sum::<f64>();
                let set = if !abs_set.is_empty() && v(&abs_set) > v(&tbs_set) {
                    abs_set
                } else {
                    tbs_set
                };
                let sir = sir_for_set(&links, &set, dep.far_field);
                covered += usize::from(sir.covers(threshold));
                if let Sir::Finite(_) = sir {
                    sir_db += sir.db().expect("finite");
                    finite += 1;
                }
            }
            let mean = if finite > 0 {
                sir_db / finite as f64
            } else {
                f64::INFINITY
            };
            (covered as f64 / trials as f64, mean)
        })
        .collect();
    Ok(CoverageMap {
        coverage: per_cell.iter().map(|x| x.0).collect(),
        mean_sir_db: per_cell.iter().map(|x| x.1).collect(),
    })
}

/// `w_i = max(0, γ_TBS - γ_i)` with `γ_i` the mean SIR in dB at grid point `i`
/// of the TBS-only network `dep` (its ABS list is ignored).
pub fn sir_gap_weights(
    grid: &[[f64; 2]],
    dep: &Deployment,
    cfg: &ValidatedConfig,
    trials: usize,
    rng: &RngStream,
) -> Result<WeightedSamples, DeployError> {
    if grid.is_empty() {
        return Err(DeployError::BadParameter("empty grid".into()));
    }
    let tbs_only = Deployment {
        abs_positions: Vec::new(),
        ..dep.clone()
    };
    let map = coverage_map(grid, &tbs_only, cfg, cfg.raw().gamma_tbs, trials, rng)?;
    let target = cfg.raw().gamma_tbs;
    let weights = map
        .mean_sir_db
        .iter()
        .map(|&g| (target - g).max(0.0))
        .collect();
    WeightedSamples::new(grid.to_vec(), weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    TbsOnly,
    RandomAbs,
    ClassicalKmeans,
    FadingAware,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::TbsOnly,
        Strategy::RandomAbs,
        Strategy::ClassicalKmeans,
        Strategy::FadingAware,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::TbsOnly => "tbs-only",
            Strategy::RandomAbs => "random",
            Strategy::ClassicalKmeans => "classical-kmeans",
            Strategy::FadingAware => "fading-aware",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                format!("unknown strategy '{s}' (tbs-only, random, classical-kmeans, fading-aware)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub centers: Vec<[f64; 2]>,
    pub map: CoverageMap,
    pub aggregate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: DeploymentScenario,
    pub grid: Vec<[f64; 2]>,
    pub tbs_positions: Vec<[f64; 3]>,
    pub weights: WeightedSamples,
    pub results: Vec<StrategyResult>,
}

impl Comparison {
    pub fn result(&self, s: Strategy) -> &StrategyResult {
        self.results
            .iter()
            .find(|r| r.strategy == s)
            .expect("all strategies evaluated")
    }
}

/// ABS positions chosen by `strategy` for the given weights.
pub fn place_abs(
    strategy: Strategy,
    samples: &WeightedSamples,
    scenario: &DeploymentScenario,
    rng: &RngStream,
) -> Result<Vec<[f64; 2]>, DeployError> {
    let k = scenario.k;
    if k == 0 || strategy == Strategy::TbsOnly {
        return Ok(Vec::new());
    }
    match strategy {
        Strategy::TbsOnly => unreachable!(),
        Strategy::RandomAbs => {
            let mut r = rng.substream(0).rng();
            Ok((0..k)
                .map(|_| {
                    [
                        scenario.area_side * r.random::<f64>(),
                        scenario.area_side * r.random::<f64>(),
                    ]
                })
                .collect())
        }
        Strategy::ClassicalKmeans | Strategy::FadingAware => {
            let init = kmeans_pp_init(samples, k, &mut rng.substream(1).rng())?;
            if strategy == Strategy::ClassicalKmeans {
                Ok(
                    classical_weighted_kmeans(samples, k, scenario.epsilon, scenario.t_max, &init)?
                        .0
                        .centers,
                )
            } else {
                Ok(fading_aware_kmeans(
                    samples,
                    k,
                    &scenario.kernel,
                    scenario.epsilon,
                    scenario.t_max,
                    &init,
                )?
                .state
                .centers)
            }
        }
    }
}

/// Runs all four strategies on one TBS realization. Every coverage map uses
/// the same per-cell random streams.
pub fn compare_strategies(
    cfg: &ValidatedConfig,
    scenario: &DeploymentScenario,
    rng: &RngStream,
) -> Result<Comparison, DeployError> {
    if scenario.k > cfg.n_abs() {
        return Err(DeployError::BadParameter(format!(
            "K = {} exceeds the ABS budget N = {}",
            scenario.k,
            cfg.n_abs()
        )));
    }
    if scenario.grid_n == 0
        || !(scenario.area_side > 0.0)
        || !(scenario.tbs_side >= scenario.area_side)
    {
        return Err(DeployError::BadParameter(
            "need grid_n >= 1 and tbs_side >= area_side > 0".into(),
        ));
    }
    let cfg = cfg
        .modified(|c| c.gamma_tbs = scenario.gamma_db)
        .map_err(|e| DeployError::BadParameter(e.to_string()))?;
    let half = 0.5 * scenario.area_side;
    let tbs = sample_tbs_square(
        &cfg,
        scenario.tbs_side,
        [half, half],
        &mut rng.substream(0).rng(),
    );
    let grid = grid_points(scenario.area_side, scenario.grid_n);
    let base = Deployment {
        abs_positions: Vec::new(),
        tbs_positions: tbs.clone(),
        region_radius: 0.5 * scenario.tbs_side,
        far_field: 0.0,
    };
    let weights = sir_gap_weights(
        &grid,
        &base,
        &cfg,
        scenario.weight_trials,
        &rng.substream(1),
    )?;
    let mut results = Vec::new();
    for s in Strategy::ALL {
        let centers = place_abs(s, &weights, scenario, &rng.substream(2))?;
        let dep = Deployment {
            abs_positions: centers.iter().map(|c| [c[0], c[1], cfg.big_h()]).collect(),
            ..base.clone()
        };
        let map = coverage_map(
            &grid,
            &dep,
            &cfg,
            scenario.gamma_db,
            scenario.trials_per_cell,
            &rng.substream(3),
        )?;
        log::info!("{}: aggregate coverage {:.4}", s.name(), map.aggregate());
        results.push(StrategyResult {
            strategy: s,
            aggregate: map.aggregate(),
            centers,
            map,
        });
    }
    Ok(Comparison {
        scenario: *scenario,
        grid,
        tbs_positions: tbs,
        weights,
        results,
    })
}

/// Extents written next to a PGM heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapExtents {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cols: usize,
    pub rows: usize,
    pub value_min: f64,
    pub value_max: f64,
}

/// Binary PGM, one byte per cell (`round(255 v)` for `v` in `[0, 1]`). Grid
/// rows are stored with `y` increasing; the image is written top row first
/// (largest `y`).
pub fn pgm_bytes(values: &[f64], cols: usize, rows: usize) -> Result<Vec<u8>, DeployError> {
    if values.len() != cols * rows {
        return Err(DeployError::BadParameter(format!(
            "{} values for a {cols}x{rows} image",
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(values.len() + 32);
    write!(out, "P5\n{cols} {rows}\n255\n").map_err(DeployError::Io)?;
    for row in (0..rows).rev() {
        for col in 0..cols {
            out.push((values[row * cols + col].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, values: &[f64], cols: usize, rows: usize) -> Result<(), DeployError> {
    std::fs::write(path, pgm_bytes(values, cols, rows)?).map_err(DeployError::Io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;
    use crate::numerics::stats::spearman;

    fn cfg() -> ValidatedConfig {
        NetworkConfig::reference().validate().unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = grid_points(100.0, 4);
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], [12.5, 12.5]);
        assert_eq!(g[1], [37.5, 12.5]);
        assert_eq!(g[4], [12.5, 37.5]);
    }

    #[test]
    fn good_coverage_gives_zero_weight() {
        let c = cfg().modified(|c| c.gamma_tbs = -60.0).unwrap();
        let mut r = RngStream::new(1, 0).rng();
        let tbs = sample_tbs_square(&c, 3000.0, [500.0, 500.0], &mut r);
        let dep = Deployment {
            abs_positions: vec![],
            tbs_positions: tbs,
            region_radius: 1500.0,
            far_field: 0.0,
        };
        let w =
            sir_gap_weights(&grid_points(1000.0, 5), &dep, &c, 20, &RngStream::new(2, 0)).unwrap();
        assert!(w.weights.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weights_grow_away_from_tbs() {
        // sparse field: holes far from every station get the largest weights
        let c = cfg()
            .modified(|c| {
                c.lambda_tbs = 4.0;
                c.gamma_tbs = 10.0;
            })
            .unwrap();
        let mut r = RngStream::new(3, 0).rng();
        let tbs = sample_tbs_square(&c, 4000.0, [1000.0, 1000.0], &mut r);
        let dep = Deployment {
            abs_positions: vec![],
            tbs_positions: tbs.clone(),
            region_radius: 2000.0,
            far_field: 0.0,
        };
        let grid = grid_points(2000.0, 12);
        let w = sir_gap_weights(&grid, &dep, &c, 100, &RngStream::new(4, 0)).unwrap();
        let dist: Vec<f64> = grid
            .iter()
            .map(|g| {
                tbs.iter()
                    .map(|t| (t[0] - g[0]).hypot(t[1] - g[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let rho = spearman(&w.weights, &dist);
        assert!(rho > 0.0, "rho={rho}");
    }

    #[test]
    fn zero_budget_collapses_to_tbs_only() {
        let sc = DeploymentScenario {
            k: 0,
            grid_n: 6,
            trials_per_cell: 20,
            weight_trials: 20,
            ..Default::default()
        };
        let cmp = compare_strategies(&cfg(), &sc, &RngStream::new(5, 0)).unwrap();
        let base = &cmp.result(Strategy::TbsOnly).map;
        for s in Strategy::ALL {
            assert_eq!(&cmp.result(s).map, base);
        }
    }

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        write_pgm(&p, &[0.0, 1.0, 0.5, 0.25], 2, 2).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert!(b.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&b[b.len() - 4..], &[128, 64, 0, 255]);
        assert!(write_pgm(&p, &[0.0], 2, 2).is_err());
    }
}
