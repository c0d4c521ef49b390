//! Fading-aware clustering and the classical weighted K-means baseline.

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DeployError;
use crate::numerics::StreamRng;

/// Sample locations with nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(points: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self, DeployError> {
        if points.len() != weights.len() {
            return Err(DeployError::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(DeployError::BadWeight {
                index: i,
                value: weights[i],
            });
        }
        if let Some(i) = points
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(DeployError::NonFinite(i));
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Centres, assignment and the objective evaluated on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub centers: Vec<[f64; 2]>,
    pub assignment: Vec<usize>,
    pub objective: f64,
}

/// Success-probability kernel `(1 + (d/L)^α / m)^(-m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingKernel {
    pub alpha: f64,
    pub m: f64,
    /// Distances are divided by this before the kernel is applied.
    pub length_scale: f64,
}

impl FadingKernel {
    pub fn new(alpha: f64, m: f64, length_scale: f64) -> Result<Self, DeployError> {
        if !(alpha > 0.0
            && m > 0.0
            && length_scale > 0.0
            && alpha.is_finite()
            && m.is_finite()
            && length_scale.is_finite())
        {
            return Err(DeployError::BadParameter(format!(
                "kernel needs alpha, m, length_scale > 0 (got {alpha}, {m}, {length_scale})"
            )));
        }
        Ok(Self {
            alpha,
            m,
            length_scale,
        })
    }

    pub fn eval(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d2 = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            / (self.length_scale * self.length_scale);
        (-self.m * (d2.powf(0.5 * self.alpha) / self.m).ln_1p()).exp()
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Weighted average success probability `Σ w_i K(x_i, μ_{a_i}) / Σ w_i`.
pub fn fading_objective(
    s: &WeightedSamples,
    centers: &[[f64; 2]],
    assignment: &[usize],
    k: &FadingKernel,
) -> f64 {
    let total = s.total_weight();
    if total == 0.0 {
        return 0.0;
    }
    let v: f64 = (0..s.len())
        .map(|i| s.weights[i] * k.eval(s.points[i], centers[assignment[i]]))
        .sum();
    v / total
}

/// `Σ w_i ||x_i - μ_{a_i}||²`.
pub fn kmeans_objective(s: &WeightedSamples, centers: &[[f64; 2]], assignment: &[usize]) -> f64 {
    (0..s.len())
        .map(|i| s.weights[i] * dist2(s.points[i], centers[assignment[i]]))
        .sum()
}

/// `arg max_j w_i K(x_i, μ_j)`, lowest index on ties. The kernel decreases
/// with distance so this is also the nearest centre.
pub fn fading_assign(s: &WeightedSamples, centers: &[[f64; 2]], k: &FadingKernel) -> Vec<usize> {
    s.points
        .par_iter()
        .zip(s.weights.par_iter())
        .map(|(&x, &w)| {
            let mut best = (f64::NEG_INFINITY, 0);
            for (j, &c) in centers.iter().enumerate() {
                let v = w * k.eval(x, c);
                if v > best.0 {
                    best = (v, j);
                }
            }
            best.1
        })
        .collect()
}

fn nearest_assign(s: &WeightedSamples, centers: &[[f64; 2]]) -> Vec<usize> {
    s.points
        .par_iter()
        .map(|&x| {
            let mut best = (f64::INFINITY, 0);
            for (j, &c) in centers.iter().enumerate() {
                let d = dist2(x, c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect()
}

/// Weighted K-means++ seeding: first centre drawn with probability ∝ `w`,
/// each next one ∝ `w · D²`. Falls back to uniform draws when all scores
/// vanish.
pub fn kmeans_pp_init(
    s: &WeightedSamples,
    k: usize,
    rng: &mut StreamRng,
) -> Result<Vec<[f64; 2]>, DeployError> {
    if s.is_empty() {
        return Err(DeployError::BadParameter("no samples".into()));
    }
    let draw = |scores: &[f64], rng: &mut StreamRng| -> usize {
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            for (i, &x) in scores.iter().enumerate() {
                u -= x;
                if u < 0.0 && x > 0.0 {
                    return i;
                }
            }
            scores.iter().rposition(|&x| x > 0.0).unwrap_or(0)
        } else {
            rng.random_range(0..scores.len())
        }
    };
    let mut centers = vec![s.points[draw(&s.weights, rng)]];
    let mut d2: Vec<f64> = s.points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = (0..s.len()).map(|i| s.weights[i] * d2[i]).collect();
        let c = s.points[draw(&scores, rng)];
        for (i, p) in s.points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(*p, c));
        }
        centers.push(c);
    }
    Ok(centers)
}

/// Per-iteration record of a fading-aware clustering run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective with the previous assignment and previous centres.
    pub before_assign: f64,
    /// Objective after the assignment step.
    pub after_assign: f64,
    /// Objective after the centroid step.
    pub after_update: f64,
    pub max_shift: f64,
    pub reseeded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringRun {
    /// Best iterate seen, including the initial state.
    pub state: ClusterState,
    /// State after the last iteration.
    pub last: ClusterState,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    /// Iterations whose centroid step lowered the objective.
    pub decreasing_updates: usize,
}

fn check_run_params(
    s: &WeightedSamples,
    k: usize,
    epsilon: f64,
    t_max: usize,
    init: &[[f64; 2]],
) -> Result<(), DeployError> {
    if k == 0 || init.len() != k {
        return Err(DeployError::BadParameter(format!(
            "need K >= 1 initial centres, got K={k} with {} centres",
            init.len()
        )));
    }
    if !(epsilon > 0.0) || t_max == 0 {
        return Err(DeployError::BadParameter(format!(
            "need epsilon > 0 and T_max >= 1 (got {epsilon}, {t_max})"
        )));
    }
    if s.is_empty() {
        return Err(DeployError::BadParameter("no samples".into()));
    }
    Ok(())
}

/// Path-loss and fading-aware clustering: nearest-kernel assignment followed
/// by the kernel-weighted centroid update with kernel weights frozen at the
/// pre-update centres. Empty clusters are reseeded at the point with the
/// largest unserved weight `w_i (1 - K_i)`.
pub fn fading_aware_kmeans(
    s: &WeightedSamples,
    k: usize,
    kernel: &FadingKernel,
    epsilon: f64,
    t_max: usize,
    init: &[[f64; 2]],
) -> Result<ClusteringRun, DeployError> {
    check_run_params(s, k, epsilon, t_max, init)?;
    let mut centers = init.to_vec();
    let mut assignment = fading_assign(s, &centers, kernel);
    let obj0 = fading_objective(s, &centers, &assignment, kernel);
    let initial = ClusterState {
        centers: centers.clone(),
        assignment: assignment.clone(),
        objective: obj0,
    };
    if s.total_weight() == 0.0 {
        log::warn!("all sample weights are zero; returning the initial centres");
        return Ok(ClusteringRun {
            state: initial.clone(),
            last: initial,
            trace: Vec::new(),
            converged: true,
            decreasing_updates: 0,
        });
    }
    let mut best = initial;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut decreasing_updates = 0;
    for it in 0..t_max {
        let before_assign = fading_objective(s, &centers, &assignment, kernel);
        assignment = fading_assign(s, &centers, kernel);
        let after_assign = fading_objective(s, &centers, &assignment, kernel);

        let mut num = vec![[0.0f64; 2]; k];
        let mut den = vec![0.0f64; k];
        for i in 0..s.len() {
            let j = assignment[i];
            let w = s.weights[i] * kernel.eval(s.points[i], centers[j]);
            num[j][0] += w * s.points[i][0];
            num[j][1] += w * s.points[i][1];
            den[j] += w;
        }
        let mut next = centers.clone();
        let mut reseeded = 0;
        for j in 0..k {
            if den[j] > 0.0 {
                next[j] = [num[j][0] / den[j], num[j][1] / den[j]];
            } else {
                let worst = (0..s.len())
                    .filter(|&i| !next.contains(&s.points[i]))
                    .max_by(|&a, &b| {
                        let ua =
                            s.weights[a] * (1.0 - kernel.eval(s.points[a], centers[assignment[a]]));
                        let ub =
                            s.weights[b] * (1.0 - kernel.eval(s.points[b], centers[assignment[b]]));
                        ua.total_cmp(&ub).then(b.cmp(&a))
                    });
                if let Some(i) = worst {
                    next[j] = s.points[i];
                    reseeded += 1;
                }
            }
        }
        let max_shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(*a, *b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        let after_update = fading_objective(s, &centers, &assignment, kernel);
        if after_update < after_assign {
            decreasing_updates += 1;
        }
        trace.push(IterationRecord {
            iteration: it,
            before_assign,
            after_assign,
            after_update,
            max_shift,
            reseeded,
        });
        // the objective on (centres, best assignment) dominates the one on
        // (centres, stale assignment)
        let current_assignment = fading_assign(s, &centers, kernel);
        let current = fading_objective(s, &centers, &current_assignment, kernel);
        if current > best.objective {
            best = ClusterState {
                centers: centers.clone(),
                assignment: current_assignment,
                objective: current,
            };
        }
        if max_shift < epsilon && reseeded == 0 {
            converged = true;
            break;
        }
    }
    if decreasing_updates > 0 {
        log::info!("centroid step lowered the objective in {decreasing_updates} iteration(s); best iterate kept");
    }
    let last_assignment = fading_assign(s, &centers, kernel);
    let last = ClusterState {
        objective: fading_objective(s, &centers, &last_assignment, kernel),
        centers,
        assignment: last_assignment,
    };
    Ok(ClusteringRun {
        state: best,
        last,
        trace,
        converged,
        decreasing_updates,
    })
}

/// Classical weighted K-means (Lloyd). A cluster with no weight keeps its
/// centre. The trace records `Σ w ||x - μ||²` after each iteration.
pub fn classical_weighted_kmeans(
    s: &WeightedSamples,
    k: usize,
    epsilon: f64,
    t_max: usize,
    init: &[[f64; 2]],
) -> Result<(ClusterState, Vec<f64>), DeployError> {
    check_run_params(s, k, epsilon, t_max, init)?;
    let mut centers = init.to_vec();
    let mut assignment = nearest_assign(s, &centers);
    let mut trace = vec![kmeans_objective(s, &centers, &assignment)];
    for _ in 0..t_max {
        let mut num = vec![[0.0f64; 2]; k];
        let mut den = vec![0.0f64; k];
        for i in 0..s.len() {
            let j = assignment[i];
            num[j][0] += s.weights[i] * s.points[i][0];
            num[j][1] += s.weights[i] * s.points[i][1];
            den[j] += s.weights[i];
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if den[j] > 0.0 {
                let c = [num[j][0] / den[j], num[j][1] / den[j]];
                shift = shift.max(dist2(c, centers[j]).sqrt());
                centers[j] = c;
            }
        }
        assignment = nearest_assign(s, &centers);
        trace.push(kmeans_objective(s, &centers, &assignment));
        if shift < epsilon {
            break;
        }
    }
    let objective = *trace.last().expect("nonempty");
    Ok((
        ClusterState {
            centers,
            assignment,
            objective,
        },
        trace,
    ))
}
