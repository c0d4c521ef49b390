//! Tier association probabilities and the altitude regime structure.
//!
//! A user associates with the tier whose three nearest stations deliver the
//! larger long-term aggregate amplitude `V = Σ R_n^(-α_n/2)`.

use std::f64::consts::PI;

use rand::RngExt;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::los_probability;
use crate::dist::AbsSampler;
use crate::model::{LinkState, LinkStateVector, Tier, ValidatedConfig};
use crate::numerics::{chunked_map, MeanAccumulator, RngStream, StreamRng, TripleSampler};
use crate::sigstats::{MomentOptions, SigstatsError, TierFits};

/// Minimum user count for the Monte Carlo estimator.
pub const MIN_ASSOC_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssocError {
    #[error(transparent)]
    Sigstats(#[from] SigstatsError),
    #[error("association Monte Carlo needs at least {MIN_ASSOC_TRIALS} users, got {0}")]
    TooFewTrials(usize),
    #[error("altitude grid must be strictly increasing inside (0, H): {0}")]
    BadGrid(String),
    #[error(transparent)]
    Config(#[from] crate::model::ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    MonteCarlo,
}

/// Probabilities of associating with three ABSs or three TBSs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub p_abs: f64,
    pub p_tbs: f64,
    pub std_error: f64,
    pub method: Method,
    pub trials: usize,
}

impl AssociationResult {
    pub fn new(p_abs: f64, std_error: f64, method: Method, trials: usize) -> Self {
        let p_abs = p_abs.clamp(0.0, 1.0);
        Self {
            p_abs,
            p_tbs: 1.0 - p_abs,
            std_error,
            method,
            trials,
        }
    }

    pub fn p(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Abs => self.p_abs,
            Tier::Tbs => self.p_tbs,
        }
    }
}

/// ABS association probability as the product over the eight TBS link-state
/// vectors of `E[P(V_TBS,ζ <= V_ABS)]`, the expectation taken over the ABS
/// joint distance law by sampling.
pub fn assoc_prob_abs_analytic(
    cfg: &ValidatedConfig,
    fits: &TierFits,
    trials: usize,
    rng: &RngStream,
) -> Result<AssociationResult, AssocError> {
    if trials < MIN_ASSOC_TRIALS {
        return Err(AssocError::TooFewTrials(trials));
    }
    let sampler = AbsSampler::new(cfg);
    let alpha = cfg.alpha(Tier::Abs, LinkState::Los);
    let parts = chunked_map(trials, rng, |r, count| {
        let mut acc = [MeanAccumulator::default(); 8];
        for _ in 0..count {
            let d = sampler.sample_triple(r);
            let v: f64 = d.iter().map(|x| x.powf(-0.5 * alpha)).sum();
            for (k, a) in acc.iter_mut().enumerate() {
                a.push(fits.tbs_v[k].cdf(v));
            }
        }
        acc
    });
    let mut p = 1.0;
    let mut means = [0.0; 8];
    let mut ses = [0.0; 8];
    for k in 0..8 {
        let m = MeanAccumulator::merge_all(&parts.iter().map(|x| x[k]).collect::<Vec<_>>());
        means[k] = m.mean;
        ses[k] = m.std_error();
        p *= m.mean;
    }
    // delta method, factors treated as independent
    let var: f64 = (0..8)
        .map(|k| {
            let others: f64 = (0..8).filter(|&j| j != k).map(|j| means[j]).product();
            (others * ses[k]).powi(2)
        })
        .sum();
    Ok(AssociationResult::new(
        p,
        var.sqrt(),
        Method::Analytic,
        trials,
    ))
}

/// Convenience wrapper that also computes the TBS fits.
pub fn assoc_prob_abs_analytic_from_cfg(
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
    trials: usize,
    rng: &RngStream,
) -> Result<AssociationResult, AssocError> {
    let fits = TierFits::compute(cfg, opts)?;
    assoc_prob_abs_analytic(cfg, &fits, trials, rng)
}

/// Where simulated users are dropped, relative to the ABS disk centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UserPlacement {
    /// Directly below the disk centre (the analytic model's typical user).
    Center,
    /// Uniform over a square of the given side centred on the disk.
    Square { side: f64 },
}

/// Monte Carlo association outcome including the three-way split of the six
/// candidates (three nearest per tier) by long-term power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McAssociation {
    pub result: AssociationResult,
    /// Strongest three drawn from both tiers are all ABS.
    pub p_top3_abs: f64,
    /// Strongest three are all TBS.
    pub p_top3_tbs: f64,
    /// Strongest three mix tiers.
    pub p_mixed: f64,
}

struct UserOutcome {
    abs_wins: bool,
    top3_abs: usize,
}

fn place_user(placement: UserPlacement, rng: &mut StreamRng) -> (f64, f64) {
    match placement {
        UserPlacement::Center => (0.0, 0.0),
        UserPlacement::Square { side } => (
            side * (rng.random::<f64>() - 0.5),
            side * (rng.random::<f64>() - 0.5),
        ),
    }
}

fn one_user(
    cfg: &ValidatedConfig,
    placement: UserPlacement,
    rng: &mut StreamRng,
    abs_buf: &mut Vec<f64>,
) -> UserOutcome {
    let (ux, uy) = place_user(placement, rng);
    let gap2 = cfg.gap() * cfg.gap();
    let alpha_a = cfg.alpha(Tier::Abs, LinkState::Los);
    abs_buf.clear();
    for _ in 0..cfg.n_abs() {
        let rho = cfg.r_c() * rng.random::<f64>().sqrt();
        let phi = 2.0 * PI * rng.random::<f64>();
        let (dx, dy) = (rho * phi.cos() - ux, rho * phi.sin() - uy);
        abs_buf.push((dx * dx + dy * dy + gap2).sqrt().powf(-0.5 * alpha_a));
    }
    abs_buf.sort_by(|a, b| b.total_cmp(a));
    let v_abs = abs_buf[0] + abs_buf[1] + abs_buf[2];

    // TBS field around the user, generated nearest first
    let h = cfg.h();
    let pi_lambda = PI * cfg.lambda();
    let (al, an) = (
        cfg.alpha(Tier::Tbs, LinkState::Los),
        cfg.alpha(Tier::Tbs, LinkState::Nlos),
    );
    let alpha_min = al.min(an);
    let mut top = [abs_buf[0], abs_buf[1], abs_buf[2]];
    let mut top_is_abs = [true; 3];
    let mut z2 = 0.0;
    let mut v_tbs = 0.0;
    let mut k = 0;
    loop {
        let e: f64 = Exp1.sample(rng);
        z2 += e / pi_lambda;
        let r2 = z2 + h * h;
        if k >= 3 && r2.powf(-0.25 * alpha_min) < top[2] {
            break;
        }
        let alpha = if rng.random::<f64>() < los_probability(z2.sqrt(), h, cfg.env()) {
            al
        } else {
            an
        };
        let x = r2.powf(-0.25 * alpha);
        if k < 3 {
            v_tbs += x;
        }
        k += 1;
        if x > top[2] {
            let mut i = 2;
            while i > 0 && x > top[i - 1] {
                top[i] = top[i - 1];
                top_is_abs[i] = top_is_abs[i - 1];
                i -= 1;
            }
            top[i] = x;
            top_is_abs[i] = false;
        }
    }
    UserOutcome {
        abs_wins: v_abs > v_tbs,
        top3_abs: top_is_abs.iter().filter(|&&b| b).count(),
    }
}

/// Monte Carlo association probability: each trial realizes an independent
/// network (ABS BPP on the disk and an unbounded TBS PPP) around one user.
pub fn assoc_prob_mc(
    cfg: &ValidatedConfig,
    trials: usize,
    placement: UserPlacement,
    rng: &RngStream,
) -> Result<McAssociation, AssocError> {
    if trials < MIN_ASSOC_TRIALS {
        return Err(AssocError::TooFewTrials(trials));
    }
    let parts = chunked_map(trials, rng, |r, count| {
        let mut buf = Vec::with_capacity(cfg.n_abs());
        let mut acc = [0usize; 4];
        for _ in 0..count {
            let o = one_user(cfg, placement, r, &mut buf);
            acc[0] += usize::from(o.abs_wins);
            match o.top3_abs {
                3 => acc[1] += 1,
                0 => acc[2] += 1,
                _ => acc[3] += 1,
            }
        }
        acc
    });
    let mut tot = [0usize; 4];
    for p in &parts {
        for k in 0..4 {
            tot[k] += p[k];
        }
    }
    let n = trials as f64;
    let p_abs = tot[0] as f64 / n;
    Ok(McAssociation {
        result: AssociationResult::new(
            p_abs,
            (p_abs * (1.0 - p_abs) / n).sqrt(),
            Method::MonteCarlo,
            trials,
        ),
        p_top3_abs: tot[1] as f64 / n,
        p_top3_tbs: tot[2] as f64 / n,
        p_mixed: tot[3] as f64 / n,
    })
}

/// Which half-height case applies to the minimum of the association curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeCase {
    /// Minimum above one half: ABS association dominates at every altitude.
    AboveHalf,
    /// Minimum exactly one half: a single tangency.
    AtHalf,
    /// Minimum below one half: zero to two crossings decided by the endpoints.
    BelowHalf,
}

/// Altitude regime of the ABS association probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub h_grid: Vec<f64>,
    pub p_abs_curve: Vec<f64>,
    pub h_threshold: f64,
    pub p_min: f64,
    pub half_heights: Vec<f64>,
    pub case: RegimeCase,
    pub u_shaped: bool,
}

fn is_u_shaped(p: &[f64], imin: usize, tol: f64) -> bool {
    p[..=imin].windows(2).all(|w| w[1] <= w[0] + tol)
        && p[imin..].windows(2).all(|w| w[1] + tol >= w[0])
}

fn bisect(mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64, decreasing: bool, iters: usize) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let above = f(mid) >= 0.5;
        if above == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classifies an association curve. `refine` evaluates `p_abs(h)` off-grid for
/// bisection; without it the bisection runs on the linear interpolant.
/// `tol` absorbs estimator noise in the U-shape test.
pub fn analyze_curve(
    h_grid: &[f64],
    p_abs: &[f64],
    refine: Option<&dyn Fn(f64) -> f64>,
    tol: f64,
) -> Result<RegimeReport, AssocError> {
    if h_grid.len() != p_abs.len() || h_grid.len() < 2 {
        return Err(AssocError::BadGrid(
            "need at least two altitudes with matching values".into(),
        ));
    }
    if h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AssocError::BadGrid(
            "altitudes not strictly increasing".into(),
        ));
    }
    let imin = (0..p_abs.len()).fold(0, |b, i| if p_abs[i] < p_abs[b] { i } else { b });
    let p_min = p_abs[imin];
    let u_shaped = is_u_shaped(p_abs, imin, tol);
    let case = if p_min > 0.5 {
        RegimeCase::AboveHalf
    } else if p_min == 0.5 {
        RegimeCase::AtHalf
    } else {
        RegimeCase::BelowHalf
    };
    let interp = |h: f64| {
        let i = h_grid
            .partition_point(|&x| x <= h)
            .clamp(1, h_grid.len() - 1);
        let t = (h - h_grid[i - 1]) / (h_grid[i] - h_grid[i - 1]);
        p_abs[i - 1] + t * (p_abs[i] - p_abs[i - 1])
    };
    let f: &dyn Fn(f64) -> f64 = match refine {
        Some(r) => r,
        None => &interp,
    };
    let mut half_heights = Vec::new();
    if u_shaped {
        match case {
            RegimeCase::AboveHalf => {}
            RegimeCase::AtHalf => half_heights.push(h_grid[imin]),
            RegimeCase::BelowHalf => {
                if p_abs[0] >= 0.5 {
                    let i = (0..imin)
                        .rev()
                        .find(|&i| p_abs[i] >= 0.5)
                        .expect("left endpoint above half");
                    half_heights.push(bisect(h_grid[i], h_grid[i + 1], f, true, 60));
                }
                if *p_abs.last().expect("nonempty") >= 0.5 {
                    let i = (imin + 1..p_abs.len())
                        .find(|&i| p_abs[i] >= 0.5)
                        .expect("right endpoint above half");
                    half_heights.push(bisect(h_grid[i - 1], h_grid[i], f, false, 60));
                }
            }
        }
    }
    Ok(RegimeReport {
        h_grid: h_grid.to_vec(),
        p_abs_curve: p_abs.to_vec(),
        h_threshold: h_grid[imin],
        p_min,
        half_heights,
        case,
        u_shaped,
    })
}

/// Estimator used to trace the association curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AssocEstimator {
    MonteCarlo {
        trials: usize,
        placement: UserPlacement,
    },
    Analytic {
        trials: usize,
        moments: MomentOptions,
    },
}

/// Association probability at a single user altitude.
pub fn p_abs_at(
    cfg: &ValidatedConfig,
    h: f64,
    est: &AssocEstimator,
    rng: &RngStream,
) -> Result<f64, AssocError> {
    let c = cfg.modified(|c| c.h = h)?;
    Ok(match est {
        AssocEstimator::MonteCarlo { trials, placement } => {
            assoc_prob_mc(&c, *trials, *placement, rng)?.result.p_abs
        }
        AssocEstimator::Analytic { trials, moments } => {
            assoc_prob_abs_analytic_from_cfg(&c, moments, *trials, rng)?.p_abs
        }
    })
}

/// Traces `p_abs(h)` over the grid and classifies the regime.
pub fn regime_analysis(
    cfg: &ValidatedConfig,
    h_grid: &[f64],
    est: &AssocEstimator,
    rng: &RngStream,
) -> Result<RegimeReport, AssocError> {
    if h_grid.iter().any(|&h| !(h > 0.0 && h < cfg.big_h())) {
        return Err(AssocError::BadGrid(format!(
            "altitudes must lie in (0, {})",
            cfg.big_h()
        )));
    }
    let curve = h_grid
        .iter()
        .enumerate()
        .map(|(i, &h)| p_abs_at(cfg, h, est, &rng.substream(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let tol = match est {
        AssocEstimator::MonteCarlo { trials, .. } | AssocEstimator::Analytic { trials, .. } => {
            3.0 * (0.25 / *trials as f64).sqrt()
        }
    };
    let refine = |h: f64| p_abs_at(cfg, h, est, &rng.substream(0xB15EC7)).unwrap_or(f64::NAN);
    analyze_curve(h_grid, &curve, Some(&refine), tol)
}

/// Link-state vector helper used by reports.
pub fn zeta_labels() -> Vec<String> {
    LinkStateVector::all()
        .iter()
        .map(|z| z.to_string())
        .collect()
}
