//! End-to-end experiment drivers shared by the command-line runner, the FFI
//! layer and the acceptance suite.
//!
//! Drivers are deterministic in their [`RngStream`] and return typed rows;
//! [`Artifact`]s hold the rendered CSV/JSON/PGM bytes so callers decide where
//! (and whether) they land on disk.

use std::cell::Cell;
use std::fmt;
use std::time::Instant;

use rand::RngExt;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assoc::{analyze_curve, assoc_prob_mc, RegimeReport, UserPlacement};
use crate::coverage::{coverage_analytic_sweep, CoverageOptions};
use crate::deploy::{
    classical_weighted_kmeans, compare_strategies, delaunay, fading_aware_kmeans, fading_objective,
    kmeans_pp_init, pgm_bytes, Comparison, DeploymentScenario, FadingKernel, Strategy,
    WeightedSamples,
};
use crate::dist::{self, TierSampler};
use crate::model::{Environment, LinkStateVector, NetworkConfig, Tier, ValidatedConfig};
use crate::numerics::stats::ks_statistic;
use crate::numerics::{chunked_map, RngStream, TripleSampler};
use crate::sigstats::{
    compute_moments, fit_gamma_u_from, fit_gamma_v_from, sample_masked_v, MomentOptions, SignalLaw,
};
use crate::sim::{empirical_coverage_sweep, Policy};
use crate::{Error, Result};

/// Seed used by `repro-all` when none is given.
pub const DEFAULT_SEED: u64 = 42;

const DEPLOYMENT_STUDY_JSON: &str = include_str!("../scenarios/deployment_comparison.json");

/// Target aggregate coverage of the deployment comparison, in strategy order
/// fading-aware, classical, random, TBS-only.
pub const DEPLOYMENT_TARGETS: [(Strategy, f64); 4] = [
    (Strategy::FadingAware, 0.8142),
    (Strategy::ClassicalKmeans, 0.7985),
    (Strategy::RandomAbs, 0.7293),
    (Strategy::TbsOnly, 0.6199),
];

/// Named starting configurations for the CLI `--preset` flag.
pub fn preset(name: &str) -> Option<NetworkConfig> {
    match name {
        "reference" | "default" => Some(NetworkConfig::reference()),
        "association-highrise" => Some(NetworkConfig::association_scenario(
            Environment::HIGHRISE_URBAN,
        )),
        "association-suburban" => Some(NetworkConfig::association_scenario(Environment::SUBURBAN)),
        "deployment" => Some(DeploymentStudy::reference().config),
        _ => None,
    }
}

pub const PRESETS: [&str; 4] = [
    "reference",
    "association-highrise",
    "association-suburban",
    "deployment",
];

/// One rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    pub fn csv<T: Serialize>(name: impl Into<String>, rows: &[T]) -> Result<Self> {
        Ok(Self::new(name, csv_bytes(rows)?))
    }

    pub fn json<T: Serialize + ?Sized>(name: impl Into<String>, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self::new(name, bytes))
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

/// CSV with a header row taken from the field names.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// `steps` evenly spaced thresholds from `min` to `max` inclusive.
pub fn gamma_grid(min_db: f64, max_db: f64, steps: usize) -> Vec<f64> {
    linspace(min_db, max_db, steps)
}

// ---------------------------------------------------------------------------
// distance laws

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceKsRow {
    pub tier: Tier,
    pub n: usize,
    pub draws: usize,
    pub ks: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceTableRow {
    pub tier: Tier,
    pub n: usize,
    pub r: f64,
    pub pdf: f64,
    pub cdf: f64,
}

fn tier_index(t: Tier) -> u64 {
    match t {
        Tier::Abs => 0,
        Tier::Tbs => 1,
    }
}

fn table_range(tier: Tier, cfg: &ValidatedConfig) -> (f64, f64) {
    match tier {
        Tier::Abs => dist::support(tier, cfg),
        Tier::Tbs => (cfg.h(), dist::tbs_truncation_radius(3, 1e-9, cfg)),
    }
}

/// KS distance between each analytic `n`-th nearest CDF and `draws` exact
/// samples of the ordered triple.
pub fn distance_ks(
    cfg: &ValidatedConfig,
    draws: usize,
    rng: &RngStream,
) -> Result<Vec<DistanceKsRow>> {
    let mut rows = Vec::new();
    for tier in [Tier::Abs, Tier::Tbs] {
        let sampler = TierSampler::new(tier, cfg);
        let triples: Vec<[f64; 3]> =
            chunked_map(draws, &rng.substream(tier_index(tier)), |r, count| {
                (0..count)
                    .map(|_| sampler.sample_triple(r))
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect();
        for n in 1..=3 {
            let xs: Vec<f64> = triples.iter().map(|t| t[n - 1]).collect();
            let failure = Cell::new(None);
            let ks = ks_statistic(&xs, |r| {
                dist::cdf_nth(tier, r, n, cfg).unwrap_or_else(|e| {
                    failure.set(Some(e));
                    f64::NAN
                })
            });
            if let Some(e) = failure.into_inner() {
                return Err(e.into());
            }
            rows.push(DistanceKsRow { tier, n, draws, ks });
        }
    }
    Ok(rows)
}

/// Analytic pdf/cdf of the three nearest distances on `points` abscissae per tier.
pub fn distance_table(cfg: &ValidatedConfig, points: usize) -> Result<Vec<DistanceTableRow>> {
    let mut rows = Vec::new();
    for tier in [Tier::Abs, Tier::Tbs] {
        let (lo, hi) = table_range(tier, cfg);
        for n in 1..=3 {
            for i in 0..points {
                let r = lo + (hi - lo) * (i as f64 + 0.5) / points as f64;
                rows.push(DistanceTableRow {
                    tier,
                    n,
                    r,
                    pdf: dist::pdf_nth(tier, r, n, cfg)?,
                    cdf: dist::cdf_nth(tier, r, n, cfg)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Largest pointwise gaps between equivalent closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub points: usize,
    /// General ABS `n`-th law at `n = 1` vs the dedicated nearest law.
    pub abs_nearest: f64,
    /// Same for the TBS tier.
    pub tbs_nearest: f64,
    /// Binomial-sum vs compact ABS law, over `n = 1..3`.
    pub abs_binomial_sum: f64,
}

pub fn reduction_identities(cfg: &ValidatedConfig, points: usize) -> Result<ReductionReport> {
    let grid = |tier| {
        let (lo, hi) = table_range(tier, cfg);
        (0..points).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / points as f64)
    };
    let mut rep = ReductionReport {
        points,
        abs_nearest: 0.0,
        tbs_nearest: 0.0,
        abs_binomial_sum: 0.0,
    };
    for r in grid(Tier::Abs) {
        rep.abs_nearest = rep
            .abs_nearest
            .max((dist::pdf_abs_nth(r, 1, cfg)? - dist::pdf_abs_nearest(r, cfg)).abs());
        for n in 1..=3 {
            let d = dist::pdf_abs_nth_binomial_sum(r, n, cfg)? - dist::pdf_abs_nth(r, n, cfg)?;
            rep.abs_binomial_sum = rep.abs_binomial_sum.max(d.abs());
        }
    }
    for r in grid(Tier::Tbs) {
        rep.tbs_nearest = rep
            .tbs_nearest
            .max((dist::pdf_tbs_nth(r, 1, cfg)? - dist::pdf_tbs_nearest(r, cfg)).abs());
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// gamma fits

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub tier: Tier,
    pub zeta: String,
    pub signal: char,
    pub nu: f64,
    pub theta: f64,
    pub mean: f64,
    pub variance: f64,
}

fn law_row(
    tier: Tier,
    zeta: LinkStateVector,
    signal: char,
    law: &SignalLaw,
    mean: f64,
    variance: f64,
) -> FitRow {
    let (nu, theta) = law.gamma().map_or((0.0, 0.0), |g| (g.nu, g.theta));
    FitRow {
        tier,
        zeta: zeta.to_string(),
        signal,
        nu,
        theta,
        mean,
        variance,
    }
}

/// Gamma laws of `U` and `V` for the ABS tier and every TBS link-state vector.
pub fn fit_table(cfg: &ValidatedConfig, opts: &MomentOptions) -> Result<Vec<FitRow>> {
    let mut rows = Vec::new();
    let mut cases = vec![(Tier::Abs, LinkStateVector::from_index(0))];
    cases.extend(LinkStateVector::all().into_iter().map(|z| (Tier::Tbs, z)));
    for (tier, zeta) in cases {
        let m = compute_moments(tier, zeta, cfg, opts)?;
        rows.push(law_row(
            tier,
            zeta,
            'U',
            &fit_gamma_u_from(&m)?,
            m.u_mean(),
            m.u_variance(),
        ));
        rows.push(law_row(
            tier,
            zeta,
            'V',
            &fit_gamma_v_from(&m)?,
            m.v_mean(),
            m.v_variance(),
        ));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCheckRow {
    pub tier: Tier,
    pub zeta: String,
    pub nu: f64,
    pub theta: f64,
    pub draws: usize,
    pub ks: f64,
    /// Relative mismatch between the fitted and target mean.
    pub mean_identity: f64,
    /// Relative mismatch between the fitted and target variance.
    pub variance_identity: f64,
}

/// KS of the fitted `V` law against brute-force draws, for the ABS tier and
/// the all-LoS TBS vector.
pub fn gamma_fit_check(
    cfg: &ValidatedConfig,
    draws: usize,
    opts: &MomentOptions,
    rng: &RngStream,
) -> Result<Vec<FitCheckRow>> {
    let zeta = LinkStateVector::from_index(0);
    let mut rows = Vec::new();
    for tier in [Tier::Abs, Tier::Tbs] {
        let m = compute_moments(tier, zeta, cfg, opts)?;
        let law = fit_gamma_v_from(&m)?;
        let g = law.gamma().copied().ok_or_else(|| {
            crate::sigstats::SigstatsError::NonPositiveVariance {
                tier,
                zeta,
                mean: m.v_mean(),
                variance: m.v_variance(),
            }
        })?;
        let samples = sample_masked_v(tier, zeta, cfg, draws, &rng.substream(tier_index(tier)));
        rows.push(FitCheckRow {
            tier,
            zeta: zeta.to_string(),
            nu: g.nu,
            theta: g.theta,
            draws,
            ks: ks_statistic(&samples, |x| g.cdf(x)),
            mean_identity: ((g.mean() - m.v_mean()) / m.v_mean()).abs(),
            variance_identity: ((g.variance() - m.v_variance()) / m.v_variance()).abs(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// association

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocRow {
    pub env: String,
    pub h: f64,
    pub p_abs: f64,
    pub p_tbs: f64,
    pub std_error: f64,
    pub p_top3_abs: f64,
    pub p_top3_tbs: f64,
    pub p_mixed: f64,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocSweep {
    pub rows: Vec<AssocRow>,
    /// One regime report per environment, in input order.
    pub regimes: Vec<(String, RegimeReport)>,
}

/// Monte Carlo association curve over `h_grid` for each named environment,
/// with the user below the ABS disk centre.
pub fn association_sweep(
    base: &NetworkConfig,
    envs: &[(String, Environment)],
    h_grid: &[f64],
    users: usize,
    rng: &RngStream,
) -> Result<AssocSweep> {
    let mut rows = Vec::new();
    let mut regimes = Vec::new();
    for (e, (name, env)) in envs.iter().enumerate() {
        let env_rng = rng.substream(e as u64);
        let mut curve = Vec::with_capacity(h_grid.len());
        for (i, &h) in h_grid.iter().enumerate() {
            let cfg = NetworkConfig {
                h,
                env: *env,
                ..base.clone()
            }
            .validate()?;
            let m = assoc_prob_mc(
                &cfg,
                users,
                UserPlacement::Center,
                &env_rng.substream(i as u64),
            )?;
            curve.push(m.result.p_abs);
            rows.push(AssocRow {
                env: name.clone(),
                h,
                p_abs: m.result.p_abs,
                p_tbs: m.result.p_tbs,
                std_error: m.result.std_error,
                p_top3_abs: m.p_top3_abs,
                p_top3_tbs: m.p_top3_tbs,
                p_mixed: m.p_mixed,
                users,
            });
        }
        let tol = 3.0 * (0.25 / users as f64).sqrt();
        regimes.push((name.clone(), analyze_curve(h_grid, &curve, None, tol)?));
    }
    Ok(AssocSweep { rows, regimes })
}

/// Rows of a regime report for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub env: String,
    pub h_threshold: f64,
    pub p_min: f64,
    pub case: String,
    pub u_shaped: bool,
    pub half_heights: String,
}

pub fn regime_rows(sweep: &AssocSweep) -> Vec<RegimeRow> {
    sweep
        .regimes
        .iter()
        .map(|(env, r)| RegimeRow {
            env: env.clone(),
            h_threshold: r.h_threshold,
            p_min: r.p_min,
            case: serde_json::to_value(r.case)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            u_shaped: r.u_shaped,
            half_heights: r
                .half_heights
                .iter()
                .map(|h| format!("{h:.3}"))
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// coverage

/// Parameter swept by `coverage-sweep --vary`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VaryParam {
    #[serde(rename = "h")]
    UserAltitude,
    #[serde(rename = "H")]
    AbsAltitude,
    #[serde(rename = "N")]
    AbsCount,
}

impl VaryParam {
    pub fn name(self) -> &'static str {
        match self {
            VaryParam::UserAltitude => "h",
            VaryParam::AbsAltitude => "H",
            VaryParam::AbsCount => "N",
        }
    }

    fn apply(self, c: &mut NetworkConfig, x: f64) {
        match self {
            VaryParam::UserAltitude => c.h = x,
            VaryParam::AbsAltitude => c.big_h = x,
            VaryParam::AbsCount => c.n_abs = x.round() as i64,
        }
    }

    fn current(self, c: &NetworkConfig) -> f64 {
        match self {
            VaryParam::UserAltitude => c.h,
            VaryParam::AbsAltitude => c.big_h,
            VaryParam::AbsCount => c.n_abs as f64,
        }
    }
}

impl std::str::FromStr for VaryParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "h" => Ok(VaryParam::UserAltitude),
            "H" => Ok(VaryParam::AbsAltitude),
            "N" => Ok(VaryParam::AbsCount),
            _ => Err(format!("unknown sweep parameter '{s}' (h, H, N)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub param: String,
    pub x: f64,
    pub gamma_db: f64,
    pub p_total_analytic: f64,
    pub p_total_mc: f64,
    pub mc_std_error: f64,
    pub p_abs_cond: f64,
    pub p_tbs_cond: f64,
    pub assoc: f64,
}

/// Semi-analytic and simulated (CoMP, same tier) coverage for each
/// threshold, optionally repeated over values of one parameter.
pub fn coverage_sweep(
    cfg: &ValidatedConfig,
    vary: Option<(VaryParam, &[f64])>,
    gammas_db: &[f64],
    opts: &CoverageOptions,
    mc_trials: usize,
    rng: &RngStream,
) -> Result<Vec<CoverageRow>> {
    let (param, xs): (Option<VaryParam>, Vec<f64>) = match vary {
        Some((p, xs)) => (Some(p), xs.to_vec()),
        None => (None, vec![f64::NAN]),
    };
    let mut rows = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let c = match param {
            Some(p) => cfg.modified(|c| p.apply(c, x))?,
            None => cfg.clone(),
        };
        let o = CoverageOptions {
            rng: opts.rng.substream(i as u64),
            ..*opts
        };
        let analytic = coverage_analytic_sweep(&c, gammas_db, &o)?;
        let mc = empirical_coverage_sweep(
            &c,
            gammas_db,
            &[Policy::Comp3SameTier],
            mc_trials,
            &rng.substream(i as u64),
        )?;
        for (a, m) in analytic.iter().zip(&mc[0]) {
            rows.push(CoverageRow {
                param: param.map_or("none", VaryParam::name).to_string(),
                x: param.map_or(f64::NAN, |p| p.current(c.raw())),
                gamma_db: a.gamma_db,
                p_total_analytic: a.p_total,
                p_total_mc: m.p_total,
                mc_std_error: m.std_error,
                p_abs_cond: a.p_abs_cond,
                p_tbs_cond: a.p_tbs_cond,
                assoc: a.assoc.p_abs,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub alpha: f64,
    pub gamma_db: f64,
    pub comp3: f64,
    pub single_nearest: f64,
    pub strongest_three: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Simulated coverage of the three cooperation policies with one path-loss
/// exponent shared by every link type. Exponents at or below 2 make the
/// unbounded TBS field's interference diverge and are rejected.
pub fn policy_comparison(
    cfg: &ValidatedConfig,
    alphas: &[f64],
    gammas_db: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<PolicyRow>> {
    let mut rows = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let c = cfg.modified(|c| {
            c.alpha_abs = alpha;
            c.alpha_tbs_l = alpha;
            c.alpha_tbs_n = alpha;
        })?;
        let r = empirical_coverage_sweep(
            &c,
            gammas_db,
            &Policy::ALL,
            trials,
            &rng.substream(i as u64),
        )?;
        let at = |p: Policy, g: usize| {
            let k = Policy::ALL
                .iter()
                .position(|&q| q == p)
                .expect("policy listed");
            &r[k][g]
        };
        for (g, &gamma_db) in gammas_db.iter().enumerate() {
            let comp = at(Policy::Comp3SameTier, g);
            rows.push(PolicyRow {
                alpha,
                gamma_db,
                comp3: comp.p_total,
                single_nearest: at(Policy::SingleNearest, g).p_total,
                strongest_three: at(Policy::StrongestThree, g).p_total,
                std_error: comp.std_error,
                trials,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub curve: String,
    pub x: f64,
    pub coverage: f64,
    pub std_error: f64,
}

/// Simulated CoMP coverage against N for each `(α, h)` pair, where `α` is
/// shared by ABS and LoS TBS links.
pub fn coverage_vs_n(
    cfg: &ValidatedConfig,
    pairs: &[(f64, f64)],
    ns: &[i64],
    gamma_db: f64,
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for (p, &(alpha, h)) in pairs.iter().enumerate() {
        for (j, &n) in ns.iter().enumerate() {
            let c = cfg.modified(|c| {
                c.alpha_abs = alpha;
                c.alpha_tbs_l = alpha;
                c.h = h;
                c.n_abs = n;
            })?;
            let r = empirical_coverage_sweep(
                &c,
                &[gamma_db],
                &[Policy::Comp3SameTier],
                trials,
                &rng.substream(p as u64).substream(j as u64),
            )?;
            out.push(CurvePoint {
                curve: format!("alpha={alpha} h={h}"),
                x: n as f64,
                coverage: r[0][0].p_total,
                std_error: r[0][0].std_error,
            });
        }
    }
    Ok(out)
}

/// Simulated CoMP coverage against user altitude for each threshold.
pub fn coverage_vs_h(
    cfg: &ValidatedConfig,
    hs: &[f64],
    gammas_db: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<CurvePoint>> {
    let mut per_h = Vec::new();
    for (j, &h) in hs.iter().enumerate() {
        let c = cfg.modified(|c| c.h = h)?;
        per_h.push(empirical_coverage_sweep(
            &c,
            gammas_db,
            &[Policy::Comp3SameTier],
            trials,
            &rng.substream(j as u64),
        )?);
    }
    let mut out = Vec::new();
    for (g, &gamma_db) in gammas_db.iter().enumerate() {
        for (j, &h) in hs.iter().enumerate() {
            let r = &per_h[j][0][g];
            out.push(CurvePoint {
                curve: format!("gamma_db={gamma_db}"),
                x: h,
                coverage: r.p_total,
                std_error: r.std_error,
            });
        }
    }
    Ok(out)
}

fn curves(points: &[CurvePoint]) -> Vec<(String, Vec<&CurvePoint>)> {
    let mut out: Vec<(String, Vec<&CurvePoint>)> = Vec::new();
    for p in points {
        match out.iter_mut().find(|(n, _)| *n == p.curve) {
            Some((_, v)) => v.push(p),
            None => out.push((p.curve.clone(), vec![p])),
        }
    }
    out
}

fn diff_sigma(a: &CurvePoint, b: &CurvePoint) -> f64 {
    (a.std_error * a.std_error + b.std_error * b.std_error).sqrt()
}

/// Interior maximum that clears both endpoints by three standard errors, with
/// the curve rising up to it and falling after it (2σ slack per step).
pub fn has_interior_peak(c: &[&CurvePoint]) -> bool {
    let n = c.len();
    if n < 3 {
        return false;
    }
    let k = (0..n).fold(0, |b, i| if c[i].coverage > c[b].coverage { i } else { b });
    if k == 0 || k == n - 1 {
        return false;
    }
    let clears = |e: &CurvePoint| c[k].coverage - e.coverage > 3.0 * diff_sigma(c[k], e);
    let rising = c[..=k]
        .windows(2)
        .all(|w| w[1].coverage + 2.0 * diff_sigma(w[0], w[1]) >= w[0].coverage);
    let falling = c[k..]
        .windows(2)
        .all(|w| w[1].coverage <= w[0].coverage + 2.0 * diff_sigma(w[0], w[1]));
    clears(c[0]) && clears(c[n - 1]) && rising && falling
}

/// Interior minimum at least three standard errors below both endpoints.
pub fn has_interior_dip(c: &[&CurvePoint]) -> bool {
    let n = c.len();
    if n < 3 {
        return false;
    }
    let k = (0..n).fold(0, |b, i| if c[i].coverage < c[b].coverage { i } else { b });
    k != 0
        && k != n - 1
        && [c[0], c[n - 1]]
            .iter()
            .all(|e| e.coverage - c[k].coverage > 3.0 * diff_sigma(c[k], e))
}

// ---------------------------------------------------------------------------
// deployment

/// Network configuration plus placement scenario for the strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentStudy {
    pub config: NetworkConfig,
    pub scenario: DeploymentScenario,
}

impl DeploymentStudy {
    /// The shipped reconstruction (`scenarios/deployment_comparison.json`).
    pub fn reference() -> Self {
        serde_json::from_str(DEPLOYMENT_STUDY_JSON).expect("shipped deployment scenario parses")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: String,
    pub aggregate: f64,
    pub target: f64,
    pub deviation_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterRow {
    pub strategy: String,
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub strategy: String,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
    pub coverage: f64,
    pub mean_sir_db: f64,
}

pub fn strategy_rows(cmp: &Comparison) -> Vec<StrategyRow> {
    DEPLOYMENT_TARGETS
        .iter()
        .map(|&(s, target)| {
            let a = cmp.result(s).aggregate;
            StrategyRow {
                strategy: s.name().into(),
                aggregate: a,
                target,
                deviation_pp: 100.0 * (a - target),
            }
        })
        .collect()
}

/// CSV tables and one PGM heatmap per strategy.
pub fn deployment_artifacts(prefix: &str, cmp: &Comparison) -> Result<Vec<Artifact>> {
    let mut centers = Vec::new();
    let mut maps = Vec::new();
    let mut out = vec![Artifact::csv(
        format!("{prefix}strategies.csv"),
        &strategy_rows(cmp),
    )?];
    for r in &cmp.results {
        centers.extend(r.centers.iter().enumerate().map(|(i, c)| CenterRow {
            strategy: r.strategy.name().into(),
            index: i,
            x: c[0],
            y: c[1],
        }));
        maps.extend(cmp.grid.iter().enumerate().map(|(i, p)| MapRow {
            strategy: r.strategy.name().into(),
            x: p[0],
            y: p[1],
            weight: cmp.weights.weights[i],
            coverage: r.map.coverage[i],
            mean_sir_db: r.map.mean_sir_db[i],
        }));
        let n = cmp.scenario.grid_n;
        out.push(Artifact::new(
            format!("{prefix}heatmap_{}.pgm", r.strategy.name()),
            pgm_bytes(&r.map.coverage, n, n)?,
        ));
    }
    out.push(Artifact::csv(format!("{prefix}centers.csv"), &centers)?);
    out.push(Artifact::csv(format!("{prefix}coverage_map.csv"), &maps)?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// clustering and triangulation checks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringCheck {
    pub instances: usize,
    /// Assignment steps that lowered the objective (must be 0).
    pub assignment_decreases: usize,
    pub toy_sets: usize,
    /// Toy sets whose best iterate is more than 1e-3 below the grid optimum.
    pub toy_failures: usize,
    pub worst_toy_gap: f64,
    /// Runs that exceeded their iteration budget (must be 0).
    pub budget_overruns: usize,
}

pub const TOY_GAP_TOLERANCE: f64 = 1e-3;

fn uniform_points(n: usize, side: f64, rng: &mut crate::numerics::StreamRng) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()])
        .collect()
}

/// Assignment-step monotonicity on random instances, the K=1 grid oracle on
/// toy sets and the iteration budget of both clustering variants.
pub fn clustering_check(
    instances: usize,
    toy_sets: usize,
    grid: usize,
    rng: &RngStream,
) -> Result<ClusteringCheck> {
    let mut out = ClusteringCheck {
        instances,
        assignment_decreases: 0,
        toy_sets,
        toy_failures: 0,
        worst_toy_gap: 0.0,
        budget_overruns: 0,
    };
    let kernel = FadingKernel::new(2.0, 2.0, 100.0)?;
    let t_max = 50;
    for i in 0..instances {
        let mut r = rng.substream(0).substream(i as u64).rng();
        let pts = uniform_points(60, 1000.0, &mut r);
        let w = (0..60).map(|_| r.random::<f64>()).collect();
        let s = WeightedSamples::new(pts, w)?;
        let init = kmeans_pp_init(&s, 5, &mut r)?;
        let run = fading_aware_kmeans(&s, 5, &kernel, 1e-6, t_max, &init)?;
        out.assignment_decreases += run
            .trace
            .iter()
            .filter(|t| t.after_assign < t.before_assign)
            .count();
        let (_, trace) = classical_weighted_kmeans(&s, 5, 1e-6, t_max, &init)?;
        out.budget_overruns +=
            usize::from(run.trace.len() > t_max) + usize::from(trace.len() > t_max + 1);
    }
    let toy_kernel = FadingKernel::new(2.0, 2.0, 1.0)?;
    for i in 0..toy_sets {
        let mut r = rng.substream(1).substream(i as u64).rng();
        let pts = uniform_points(10, 1.0, &mut r);
        let w = (0..10).map(|_| r.random::<f64>()).collect();
        let s = WeightedSamples::new(pts, w)?;
        let init = kmeans_pp_init(&s, 1, &mut r)?;
        let toy_t_max = 500;
        let run = fading_aware_kmeans(&s, 1, &toy_kernel, 1e-9, toy_t_max, &init)?;
        out.budget_overruns += usize::from(run.trace.len() > toy_t_max);
        let zeros = vec![0; s.len()];
        let mut best = f64::NEG_INFINITY;
        for a in 0..=grid {
            for b in 0..=grid {
                let c = [a as f64 / grid as f64, b as f64 / grid as f64];
                best = best.max(fading_objective(&s, &[c], &zeros, &toy_kernel));
            }
        }
        let gap = best - run.state.objective;
        out.worst_toy_gap = out.worst_toy_gap.max(gap);
        out.toy_failures += usize::from(gap > TOY_GAP_TOLERANCE);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayCheck {
    pub sets: usize,
    pub points_per_set: usize,
    pub non_delaunay_sets: usize,
    pub queries: usize,
    pub location_mismatches: usize,
}

/// Empty-circumcircle test on random sets and walk-vs-scan point location.
pub fn delaunay_check(
    sets: usize,
    points: usize,
    queries: usize,
    rng: &RngStream,
) -> Result<DelaunayCheck> {
    let mut out = DelaunayCheck {
        sets,
        points_per_set: points,
        non_delaunay_sets: 0,
        queries,
        location_mismatches: 0,
    };
    let per_set = queries.div_ceil(sets.max(1));
    let mut done = 0;
    for i in 0..sets {
        let mut r = rng.substream(i as u64).rng();
        let tri = delaunay(&uniform_points(points, 1.0, &mut r))?;
        out.non_delaunay_sets += usize::from(!tri.is_delaunay());
        for _ in 0..per_set.min(queries - done) {
            let q = [
                1.1 * r.random::<f64>() - 0.05,
                1.1 * r.random::<f64>() - 0.05,
            ];
            let walk = tri.locate(q);
            let ok = match tri.locate_brute(q) {
                Some(t) => walk.inside && walk.triangle == t,
                None => !walk.inside,
            };
            out.location_mismatches += usize::from(!ok);
            done += 1;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// manifests

/// One file written by a run, with its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Provenance written next to every set of outputs. Re-running
/// `command_line` reproduces every listed file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub subcommand: String,
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub config: NetworkConfig,
    pub seed: u64,
    pub overrides: Vec<String>,
    /// Every subcommand parameter, defaults included.
    pub parameters: serde_json::Value,
    pub threads: usize,
    pub tool_version: String,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputFile>,
}

impl ExperimentManifest {
    pub const TOOL_VERSION: &'static str = env!("CARGO_PKG_VERSION");
}

// ---------------------------------------------------------------------------
// acceptance suite

/// Result of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock seconds; excluded from serialized reports.
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed_s
        )
    }
}

/// Outcomes of criteria 1-10 plus every artifact they produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub outcomes: Vec<CriterionOutcome>,
    pub artifacts: Vec<Artifact>,
}

struct Suite<'a> {
    seed: u64,
    run: SuiteRun,
    progress: &'a (dyn Fn(&CriterionOutcome) + Sync),
}

impl Suite<'_> {
    fn rng(&self, id: u32) -> RngStream {
        RngStream::new(self.seed, u64::from(id))
    }

    fn record(
        &mut self,
        id: u32,
        name: &str,
        started: Instant,
        passed: bool,
        detail: String,
        artifacts: Vec<Artifact>,
    ) {
        let o = CriterionOutcome {
            id,
            name: name.into(),
            passed,
            detail,
            elapsed_s: started.elapsed().as_secs_f64(),
        };
        (self.progress)(&o);
        self.run.outcomes.push(o);
        self.run.artifacts.extend(artifacts);
    }
}

fn fmt_rows<T>(rows: &[T], f: impl Fn(&T) -> String) -> String {
    rows.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn c1_distance_laws(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let rows = distance_ks(&cfg, 100_000, &s.rng(1))?;
    let secs = t.elapsed().as_secs_f64();
    let worst = rows.iter().map(|r| r.ks).fold(0.0, f64::max);
    let passed = worst < 0.01 && secs < 30.0;
    let detail = format!(
        "max KS {worst:.4} < 0.01 [{}]; runtime under 30 s: {}",
        fmt_rows(&rows, |r| format!("{} n={} {:.4}", r.tier, r.n, r.ks)),
        secs < 30.0
    );
    s.record(
        1,
        "distance-law exactness",
        t,
        passed,
        detail,
        vec![Artifact::csv("c01_distance_ks.csv", &rows)?],
    );
    Ok(())
}

fn c2_reductions(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let r = reduction_identities(&cfg, 1000)?;
    let passed = r.abs_nearest <= 1e-12 && r.tbs_nearest <= 1e-12 && r.abs_binomial_sum <= 1e-10;
    let detail = format!(
        "ABS n=1 {:.1e} <= 1e-12, TBS n=1 {:.1e} <= 1e-12, binomial-sum vs compact {:.1e} <= 1e-10",
        r.abs_nearest, r.tbs_nearest, r.abs_binomial_sum
    );
    s.record(
        2,
        "reduction identities",
        t,
        passed,
        detail,
        vec![Artifact::json("c02_reductions.json", &r)?],
    );
    Ok(())
}

fn c3_gamma_fits(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let opts = MomentOptions {
        rng: s.rng(3).substream(100),
        ..MomentOptions::default()
    };
    let rows = gamma_fit_check(&cfg, 100_000, &opts, &s.rng(3))?;
    let ks_ok = rows.iter().all(|r| r.ks < 0.05);
    let id_ok = rows
        .iter()
        .all(|r| r.mean_identity <= 1e-10 && r.variance_identity <= 1e-10);
    let detail = format!(
        "{} (KS < 0.05, identities <= 1e-10)",
        fmt_rows(&rows, |r| format!(
            "{} {} KS {:.4} moments {:.1e}/{:.1e}",
            r.tier, r.zeta, r.ks, r.mean_identity, r.variance_identity
        ))
    );
    s.record(
        3,
        "gamma-fit quality",
        t,
        ks_ok && id_ok,
        detail,
        vec![Artifact::csv("c03_gamma_fit.csv", &rows)?],
    );
    Ok(())
}

fn c4_association(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let base = NetworkConfig::association_scenario(Environment::SUBURBAN);
    let envs = [
        ("highrise".to_string(), Environment::HIGHRISE_URBAN),
        ("suburban".to_string(), Environment::SUBURBAN),
    ];
    let h_grid: Vec<f64> = (3..=30).map(|k| 10.0 * k as f64).collect();
    let sweep = association_sweep(&base, &envs, &h_grid, 50_000, &s.rng(4))?;
    let secs = t.elapsed().as_secs_f64();
    let at = |env: &str, h: f64| {
        sweep
            .rows
            .iter()
            .find(|r| r.env == env && r.h == h)
            .expect("grid point")
    };
    let hi30 = at("highrise", 30.0).p_abs;
    let sub30 = at("suburban", 30.0).p_abs;
    let top: Vec<f64> = envs.iter().map(|(e, _)| at(e, 300.0).p_abs).collect();
    let max_mixed = sweep.rows.iter().map(|r| r.p_mixed).fold(0.0, f64::max);
    let mean_mixed = sweep.rows.iter().map(|r| r.p_mixed).sum::<f64>() / sweep.rows.len() as f64;
    let h_th: Vec<f64> = sweep.regimes.iter().map(|(_, r)| r.h_threshold).collect();
    let checks = [
        (hi30 - 0.74).abs() <= 0.05,
        (sub30 - 0.38).abs() <= 0.05,
        top.iter().all(|p| (p - 0.95).abs() <= 0.03),
        max_mixed < 0.10,
        (mean_mixed - 0.05).abs() <= 0.02,
        h_th.iter().all(|h| (h - 110.0).abs() <= 20.0),
        secs < 300.0,
    ];
    let detail = format!(
        "p_abs(30, highrise) {hi30:.3} vs 0.74±0.05; p_abs(30, suburban) {sub30:.3} vs 0.38±0.05; \
         p_abs(300) {:.3}/{:.3} vs 0.95±0.03; mixed max {max_mixed:.3} < 0.10, mean {mean_mixed:.3} vs 0.05±0.02; \
         h_th {:.0}/{:.0} m vs 110±20; runtime under 300 s: {}",
        top[0],
        top[1],
        h_th[0],
        h_th[1],
        secs < 300.0
    );
    let artifacts = vec![
        Artifact::csv("c04_association.csv", &sweep.rows)?,
        Artifact::csv("c04_regime.csv", &regime_rows(&sweep))?,
    ];
    s.record(
        4,
        "association reproduction",
        t,
        checks.iter().all(|&c| c),
        detail,
        artifacts,
    );
    Ok(())
}

fn c5_and_c7_gamma(s: &mut Suite) -> Result<Vec<CoverageRow>> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let gammas = gamma_grid(-10.0, 10.0, 11);
    let opts = CoverageOptions {
        rng: s.rng(5).substream(100),
        ..CoverageOptions::default()
    };
    let rows = coverage_sweep(&cfg, None, &gammas, &opts, 100_000, &s.rng(5))?;
    let secs = t.elapsed().as_secs_f64();
    let worst = rows
        .iter()
        .map(|r| (r.p_total_analytic - r.p_total_mc).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "max |analytic - MC| {worst:.4} <= 0.05 over 11 thresholds [{}]; runtime under 600 s: {}",
        fmt_rows(&rows, |r| format!(
            "{:+.0} dB {:.3}/{:.3}",
            r.gamma_db, r.p_total_analytic, r.p_total_mc
        )),
        secs < 600.0
    );
    s.record(
        5,
        "analytic vs MC coverage",
        t,
        worst <= 0.05 && secs < 600.0,
        detail,
        vec![Artifact::csv("c05_coverage.csv", &rows)?],
    );
    Ok(rows)
}

fn c6_policies(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let gammas = gamma_grid(-10.0, 10.0, 11)
        .into_iter()
        .chain(std::iter::once(-4.0))
        .collect::<Vec<_>>();
    let rows = policy_comparison(&cfg, &[3.0], &gammas, 20_000, &s.rng(6))?;
    let r = rows
        .iter()
        .find(|r| r.alpha == 3.0 && r.gamma_db == -4.0)
        .expect("probe row");
    let gap = r.comp3 - r.single_nearest;
    let passed = gap >= 0.5
        && r.comp3 >= 0.8
        && r.single_nearest <= 0.25
        && (r.comp3 - r.strongest_three).abs() <= 0.05;
    let detail = format!(
        "alpha 3, -4 dB: comp3 {:.3} >= 0.8, single {:.3} <= 0.25, gap {gap:.3} >= 0.5, |comp3 - strongest3| {:.3} <= 0.05",
        r.comp3,
        r.single_nearest,
        (r.comp3 - r.strongest_three).abs()
    );
    s.record(
        6,
        "CoMP gain",
        t,
        passed,
        detail,
        vec![Artifact::csv("c06_policies.csv", &rows)?],
    );
    Ok(())
}

fn c7_shapes(s: &mut Suite, gamma_rows: &[CoverageRow]) -> Result<()> {
    let t = Instant::now();
    let cfg = NetworkConfig::reference().validate()?;
    let analytic_mono = gamma_rows
        .windows(2)
        .all(|w| w[1].p_total_analytic <= w[0].p_total_analytic);
    let mc_mono = gamma_rows.windows(2).all(|w| {
        w[1].p_total_mc
            <= w[0].p_total_mc + (w[0].mc_std_error.powi(2) + w[1].mc_std_error.powi(2)).sqrt()
    });

    let pairs: Vec<(f64, f64)> = [180.0, 200.0]
        .iter()
        .flat_map(|&h| [2.0, 2.5, 3.0].map(|a| (a, h)))
        .collect();
    let ns = [3, 6, 10, 20, 40, 80, 160];
    let n_points = coverage_vs_n(&cfg, &pairs, &ns, 0.0, 20_000, &s.rng(7).substream(0))?;
    let n_curves = curves(&n_points);
    let peaked: Vec<&str> = n_curves
        .iter()
        .filter(|(_, c)| has_interior_peak(c))
        .map(|(n, _)| n.as_str())
        .collect();

    let hs: Vec<f64> = (1..=10).map(|k| 30.0 * k as f64).collect();
    let h_points = coverage_vs_h(
        &cfg,
        &hs,
        &[-3.0, 0.0, 3.0, 9.0],
        20_000,
        &s.rng(7).substream(1),
    )?;
    let h_curves = curves(&h_points);
    let dipped: Vec<&str> = h_curves
        .iter()
        .filter(|(_, c)| has_interior_dip(c))
        .map(|(n, _)| n.as_str())
        .collect();

    let passed = analytic_mono && mc_mono && !peaked.is_empty() && !dipped.is_empty();
    let detail = format!(
        "monotone in gamma: analytic {analytic_mono}, MC {mc_mono}; interior max in N: [{}]; interior min in h: [{}]",
        peaked.join("; "),
        dipped.join("; ")
    );
    let artifacts = vec![
        Artifact::csv("c07_coverage_vs_n.csv", &n_points)?,
        Artifact::csv("c07_coverage_vs_h.csv", &h_points)?,
    ];
    s.record(7, "qualitative curve shapes", t, passed, detail, artifacts);
    Ok(())
}

fn c8_deployment(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let study = DeploymentStudy::reference();
    let cfg = study.config.validate()?;
    let cmp = compare_strategies(&cfg, &study.scenario, &s.rng(8))?;
    let rows = strategy_rows(&cmp);
    let ordered = rows.windows(2).all(|w| w[0].aggregate >= w[1].aggregate);
    let within = rows.iter().all(|r| r.deviation_pp.abs() <= 3.0);
    let detail = format!(
        "ordering fading-aware >= classical >= random >= tbs-only: {ordered}; [{}]; magnitudes within ±3 pp: {within} (soft)",
        fmt_rows(&rows, |r| format!("{} {:.2}% vs {:.2}% ({:+.2} pp)", r.strategy, 100.0 * r.aggregate, 100.0 * r.target, r.deviation_pp))
    );
    s.record(
        8,
        "deployment comparison",
        t,
        ordered,
        detail,
        deployment_artifacts("c08_", &cmp)?,
    );
    Ok(())
}

fn c9_clustering(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let c = clustering_check(100, 100, 200, &s.rng(9))?;
    let passed = c.assignment_decreases == 0 && c.toy_failures == 0 && c.budget_overruns == 0;
    let detail = format!(
        "assignment decreases {} on {} instances; K=1 toy sets within 1e-3 of grid optimum {}/{} (worst gap {:.1e}); budget overruns {}",
        c.assignment_decreases,
        c.instances,
        c.toy_sets - c.toy_failures,
        c.toy_sets,
        c.worst_toy_gap,
        c.budget_overruns
    );
    s.record(
        9,
        "fading-aware clustering properties",
        t,
        passed,
        detail,
        vec![Artifact::json("c09_clustering.json", &c)?],
    );
    Ok(())
}

fn c10_delaunay(s: &mut Suite) -> Result<()> {
    let t = Instant::now();
    let c = delaunay_check(100, 200, 10_000, &s.rng(10))?;
    let passed = c.non_delaunay_sets == 0 && c.location_mismatches == 0;
    let detail = format!(
        "empty circumcircle violated on {}/{} sets; location mismatches {}/{}",
        c.non_delaunay_sets, c.sets, c.location_mismatches, c.queries
    );
    s.record(
        10,
        "Delaunay correctness",
        t,
        passed,
        detail,
        vec![Artifact::json("c10_delaunay.json", &c)?],
    );
    Ok(())
}

/// Runs criteria 1-10 on the current rayon pool. `progress` sees each outcome
/// as soon as it is decided.
pub fn run_criteria(seed: u64, progress: &(dyn Fn(&CriterionOutcome) + Sync)) -> Result<SuiteRun> {
    let mut s = Suite {
        seed,
        run: SuiteRun {
            outcomes: Vec::new(),
            artifacts: Vec::new(),
        },
        progress,
    };
    c1_distance_laws(&mut s)?;
    c2_reductions(&mut s)?;
    c3_gamma_fits(&mut s)?;
    c4_association(&mut s)?;
    let gamma_rows = c5_and_c7_gamma(&mut s)?;
    c6_policies(&mut s)?;
    c7_shapes(&mut s, &gamma_rows)?;
    c8_deployment(&mut s)?;
    c9_clustering(&mut s)?;
    c10_delaunay(&mut s)?;
    let summary = Artifact::json("summary.json", &s.run.outcomes)?;
    s.run.artifacts.push(summary);
    Ok(s.run)
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Compares two suite runs artifact by artifact.
pub fn determinism_outcome(
    a: &SuiteRun,
    b: &SuiteRun,
    threads: [usize; 2],
    started: Instant,
) -> CriterionOutcome {
    let differing: Vec<&str> = a
        .artifacts
        .iter()
        .zip(&b.artifacts)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.name.as_str())
        .collect();
    let same_set = a.artifacts.len() == b.artifacts.len();
    CriterionOutcome {
        id: 11,
        name: "determinism".into(),
        passed: same_set && differing.is_empty(),
        detail: format!(
            "{} artifacts compared between runs on {} and {} workers; differing: [{}]",
            a.artifacts.len(),
            threads[0],
            threads[1],
            differing.join(", ")
        ),
        elapsed_s: started.elapsed().as_secs_f64(),
    }
}

/// The full acceptance suite: criteria 1-10 on `threads[0]` workers, then a
/// second run on `threads[1]` workers whose artifacts must match byte for
/// byte (criterion 11). Returns the first run with the determinism outcome
/// appended.
pub fn repro_all(
    seed: u64,
    threads: [usize; 2],
    progress: &(dyn Fn(&CriterionOutcome) + Sync),
) -> Result<SuiteRun> {
    let started = Instant::now();
    let mut first = with_threads(threads[0], || run_criteria(seed, progress))??;
    let second = with_threads(threads[1], || run_criteria(seed, &|_| {}))??;
    let d = determinism_outcome(&first, &second, threads, started);
    progress(&d);
    first.outcomes.push(d);
    Ok(first)
}
