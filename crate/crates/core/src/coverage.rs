//! Semi-analytic coverage probability.
//!
//! Conditional distance laws come from rejection sampling against the other
//! tier's joint CCDF, the serving signal from the Gamma fits, and the
//! interference through its Laplace transform (closed form plus quadrature)
//! or through simulated interference fields.

use std::cell::Cell;
use std::f64::consts::PI;

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{assoc_prob_abs_analytic, AssocError, AssociationResult, Method};
use crate::channel::los_probability;
use crate::dist::{joint_ccdf, DistError, OrderedDistances, TierSampler};
use crate::model::{db_to_linear, LinkState, LinkStateVector, Tier, ValidatedConfig};
use crate::numerics::{
    chunked_map, integrate_1d, McEstimate, MeanAccumulator, NumericsError, QuadratureSpec,
    RngStream, StreamRng, TripleSampler, MIN_TRIALS,
};
use crate::sigstats::{MomentOptions, SigstatsError, TierFits};
use crate::sim::{InterferenceField, SimError};

/// Conditional sampling aborts below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Sigstats(#[from] SigstatsError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("conditional {tier} sampler accepted {accepted} of {attempts} draws (rate below {MIN_ACCEPTANCE})")]
    AcceptanceTooLow {
        tier: Tier,
        attempts: usize,
        accepted: usize,
    },
    #[error("invalid argument: {0}")]
    BadArgument(String),
}

/// Coverage split by serving tier. `p_total` always equals
/// `p_abs_cond * assoc.p_abs + p_tbs_cond * assoc.p_tbs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub p_total: f64,
    pub p_abs_cond: f64,
    pub p_tbs_cond: f64,
    pub assoc: AssociationResult,
    pub gamma_db: f64,
    pub method: Method,
    pub trials: usize,
    pub std_error: f64,
}

impl CoverageReport {
    fn combine(
        p_abs_cond: f64,
        p_tbs_cond: f64,
        assoc: AssociationResult,
        gamma_db: f64,
        method: Method,
        trials: usize,
        std_error: f64,
    ) -> Self {
        let p_abs_cond = p_abs_cond.clamp(0.0, 1.0);
        let p_tbs_cond = p_tbs_cond.clamp(0.0, 1.0);
        Self {
            p_total: p_abs_cond * assoc.p_abs + p_tbs_cond * assoc.p_tbs,
            p_abs_cond,
            p_tbs_cond,
            assoc,
            gamma_db,
            method,
            trials,
            std_error,
        }
    }

    pub fn p_cond(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Abs => self.p_abs_cond,
            Tier::Tbs => self.p_tbs_cond,
        }
    }
}

fn other(tier: Tier) -> Tier {
    match tier {
        Tier::Abs => Tier::Tbs,
        Tier::Tbs => Tier::Abs,
    }
}

/// Distance law of a tier's three nearest stations conditioned on the other
/// tier's three nearest being farther, `f(r) · F̄_other(r) / normalizer`.
#[derive(Debug, Clone)]
pub struct ConditionalDistanceLaw {
    pub tier: Tier,
    sampler: TierSampler,
    cfg: ValidatedConfig,
}

impl ConditionalDistanceLaw {
    pub fn new(tier: Tier, cfg: &ValidatedConfig) -> Self {
        Self {
            tier,
            sampler: TierSampler::new(tier, cfg),
            cfg: cfg.clone(),
        }
    }

    /// Joint CCDF of the competing tier.
    pub fn ccdf_other_tier(&self, r: &[f64; 3]) -> f64 {
        joint_ccdf(other(self.tier), r, &self.cfg)
    }

    /// Normalizer `E_own[F̄_other(R)]`, estimated by sampling.
    pub fn normalizer(&self, trials: usize, rng: &RngStream) -> Result<McEstimate, CoverageError> {
        if trials < MIN_TRIALS {
            return Err(NumericsError::TooFewTrials {
                min: MIN_TRIALS,
                got: trials,
            }
            .into());
        }
        let parts = chunked_map(trials, rng, |r, count| {
            let mut acc = MeanAccumulator::default();
            for _ in 0..count {
                acc.push(self.ccdf_other_tier(&self.sampler.sample_triple(r)));
            }
            acc
        });
        Ok(MeanAccumulator::merge_all(&parts).estimate())
    }

    /// One accepted triple and the number of proposals it took.
    pub fn sample_counted(
        &self,
        rng: &mut StreamRng,
    ) -> Result<(OrderedDistances, usize), CoverageError> {
        let max_attempts = (10.0 / MIN_ACCEPTANCE) as usize;
        for attempt in 1..=max_attempts {
            let r = self.sampler.sample_triple(rng);
            if rng.random::<f64>() < self.ccdf_other_tier(&r) {
                return Ok((OrderedDistances::new_unchecked(r, self.tier), attempt));
            }
        }
        Err(CoverageError::AcceptanceTooLow {
            tier: self.tier,
            attempts: max_attempts,
            accepted: 0,
        })
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<OrderedDistances, CoverageError> {
        Ok(self.sample_counted(rng)?.0)
    }

    /// `count` accepted triples; fails if the overall acceptance rate falls
    /// below [`MIN_ACCEPTANCE`].
    pub fn sample_batch(
        &self,
        count: usize,
        rng: &mut StreamRng,
    ) -> Result<(Vec<OrderedDistances>, usize), CoverageError> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        for _ in 0..count {
            let (d, a) = self.sample_counted(rng)?;
            attempts += a;
            out.push(d);
        }
        if count > 0 && (count as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(CoverageError::AcceptanceTooLow {
                tier: self.tier,
                attempts,
                accepted: count,
            });
        }
        Ok((out, attempts))
    }
}

/// Draws one triple from the conditional law of `tier`.
pub fn conditional_sample(
    tier: Tier,
    cfg: &ValidatedConfig,
    rng: &mut StreamRng,
) -> Result<OrderedDistances, CoverageError> {
    ConditionalDistanceLaw::new(tier, cfg).sample(rng)
}

fn exclusion(
    tier: Tier,
    r3: f64,
    cfg: &ValidatedConfig,
) -> Result<(f64, f64, usize), CoverageError> {
    let (lo, hi) = crate::dist::support(tier, cfg);
    if !(r3 >= lo && r3 <= hi) {
        return Err(DistError::OutOfSupport {
            tier,
            r: r3,
            lo,
            hi,
        }
        .into());
    }
    Ok(match tier {
        Tier::Abs => (
            0.0,
            (r3 * r3 - cfg.gap() * cfg.gap())
                .max(0.0)
                .sqrt()
                .min(cfg.r_c()),
            3,
        ),
        Tier::Tbs => ((r3 * r3 - cfg.h() * cfg.h()).max(0.0).sqrt(), 0.0, 0),
    })
}

/// `1 - (1 + uΩx/m)^(-m)`, computed without cancellation.
fn one_minus_mgf(u: f64, omega: f64, x: f64, m: f64) -> f64 {
    -(-m * (u * omega * x / m).ln_1p()).exp_m1()
}

/// Laplace transform `E[exp(-uI)]` of the interference given the serving
/// tier's third distance `r3`: a PPP functional over TBSs beyond `l1` times a
/// BPP factor over the `N - k` ABSs on the annulus beyond `l2`.
pub fn laplace_interference(
    u: f64,
    r3: f64,
    tier: Tier,
    cfg: &ValidatedConfig,
    spec: &QuadratureSpec,
) -> Result<f64, CoverageError> {
    if !(u >= 0.0) {
        return Err(CoverageError::BadArgument(format!(
            "u must be >= 0, got {u}"
        )));
    }
    let (l1, l2, k) = exclusion(tier, r3, cfg)?;
    if u == 0.0 {
        return Ok(1.0);
    }
    if u.is_infinite() {
        // I > 0 almost surely: the TBS field is unbounded
        return Ok(0.0);
    }
    let h = cfg.h();
    let omega = cfg.omega();
    let mut exponent = 0.0;
    for s in [LinkState::Los, LinkState::Nlos] {
        let (a, m) = (cfg.alpha(Tier::Tbs, s), cfg.m(Tier::Tbs, s));
        let f = |z: f64| {
            let p = match s {
                LinkState::Los => los_probability(z, h, cfg.env()),
                LinkState::Nlos => 1.0 - los_probability(z, h, cfg.env()),
            };
            if p == 0.0 {
                return 0.0;
            }
            one_minus_mgf(u, omega, (z * z + h * h).powf(-0.5 * a), m) * z * p
        };
        // split where uΩx = 1: below it the integrand grows like z, above it decays
        let reach = ((u * omega).powf(2.0 / a) - h * h).max(0.0).sqrt().max(l1);
        exponent += integrate_1d(f, l1, reach, spec)?;
        if 2.0 * PI * cfg.lambda() * exponent > 800.0 {
            return Ok(0.0);
        }
        exponent += integrate_1d(f, reach, f64::INFINITY, spec)?;
    }
    let tbs = (-2.0 * PI * cfg.lambda() * exponent).exp();

    let (a, m) = (
        cfg.alpha(Tier::Abs, LinkState::Los),
        cfg.m(Tier::Abs, LinkState::Los),
    );
    let g2 = cfg.gap() * cfg.gap();
    let kernel = |z: f64| (-m * (u * omega * (z * z + g2).powf(-0.5 * a) / m).ln_1p()).exp();
    let rc = cfg.r_c();
    let area = rc * rc - l2 * l2;
    let mean_kernel = if area <= 1e-12 * rc * rc {
        kernel(rc)
    } else {
        integrate_1d(|z| 2.0 * z * kernel(z), l2, rc, spec)? / area
    };
    let abs = mean_kernel.powi((cfg.n_abs() - k) as i32);
    Ok((tbs * abs).clamp(0.0, 1.0))
}

/// Laplace transform of `√I`, `∫_0^∞ (2/√π) e^(-w²) L_I(s²/4w²) dw` (the
/// subordination integral after `u = s²/4w²`).
pub fn laplace_sqrt_interference(
    s: f64,
    r3: f64,
    tier: Tier,
    cfg: &ValidatedConfig,
    spec: &QuadratureSpec,
) -> Result<f64, CoverageError> {
    if !(s >= 0.0) {
        return Err(CoverageError::BadArgument(format!(
            "s must be >= 0, got {s}"
        )));
    }
    exclusion(tier, r3, cfg)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    let failure: Cell<Option<CoverageError>> = Cell::new(None);
    let f = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let u = s * s / (4.0 * w * w);
        match laplace_interference(u, r3, tier, cfg, spec) {
            Ok(l) => 2.0 / PI.sqrt() * (-w * w).exp() * l,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    // e^(-w²) is below 1e-17 past w = 6.3
    let v = integrate_1d(f, 0.0, 6.5, spec)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(v.clamp(0.0, 1.0))
}

/// `E[(√I)^k e^(-s√I)]` averaged over simulated interference fields.
pub fn laplace_sqrt_moment(
    s: f64,
    k: u32,
    r3: f64,
    tier: Tier,
    cfg: &ValidatedConfig,
    trials: usize,
    rng: &RngStream,
) -> Result<McEstimate, CoverageError> {
    if trials < MIN_TRIALS {
        return Err(NumericsError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        }
        .into());
    }
    if !(s >= 0.0) {
        return Err(CoverageError::BadArgument(format!(
            "s must be >= 0, got {s}"
        )));
    }
    exclusion(tier, r3, cfg)?;
    let field = InterferenceField::new(cfg)?;
    let parts = chunked_map(trials, rng, |r, count| {
        let mut acc = MeanAccumulator::default();
        for _ in 0..count {
            let x = field.sample(tier, r3, r).sqrt();
            acc.push(x.powi(k as i32) * (-s * x).exp());
        }
        acc
    });
    Ok(MeanAccumulator::merge_all(&parts).estimate())
}

/// Central finite difference of [`laplace_sqrt_interference`]:
/// `(-1)^k d^k/ds^k L(s)` for `k <= 2`.
pub fn laplace_sqrt_moment_fd(
    s: f64,
    k: u32,
    r3: f64,
    tier: Tier,
    cfg: &ValidatedConfig,
    spec: &QuadratureSpec,
    step: f64,
) -> Result<f64, CoverageError> {
    if k > 2 {
        return Err(CoverageError::BadArgument(format!(
            "finite differences only for k <= 2, got {k}"
        )));
    }
    if !(step > 0.0 && s >= step) {
        return Err(CoverageError::BadArgument(format!(
            "need 0 < step <= s (s={s}, step={step})"
        )));
    }
    let l = |x: f64| laplace_sqrt_interference(x, r3, tier, cfg, spec);
    Ok(match k {
        0 => l(s)?,
        1 => -(l(s + step)? - l(s - step)?) / (2.0 * step),
        _ => (l(s + step)? - 2.0 * l(s)? + l(s - step)?) / (step * step),
    })
}

/// `Σ_{k<n} x^k/k! e^(-x)`: probability that a Gamma(n, θ) signal exceeds
/// `θx`.
pub fn coverage_series(x: f64, n: u32) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..n {
        term *= x / k as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// Settings for the semi-analytic pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub moments: MomentOptions,
    pub assoc_trials: usize,
    /// Accepted conditional triples per tier, one interference field each.
    pub triples: usize,
    pub rng: RngStream,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            moments: MomentOptions::default(),
            assoc_trials: 100_000,
            triples: 20_000,
            rng: RngStream::new(0xC0FE, 0),
        }
    }
}

/// Conditional coverage of one tier for each threshold: mean over accepted
/// triples of the series evaluated at `s√I` with one simulated field per
/// triple.
fn tier_coverage(
    tier: Tier,
    cfg: &ValidatedConfig,
    fits: &TierFits,
    field: &InterferenceField,
    thresholds: &[f64],
    triples: usize,
    rng: &RngStream,
) -> Result<Vec<MeanAccumulator>, CoverageError> {
    let law = ConditionalDistanceLaw::new(tier, cfg);
    let zetas: Vec<LinkStateVector> = match tier {
        Tier::Abs => vec![LinkStateVector::ALL_LOS],
        Tier::Tbs => LinkStateVector::all().to_vec(),
    };
    let laws: Vec<Option<(f64, u32)>> = zetas
        .iter()
        .map(|z| {
            fits.u(tier, *z)
                .gamma()
                .map(|g| (g.theta, g.rounded_shape()))
        })
        .collect();
    let h = cfg.h();
    let parts = chunked_map(
        triples,
        rng,
        |r, count| -> Result<(Vec<MeanAccumulator>, usize), CoverageError> {
            let mut acc = vec![MeanAccumulator::default(); thresholds.len()];
            let (batch, attempts) = law.sample_batch(count, r)?;
            for d in batch {
                let sqrt_i = field.sample(tier, d.r[2], r).sqrt();
                let weights: Vec<f64> = match tier {
                    Tier::Abs => vec![1.0],
                    Tier::Tbs => {
                        let pl: Vec<f64> =
                            d.r.iter()
                                .map(|&x| {
                                    los_probability((x * x - h * h).max(0.0).sqrt(), h, cfg.env())
                                })
                                .collect();
                        zetas
                            .iter()
                            .map(|z| {
                                (0..3)
                                    .map(|i| match z.0[i] {
                                        LinkState::Los => pl[i],
                                        LinkState::Nlos => 1.0 - pl[i],
                                    })
                                    .product()
                            })
                            .collect()
                    }
                };
                for (j, &g) in thresholds.iter().enumerate() {
                    let mut v = 0.0;
                    for (w, l) in weights.iter().zip(&laws) {
                        if let Some((theta, n)) = *l {
                            v += w * coverage_series(g.sqrt() / theta * sqrt_i, n);
                        }
                    }
                    acc[j].push(v);
                }
            }
            Ok((acc, attempts))
        },
    );
    let mut per_chunk: Vec<Vec<MeanAccumulator>> = Vec::with_capacity(parts.len());
    let mut attempts = 0;
    for p in parts {
        let (a, n) = p?;
        attempts += n;
        per_chunk.push(a);
    }
    if (triples as f64) < MIN_ACCEPTANCE * attempts as f64 {
        return Err(CoverageError::AcceptanceTooLow {
            tier,
            attempts,
            accepted: triples,
        });
    }
    Ok((0..thresholds.len())
        .map(|j| MeanAccumulator::merge_all(&per_chunk.iter().map(|c| c[j]).collect::<Vec<_>>()))
        .collect())
}

/// Semi-analytic coverage for each threshold from precomputed fits and
/// association probabilities. All thresholds share the same triples and
/// fields.
pub fn coverage_analytic_with(
    cfg: &ValidatedConfig,
    fits: &TierFits,
    assoc: AssociationResult,
    gammas_db: &[f64],
    triples: usize,
    rng: &RngStream,
) -> Result<Vec<CoverageReport>, CoverageError> {
    if triples < MIN_TRIALS {
        return Err(NumericsError::TooFewTrials {
            min: MIN_TRIALS,
            got: triples,
        }
        .into());
    }
    let field = InterferenceField::new(cfg)?;
    let thresholds: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    let pa = tier_coverage(
        Tier::Abs,
        cfg,
        fits,
        &field,
        &thresholds,
        triples,
        &rng.substream(0),
    )?;
    let pt = tier_coverage(
        Tier::Tbs,
        cfg,
        fits,
        &field,
        &thresholds,
        triples,
        &rng.substream(1),
    )?;
    Ok(gammas_db
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let se = ((assoc.p_abs * pa[j].std_error()).powi(2)
                + (assoc.p_tbs * pt[j].std_error()).powi(2))
            .sqrt();
            CoverageReport::combine(
                pa[j].mean,
                pt[j].mean,
                assoc,
                g,
                Method::Analytic,
                triples,
                se,
            )
        })
        .collect())
}

/// Fits, association and coverage for a threshold sweep.
pub fn coverage_analytic_sweep(
    cfg: &ValidatedConfig,
    gammas_db: &[f64],
    opts: &CoverageOptions,
) -> Result<Vec<CoverageReport>, CoverageError> {
    let fits = TierFits::compute(
        cfg,
        &MomentOptions {
            rng: opts.rng.substream(0),
            ..opts.moments
        },
    )?;
    let assoc = assoc_prob_abs_analytic(cfg, &fits, opts.assoc_trials, &opts.rng.substream(1))?;
    coverage_analytic_with(
        cfg,
        &fits,
        assoc,
        gammas_db,
        opts.triples,
        &opts.rng.substream(2),
    )
}

pub fn coverage_analytic(
    cfg: &ValidatedConfig,
    gamma_db: f64,
    opts: &CoverageOptions,
) -> Result<CoverageReport, CoverageError> {
    Ok(coverage_analytic_sweep(cfg, &[gamma_db], opts)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::AbsSampler;
    use crate::model::NetworkConfig;
    use crate::numerics::reg_upper_gamma;

    fn cfg() -> ValidatedConfig {
        NetworkConfig::reference().validate().unwrap()
    }

    #[test]
    fn series_is_poisson_tail() {
        for n in 1..8 {
            for &x in &[0.0, 0.3, 1.0, 4.0, 20.0] {
                let q = reg_upper_gamma(n as f64, x).unwrap();
                assert!((coverage_series(x, n) - q).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn laplace_edges_and_monotone() {
        let c = cfg();
        let spec = QuadratureSpec::default();
        for (tier, r3) in [(Tier::Abs, 300.0), (Tier::Tbs, 250.0)] {
            assert_eq!(laplace_interference(0.0, r3, tier, &c, &spec).unwrap(), 1.0);
            assert_eq!(
                laplace_sqrt_interference(0.0, r3, tier, &c, &spec).unwrap(),
                1.0
            );
            let mut prev = 1.0;
            for k in 0..12 {
                let u = 10f64.powf(2.0 + 0.5 * k as f64);
                let l = laplace_interference(u, r3, tier, &c, &spec).unwrap();
                assert!(l > 0.0 || u > 1e6);
                assert!(l <= prev + 1e-12);
                prev = l;
            }
            let mut prev = 1.0;
            for k in 1..10 {
                let s = 10.0 * k as f64;
                let l = laplace_sqrt_interference(s, r3, tier, &c, &spec).unwrap();
                assert!(l <= prev + 1e-9 && l >= 0.0);
                prev = l;
            }
        }
        assert!(laplace_interference(1.0, 10.0, Tier::Tbs, &c, &spec).is_err());
        assert!(laplace_interference(-1.0, 200.0, Tier::Tbs, &c, &spec).is_err());
    }

    #[test]
    fn conditional_samples_ordered_in_support() {
        let c = cfg();
        let mut r = RngStream::new(7, 0).rng();
        for tier in [Tier::Abs, Tier::Tbs] {
            for _ in 0..500 {
                let d = conditional_sample(tier, &c, &mut r).unwrap();
                OrderedDistances::new(d.r, tier, &c).unwrap();
            }
        }
    }

    #[test]
    fn abs_conditioning_shortens_r1() {
        let c = cfg();
        let law = ConditionalDistanceLaw::new(Tier::Abs, &c);
        let mut r = RngStream::new(8, 0).rng();
        let (b, _) = law.sample_batch(5000, &mut r).unwrap();
        let cond = b.iter().map(|d| d.r[0]).sum::<f64>() / b.len() as f64;
        let s = AbsSampler::new(&c);
        let unc = (0..5000).map(|_| s.sample_triple(&mut r)[0]).sum::<f64>() / 5000.0;
        assert!(cond <= unc, "cond={cond} unc={unc}");
    }

    #[test]
    fn acceptance_rate_matches_normalizer() {
        let c = cfg();
        for tier in [Tier::Abs, Tier::Tbs] {
            let law = ConditionalDistanceLaw::new(tier, &c);
            let mut r = RngStream::new(9, 0).rng();
            let n = 4000;
            let (_, attempts) = law.sample_batch(n, &mut r).unwrap();
            let rate = n as f64 / attempts as f64;
            let z = law.normalizer(100_000, &RngStream::new(10, 0)).unwrap();
            // geometric count: relative sd of the rate is sqrt((1-p)/n)
            let sd = rate * ((1.0 - rate) / n as f64).sqrt();
            assert!(
                (rate - z.estimate).abs() < 3.0 * (sd * sd + z.std_error * z.std_error).sqrt(),
                "{tier}: rate={rate} z={}",
                z.estimate
            );
        }
    }

    #[test]
    fn too_low_acceptance_aborts() {
        // ABSs far above a dense TBS field almost never win
        let c = cfg()
            .modified(|c| {
                c.lambda_tbs = 2000.0;
                c.h = 20.0;
            })
            .unwrap();
        let mut r = RngStream::new(11, 0).rng();
        assert!(matches!(
            conditional_sample(Tier::Abs, &c, &mut r),
            Err(CoverageError::AcceptanceTooLow { .. })
        ));
    }

    #[test]
    fn report_identity() {
        let c = cfg();
        let opts = CoverageOptions {
            moments: MomentOptions {
                trials: 20_000,
                ..Default::default()
            },
            assoc_trials: 5000,
            triples: 2000,
            ..Default::default()
        };
        let reps = coverage_analytic_sweep(&c, &[-40.0, 0.0, 10.0], &opts).unwrap();
        assert!(reps[0].p_total > 0.98);
        for w in reps.windows(2) {
            assert!(w[1].p_total <= w[0].p_total + 1e-12);
        }
        for rep in &reps {
            let recon = rep.p_abs_cond * rep.assoc.p_abs + rep.p_tbs_cond * rep.assoc.p_tbs;
            assert_eq!(recon, rep.p_total);
            assert!((0.0..=1.0).contains(&rep.p_total));
        }
    }
}
