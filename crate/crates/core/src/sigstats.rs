//! Gamma moment matching of the aggregate CoMP signals.
//!
//! For a tier χ and link-state vector ζ the coherent amplitude is
//! `U = Σ_n 1{S_n = ζ_n} |H_n| R_n^(-α_n/2)` and its fading-free counterpart
//! is `V = Σ_n 1{S_n = ζ_n} R_n^(-α_n/2)`. Both are matched to Gamma laws
//! through their first two moments. For the ABS tier every indicator is one.

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::state_probability;
use crate::dist::{pdf_nth, support, tbs_truncation_radius, TierSampler};
use crate::model::{LinkState, LinkStateVector, Tier, ValidatedConfig};
use crate::numerics::{
    chunked_map, integrate_1d, ln_gamma, reg_lower_gamma, McEstimate, MeanAccumulator,
    NumericsError, QuadratureSpec, RngStream, StreamRng, TripleSampler, MIN_TRIALS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigstatsError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("non-positive variance {variance:e} for {tier} {zeta} (mean {mean:e})")]
    NonPositiveVariance {
        tier: Tier,
        zeta: LinkStateVector,
        mean: f64,
        variance: f64,
    },
    #[error("invalid Gamma parameters nu={nu}, theta={theta}")]
    InvalidFit { nu: f64, theta: f64 },
    #[error("fading parameters out of range: m={m}, omega={omega}")]
    Fading { m: f64, omega: f64 },
}

/// Gamma law with shape `nu` and scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub nu: f64,
    pub theta: f64,
}

impl GammaFit {
    pub fn new(nu: f64, theta: f64) -> Result<Self, SigstatsError> {
        if !(nu > 0.0 && theta > 0.0 && nu.is_finite() && theta.is_finite()) {
            return Err(SigstatsError::InvalidFit { nu, theta });
        }
        Ok(Self { nu, theta })
    }

    /// Moment matching: `nu = mean²/var`, `theta = var/mean`.
    pub fn from_moments(mean: f64, variance: f64) -> Result<Self, SigstatsError> {
        Self::new(mean * mean / variance, variance / mean)
    }

    pub fn mean(&self) -> f64 {
        self.nu * self.theta
    }

    pub fn variance(&self) -> f64 {
        self.nu * self.theta * self.theta
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        reg_lower_gamma(self.nu, x / self.theta).expect("validated shape")
    }

    /// Integer shape used by the coverage series: `max(round(nu), 1)`.
    pub fn rounded_shape(&self) -> u32 {
        (self.nu.round() as u32).max(1)
    }
}

/// Fitted law of an aggregate signal; `Zero` when every link of the vector has
/// zero probability (the signal is identically zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignalLaw {
    Gamma(GammaFit),
    Zero,
}

impl SignalLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            SignalLaw::Gamma(g) => g.cdf(x),
            SignalLaw::Zero => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gamma(&self) -> Option<&GammaFit> {
        match self {
            SignalLaw::Gamma(g) => Some(g),
            SignalLaw::Zero => None,
        }
    }
}

/// `E|H| = Γ(m+½)/Γ(m) · (Ω/m)^½` for Nakagami-m fading.
pub fn fading_first_moment(m: f64, omega: f64) -> Result<f64, SigstatsError> {
    if !(m >= 0.5 && omega > 0.0 && m.is_finite() && omega.is_finite()) {
        return Err(SigstatsError::Fading { m, omega });
    }
    Ok((ln_gamma(m + 0.5) - ln_gamma(m)).exp() * (omega / m).sqrt())
}

/// How the cross term `C_{p,q}` pairs link states and exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrossMomentVariant {
    /// States fixed by ζ, each distance with its own exponent.
    FixedStateOwn,
    /// States fixed by ζ, exponents swapped between the pair.
    FixedStateCrossed,
    /// Sum over both states of each link, own exponents.
    PairStateSumOwn,
    /// Sum over both states of each link, swapped exponents.
    PairStateSumCrossed,
}

impl CrossMomentVariant {
    pub const ALL: [CrossMomentVariant; 4] = [
        CrossMomentVariant::FixedStateOwn,
        CrossMomentVariant::FixedStateCrossed,
        CrossMomentVariant::PairStateSumOwn,
        CrossMomentVariant::PairStateSumCrossed,
    ];
}

/// Numerical settings for [`compute_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub quad: QuadratureSpec,
    pub trials: usize,
    pub variant: CrossMomentVariant,
    pub rng: RngStream,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            trials: 200_000,
            variant: CrossMomentVariant::FixedStateOwn,
            rng: RngStream::new(0x5157, 0),
        }
    }
}

/// First/second/cross moments of the masked distance terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMoments {
    pub tier: Tier,
    pub zeta: LinkStateVector,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [[f64; 3]; 3],
    pub c_std_error: [[f64; 3]; 3],
    pub delta: [f64; 3],
    pub omega: f64,
    pub trials: usize,
}

impl SignalMoments {
    fn cross_sum(&self, weighted: bool) -> f64 {
        let mut s = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                if p != q {
                    let w = if weighted {
                        self.delta[p] * self.delta[q]
                    } else {
                        1.0
                    };
                    s += w * self.c[p][q];
                }
            }
        }
        s
    }

    pub fn u_mean(&self) -> f64 {
        (0..3).map(|n| self.a[n] * self.delta[n]).sum()
    }

    pub fn u_second_moment(&self) -> f64 {
        self.omega * self.b.iter().sum::<f64>() + self.cross_sum(true)
    }

    pub fn u_variance(&self) -> f64 {
        self.u_second_moment() - self.u_mean().powi(2)
    }

    pub fn v_mean(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn v_second_moment(&self) -> f64 {
        self.b.iter().sum::<f64>() + self.cross_sum(false)
    }

    pub fn v_variance(&self) -> f64 {
        self.v_second_moment() - self.v_mean().powi(2)
    }
}

/// Link-state probability as seen by tier `tier` at 3-D distance `r`.
fn state_prob(tier: Tier, state: LinkState, r: f64, cfg: &ValidatedConfig) -> f64 {
    match tier {
        Tier::Abs => 1.0,
        Tier::Tbs => {
            let h = cfg.h();
            let z = (r * r - h * h).max(0.0).sqrt();
            state_probability(state, z, h, cfg.env())
        }
    }
}

fn link_state(tier: Tier, s: LinkState) -> LinkState {
    match tier {
        Tier::Abs => LinkState::Los,
        Tier::Tbs => s,
    }
}

fn upper_limit(tier: Tier, n: usize, cfg: &ValidatedConfig, quad: &QuadratureSpec) -> f64 {
    match tier {
        Tier::Abs => cfg.r_max(),
        // integrand <= h^(-α/2) times the tail mass; the tail mass is made negligible
        Tier::Tbs => tbs_truncation_radius(n, quad.abs_tol * 1e-3, cfg),
    }
}

/// Cross term `C_{p,q}` integrand for one sampled triple.
fn cross_term(
    variant: CrossMomentVariant,
    tier: Tier,
    zeta: &LinkStateVector,
    r: &[f64; 3],
    p: usize,
    q: usize,
    cfg: &ValidatedConfig,
) -> f64 {
    let amp = |x: f64, s: LinkState| x.powf(-0.5 * cfg.alpha(tier, s));
    let (sp, sq) = (link_state(tier, zeta.0[p]), link_state(tier, zeta.0[q]));
    let pr = |s, x| state_prob(tier, s, x, cfg);
    match variant {
        CrossMomentVariant::FixedStateOwn => {
            pr(sp, r[p]) * pr(sq, r[q]) * amp(r[p], sp) * amp(r[q], sq)
        }
        CrossMomentVariant::FixedStateCrossed => {
            pr(sp, r[p]) * pr(sq, r[q]) * amp(r[p], sq) * amp(r[q], sp)
        }
        CrossMomentVariant::PairStateSumOwn | CrossMomentVariant::PairStateSumCrossed => {
            let states: &[LinkState] = match tier {
                Tier::Abs => &[LinkState::Los],
                Tier::Tbs => &[LinkState::Los, LinkState::Nlos],
            };
            let crossed = variant == CrossMomentVariant::PairStateSumCrossed;
            let mut s = 0.0;
            for &a in states {
                for &b in states {
                    let w = pr(a, r[p]) * pr(b, r[q]);
                    s += if crossed {
                        w * amp(r[p], b) * amp(r[q], a)
                    } else {
                        w * amp(r[p], a) * amp(r[q], b)
                    };
                }
            }
            s
        }
    }
}

/// Computes `A_n`, `B_n` by quadrature over the marginal laws and `C_{p,q}` by
/// ordered-triple Monte Carlo over the joint law.
pub fn compute_moments(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
) -> Result<SignalMoments, SigstatsError> {
    if opts.trials < MIN_TRIALS {
        return Err(NumericsError::TooFewTrials {
            min: MIN_TRIALS,
            got: opts.trials,
        }
        .into());
    }
    let zeta = match tier {
        Tier::Abs => LinkStateVector::ALL_LOS,
        Tier::Tbs => zeta,
    };
    let (lo, _) = support(tier, cfg);
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    let mut delta = [0.0; 3];
    for n in 0..3 {
        let s = zeta.0[n];
        let alpha = cfg.alpha(tier, s);
        let hi = upper_limit(tier, n + 1, cfg, &opts.quad);
        let f = |r: f64| {
            pdf_nth(tier, r, n + 1, cfg).expect("index in range") * state_prob(tier, s, r, cfg)
        };
        a[n] = integrate_1d(|r| r.powf(-0.5 * alpha) * f(r), lo, hi, &opts.quad)?;
        b[n] = integrate_1d(|r| r.powf(-alpha) * f(r), lo, hi, &opts.quad)?;
        delta[n] = fading_first_moment(cfg.m(tier, s), cfg.omega())?;
    }

    let sampler = TierSampler::new(tier, cfg);
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let parts = chunked_map(opts.trials, &opts.rng, |rng, count| {
        let mut acc = [MeanAccumulator::default(); 3];
        for _ in 0..count {
            let r = sampler.sample_triple(rng);
            for (k, &(p, q)) in PAIRS.iter().enumerate() {
                acc[k].push(cross_term(opts.variant, tier, &zeta, &r, p, q, cfg));
            }
        }
        acc
    });
    let mut c = [[0.0; 3]; 3];
    let mut c_se = [[0.0; 3]; 3];
    for (k, &(p, q)) in PAIRS.iter().enumerate() {
        let col: Vec<MeanAccumulator> = parts.iter().map(|x| x[k]).collect();
        let e = MeanAccumulator::merge_all(&col);
        c[p][q] = e.mean;
        c[q][p] = e.mean;
        c_se[p][q] = e.std_error();
        c_se[q][p] = e.std_error();
    }
    Ok(SignalMoments {
        tier,
        zeta,
        a,
        b,
        c,
        c_std_error: c_se,
        delta,
        omega: cfg.omega(),
        trials: opts.trials,
    })
}

fn fit(mean: f64, variance: f64, m: &SignalMoments) -> Result<SignalLaw, SigstatsError> {
    if mean == 0.0 {
        return Ok(SignalLaw::Zero);
    }
    if !(variance > 0.0) {
        return Err(SigstatsError::NonPositiveVariance {
            tier: m.tier,
            zeta: m.zeta,
            mean,
            variance,
        });
    }
    Ok(SignalLaw::Gamma(GammaFit::from_moments(mean, variance)?))
}

/// Gamma law of the faded aggregate amplitude `U`.
pub fn fit_gamma_u_from(m: &SignalMoments) -> Result<SignalLaw, SigstatsError> {
    fit(m.u_mean(), m.u_variance(), m)
}

/// Gamma law of the fading-free aggregate amplitude `V`.
pub fn fit_gamma_v_from(m: &SignalMoments) -> Result<SignalLaw, SigstatsError> {
    fit(m.v_mean(), m.v_variance(), m)
}

fn moments_with_retry(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
) -> Result<(SignalMoments, SignalLaw, SignalLaw), SigstatsError> {
    let attempt =
        |o: &MomentOptions| -> Result<(SignalMoments, SignalLaw, SignalLaw), SigstatsError> {
            let m = compute_moments(tier, zeta, cfg, o)?;
            let u = fit_gamma_u_from(&m)?;
            let v = fit_gamma_v_from(&m)?;
            Ok((m, u, v))
        };
    match attempt(opts) {
        Err(SigstatsError::NonPositiveVariance { .. }) => {
            log::warn!("non-positive variance for {tier} {zeta}; retrying with 10x trials");
            let wider = MomentOptions {
                trials: opts.trials * 10,
                rng: opts.rng.substream(0xA11),
                ..*opts
            };
            attempt(&wider)
        }
        other => other,
    }
}

pub fn fit_gamma_u(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
) -> Result<SignalLaw, SigstatsError> {
    moments_with_retry(tier, zeta, cfg, opts).map(|x| x.1)
}

pub fn fit_gamma_v(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
) -> Result<SignalLaw, SigstatsError> {
    moments_with_retry(tier, zeta, cfg, opts).map(|x| x.2)
}

/// Fits for the ABS tier and all eight TBS link-state vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierFits {
    pub abs_moments: SignalMoments,
    pub abs_u: SignalLaw,
    pub abs_v: SignalLaw,
    pub tbs_moments: Vec<SignalMoments>,
    pub tbs_u: Vec<SignalLaw>,
    pub tbs_v: Vec<SignalLaw>,
    pub variant: CrossMomentVariant,
}

impl TierFits {
    pub fn compute(cfg: &ValidatedConfig, opts: &MomentOptions) -> Result<TierFits, SigstatsError> {
        let (abs_moments, abs_u, abs_v) = moments_with_retry(
            Tier::Abs,
            LinkStateVector::ALL_LOS,
            cfg,
            &MomentOptions {
                rng: opts.rng.substream(100),
                ..*opts
            },
        )?;
        let mut tbs_moments = Vec::with_capacity(8);
        let mut tbs_u = Vec::with_capacity(8);
        let mut tbs_v = Vec::with_capacity(8);
        for zeta in LinkStateVector::all() {
            let o = MomentOptions {
                rng: opts.rng.substream(zeta.index() as u64),
                ..*opts
            };
            let (m, u, v) = moments_with_retry(Tier::Tbs, zeta, cfg, &o)?;
            tbs_moments.push(m);
            tbs_u.push(u);
            tbs_v.push(v);
        }
        Ok(TierFits {
            abs_moments,
            abs_u,
            abs_v,
            tbs_moments,
            tbs_u,
            tbs_v,
            variant: opts.variant,
        })
    }

    pub fn u(&self, tier: Tier, zeta: LinkStateVector) -> &SignalLaw {
        match tier {
            Tier::Abs => &self.abs_u,
            Tier::Tbs => &self.tbs_u[zeta.index()],
        }
    }

    pub fn v(&self, tier: Tier, zeta: LinkStateVector) -> &SignalLaw {
        match tier {
            Tier::Abs => &self.abs_v,
            Tier::Tbs => &self.tbs_v[zeta.index()],
        }
    }
}

/// Draws one realization of the masked aggregates `(U, V)` for a tier and ζ,
/// with link states drawn from the LoS model and Nakagami fading.
pub fn sample_masked_signal(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    sampler: &TierSampler,
    rng: &mut StreamRng,
) -> (f64, f64) {
    let r = sampler.sample_triple(rng);
    let (mut u, mut v) = (0.0, 0.0);
    for n in 0..3 {
        let want = link_state(tier, zeta.0[n]);
        let actual = match tier {
            Tier::Abs => LinkState::Los,
            Tier::Tbs => {
                if rng.random::<f64>() < state_prob(tier, LinkState::Los, r[n], cfg) {
                    LinkState::Los
                } else {
                    LinkState::Nlos
                }
            }
        };
        let fading =
            crate::channel::FadingParams::new(cfg.m(tier, actual), cfg.omega()).expect("validated");
        let g = fading.sample_power(rng).sqrt();
        if actual == want {
            let x = r[n].powf(-0.5 * cfg.alpha(tier, actual));
            u += g * x;
            v += x;
        }
    }
    (u, v)
}

/// Brute-force first and second moments of the masked `U` and `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSignal {
    pub u_mean: McEstimate,
    pub u_second: McEstimate,
    pub v_mean: McEstimate,
    pub v_second: McEstimate,
}

pub fn empirical_signal_moments(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    trials: usize,
    rng: &RngStream,
) -> EmpiricalSignal {
    let sampler = TierSampler::new(tier, cfg);
    let parts = chunked_map(trials, rng, |r, count| {
        let mut acc = [MeanAccumulator::default(); 4];
        for _ in 0..count {
            let (u, v) = sample_masked_signal(tier, zeta, cfg, &sampler, r);
            acc[0].push(u);
            acc[1].push(u * u);
            acc[2].push(v);
            acc[3].push(v * v);
        }
        acc
    });
    let col = |k: usize| {
        MeanAccumulator::merge_all(&parts.iter().map(|x| x[k]).collect::<Vec<_>>()).estimate()
    };
    EmpiricalSignal {
        u_mean: col(0),
        u_second: col(1),
        v_mean: col(2),
        v_second: col(3),
    }
}

/// Samples of the masked `V` for KS comparisons.
pub fn sample_masked_v(
    tier: Tier,
    zeta: LinkStateVector,
    cfg: &ValidatedConfig,
    trials: usize,
    rng: &RngStream,
) -> Vec<f64> {
    let sampler = TierSampler::new(tier, cfg);
    chunked_map(trials, rng, |r, count| {
        (0..count)
            .map(|_| sample_masked_signal(tier, zeta, cfg, &sampler, r).1)
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Score of one cross-moment variant against brute-force moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub variant: CrossMomentVariant,
    /// Mean over ζ of |E[V²]_fit - E[V²]_mc| / E[V²]_mc.
    pub v_error: f64,
    /// Same for `U`.
    pub u_error: f64,
}

/// Compares every cross-moment variant against the brute-force oracle on the
/// TBS tier and returns the scores sorted best first.
pub fn score_cross_variants(
    cfg: &ValidatedConfig,
    opts: &MomentOptions,
    oracle_trials: usize,
) -> Result<Vec<VariantScore>, SigstatsError> {
    let oracle: Vec<EmpiricalSignal> = LinkStateVector::all()
        .iter()
        .map(|z| {
            empirical_signal_moments(
                Tier::Tbs,
                *z,
                cfg,
                oracle_trials,
                &opts.rng.substream(0x0AC1E + z.index() as u64),
            )
        })
        .collect();
    let mut scores = Vec::new();
    for variant in CrossMomentVariant::ALL {
        let (mut ve, mut ue, mut k) = (0.0, 0.0, 0usize);
        for z in LinkStateVector::all() {
            let o = MomentOptions {
                variant,
                rng: opts.rng.substream(z.index() as u64),
                ..*opts
            };
            let m = compute_moments(Tier::Tbs, z, cfg, &o)?;
            let e = &oracle[z.index()];
            if e.v_second.estimate > 0.0 {
                ve += (m.v_second_moment() - e.v_second.estimate).abs() / e.v_second.estimate;
                ue += (m.u_second_moment() - e.u_second.estimate).abs() / e.u_second.estimate;
                k += 1;
            }
        }
        let k = k.max(1) as f64;
        scores.push(VariantScore {
            variant,
            v_error: ve / k,
            u_error: ue / k,
        });
    }
    scores.sort_by(|a, b| (a.v_error + a.u_error).total_cmp(&(b.v_error + b.u_error)));
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_ordered_abs, AbsSampler};
    use crate::model::NetworkConfig;

    fn cfg() -> ValidatedConfig {
        NetworkConfig::reference().validate().unwrap()
    }

    fn quick() -> MomentOptions {
        MomentOptions {
            trials: 50_000,
            ..MomentOptions::default()
        }
    }

    #[test]
    fn fading_moment_values() {
        let d = fading_first_moment(1.0, 1.0).unwrap();
        assert!((d - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        assert!((fading_first_moment(1e4, 4.0).unwrap() - 2.0).abs() < 1e-4);
        assert!(fading_first_moment(0.2, 1.0).is_err());
    }

    #[test]
    fn abs_moments_are_bounded() {
        let c = cfg();
        let m = compute_moments(Tier::Abs, LinkStateVector::ALL_LOS, &c, &quick()).unwrap();
        let lo = c.r_max().powf(-0.5 * 2.0);
        let hi = c.gap().powf(-0.5 * 2.0);
        for n in 0..3 {
            assert!(m.a[n] >= lo && m.a[n] <= hi);
        }
        assert_eq!(m.c[0][1], m.c[1][0]);
        assert_eq!(m.c[1][2], m.c[2][1]);
    }

    #[test]
    fn abs_first_moment_matches_sampler() {
        let c = cfg();
        let m = compute_moments(Tier::Abs, LinkStateVector::ALL_LOS, &c, &quick()).unwrap();
        let mut rng = RngStream::new(77, 0).rng();
        let mut acc = MeanAccumulator::default();
        for _ in 0..100_000 {
            acc.push(sample_ordered_abs(&c, &mut rng).r[0].powf(-1.0));
        }
        assert!((acc.mean - m.a[0]).abs() < 3.0 * acc.std_error());
        let _ = AbsSampler::new(&c);
    }

    #[test]
    fn fit_identities() {
        let c = cfg();
        for z in [LinkStateVector::ALL_LOS, LinkStateVector::from_index(5)] {
            let m = compute_moments(Tier::Tbs, z, &c, &quick()).unwrap();
            let u = fit_gamma_u_from(&m).unwrap();
            let v = fit_gamma_v_from(&m).unwrap();
            let (u, v) = (u.gamma().unwrap(), v.gamma().unwrap());
            assert!((u.mean() - m.u_mean()).abs() <= 1e-10 * m.u_mean());
            assert!((u.variance() - m.u_variance()).abs() <= 1e-10 * m.u_variance());
            assert!((v.mean() - m.v_mean()).abs() <= 1e-10 * m.v_mean());
            assert!((v.variance() - m.v_variance()).abs() <= 1e-10 * m.v_variance());
        }
    }

    #[test]
    fn zero_signal_is_point_mass() {
        let c = NetworkConfig {
            env: crate::model::Environment::HIGHRISE_URBAN,
            ..NetworkConfig::reference()
        }
        .validate()
        .unwrap();
        let m = compute_moments(Tier::Tbs, LinkStateVector::ALL_LOS, &c, &quick()).unwrap();
        assert_eq!(m.v_mean(), 0.0);
        assert_eq!(fit_gamma_v_from(&m).unwrap(), SignalLaw::Zero);
        assert_eq!(SignalLaw::Zero.cdf(1e-9), 1.0);
    }

    #[test]
    fn gamma_fit_validation() {
        assert!(GammaFit::new(0.0, 1.0).is_err());
        assert!(GammaFit::from_moments(1.0, -1.0).is_err());
        let g = GammaFit::new(2.4, 0.5).unwrap();
        assert_eq!(g.rounded_shape(), 2);
        assert_eq!(GammaFit::new(0.3, 1.0).unwrap().rounded_shape(), 1);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn moment_matching_round_trip(mean in 1e-6f64..1e3, cv in 1e-3f64..10.0) {
            let var = (mean * cv).powi(2);
            let g = GammaFit::from_moments(mean, var).unwrap();
            proptest::prop_assert!((g.mean() - mean).abs() <= 1e-10 * mean);
            proptest::prop_assert!((g.variance() - var).abs() <= 1e-10 * var);
        }
    }
}
