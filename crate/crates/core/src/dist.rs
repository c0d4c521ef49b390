//! Distance laws for the n nearest stations of each tier, and exact samplers.
//!
//! ABS tier: `N` points uniform on a disk of radius `r_C` at vertical
//! separation `H - h` from the user, so 3-D distances live on `[H-h, r_max]`.
//! TBS tier: homogeneous PPP of density λ with vertical separation `h`.

use std::f64::consts::PI;

use rand::RngExt;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Tier, ValidatedConfig};
use crate::numerics::{
    binomial, factorial, reg_lower_gamma, reg_upper_gamma, StreamRng, TripleSampler,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("order index n={n} outside 1..={max}")]
    IndexOutOfRange { n: usize, max: usize },
    #[error("distances are not ordered: {0:?}")]
    Unordered(Vec<f64>),
    #[error("distance {r} outside the {tier} support [{lo}, {hi}]")]
    OutOfSupport {
        tier: Tier,
        r: f64,
        lo: f64,
        hi: f64,
    },
}

/// Ordered distances `r1 <= r2 <= r3` to the three nearest stations of a tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedDistances {
    pub r: [f64; 3],
    pub tier: Tier,
}

impl OrderedDistances {
    pub fn new(r: [f64; 3], tier: Tier, cfg: &ValidatedConfig) -> Result<Self, DistError> {
        check_ordered(&r)?;
        let (lo, hi) = support(tier, cfg);
        for &x in &r {
            if !(x >= lo && x <= hi) {
                return Err(DistError::OutOfSupport { tier, r: x, lo, hi });
            }
        }
        Ok(Self { r, tier })
    }

    pub(crate) fn new_unchecked(r: [f64; 3], tier: Tier) -> Self {
        Self { r, tier }
    }
}

/// Support `[lo, hi]` of 3-D distances for a tier.
pub fn support(tier: Tier, cfg: &ValidatedConfig) -> (f64, f64) {
    match tier {
        Tier::Abs => (cfg.gap(), cfg.r_max()),
        Tier::Tbs => (cfg.h(), f64::INFINITY),
    }
}

fn check_ordered(r: &[f64]) -> Result<(), DistError> {
    if r.windows(2).any(|w| !(w[0] <= w[1])) || r.iter().any(|x| x.is_nan()) {
        return Err(DistError::Unordered(r.to_vec()));
    }
    Ok(())
}

fn check_abs_index(n: usize, cfg: &ValidatedConfig) -> Result<(), DistError> {
    if n == 0 || n > cfg.n_abs() {
        return Err(DistError::IndexOutOfRange {
            n,
            max: cfg.n_abs(),
        });
    }
    Ok(())
}

/// Fraction of the ABS disk inside 3-D radius `r` from the user.
pub fn abs_area_fraction(r: f64, cfg: &ValidatedConfig) -> f64 {
    let g = cfg.gap();
    ((r * r - g * g) / (cfg.r_c() * cfg.r_c())).clamp(0.0, 1.0)
}

/// Density of the distance to the n-th nearest ABS (compact form).
pub fn pdf_abs_nth(r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    check_abs_index(n, cfg)?;
    if r < cfg.gap() || r > cfg.r_max() {
        return Ok(0.0);
    }
    let big_n = cfg.n_abs() as u32;
    let n = n as u32;
    let rc2 = cfg.r_c() * cfg.r_c();
    let f = (r * r - cfg.gap() * cfg.gap()) / rc2;
    let s = (cfg.r_max() * cfg.r_max() - r * r) / rc2;
    let coef = n as f64 * binomial(big_n, n);
    Ok(coef * (2.0 * r / rc2) * f.powi(n as i32 - 1) * s.powi((big_n - n) as i32))
}

/// Nearest-ABS density written directly in its special-case form.
pub fn pdf_abs_nearest(r: f64, cfg: &ValidatedConfig) -> f64 {
    if r < cfg.gap() || r > cfg.r_max() {
        return 0.0;
    }
    let rc2 = cfg.r_c() * cfg.r_c();
    let big_n = cfg.n_abs() as f64;
    big_n
        * (2.0 * r / rc2)
        * ((cfg.r_max() * cfg.r_max() - r * r) / rc2).powi(cfg.n_abs() as i32 - 1)
}

/// Density of the n-th nearest ABS distance as the derivative of the binomial
/// order-statistic CDF, term by term.
pub fn pdf_abs_nth_binomial_sum(r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    check_abs_index(n, cfg)?;
    if r < cfg.gap() || r > cfg.r_max() {
        return Ok(0.0);
    }
    let big_n = cfg.n_abs() as u32;
    let rc2 = cfg.r_c() * cfg.r_c();
    let f = (r * r - cfg.gap() * cfg.gap()) / rc2;
    let s = 1.0 - f;
    let fd = 2.0 * r / rc2;
    let mut sum = 0.0;
    for k in n as u32..=big_n {
        let c = binomial(big_n, k);
        let mut term = k as f64 * f.powi(k as i32 - 1) * s.powi((big_n - k) as i32);
        if k < big_n {
            term -= (big_n - k) as f64 * f.powi(k as i32) * s.powi((big_n - k - 1) as i32);
        }
        sum += c * term;
    }
    Ok(fd * sum)
}

/// `P(R_n <= r)` for the n-th nearest ABS.
pub fn cdf_abs_nth(r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    check_abs_index(n, cfg)?;
    let big_n = cfg.n_abs() as u32;
    let f = abs_area_fraction(r, cfg);
    let s = 1.0 - f;
    let mut sum = 0.0;
    for k in n as u32..=big_n {
        sum += binomial(big_n, k) * f.powi(k as i32) * s.powi((big_n - k) as i32);
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Joint density of the first `r.len()` ordered ABS distances.
pub fn joint_pdf_abs_general(r: &[f64], cfg: &ValidatedConfig) -> Result<f64, DistError> {
    check_ordered(r)?;
    let n = r.len();
    check_abs_index(n.max(1), cfg)?;
    if n == 0 {
        return Ok(1.0);
    }
    if r[0] < cfg.gap() || r[n - 1] > cfg.r_max() {
        return Ok(0.0);
    }
    let big_n = cfg.n_abs() as u32;
    let rc2 = cfg.r_c() * cfg.r_c();
    let perm = factorial(big_n) / factorial(big_n - n as u32);
    let prod: f64 = r.iter().map(|x| 2.0 * x / rc2).product();
    let tail = (cfg.r_max() * cfg.r_max() - r[n - 1] * r[n - 1]) / rc2;
    Ok(perm * prod * tail.powi((big_n - n as u32) as i32))
}

pub fn joint_pdf_abs(d: &OrderedDistances, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    joint_pdf_abs_general(&d.r, cfg)
}

/// Mean-measure of the TBS PPP within 3-D radius `r`: `πλ(r² - h²)`.
pub fn tbs_mean_measure(r: f64, cfg: &ValidatedConfig) -> f64 {
    let h = cfg.h();
    (PI * cfg.lambda() * (r * r - h * h)).max(0.0)
}

/// Density of the distance to the n-th nearest TBS.
pub fn pdf_tbs_nth(r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    if n == 0 {
        return Err(DistError::IndexOutOfRange { n, max: usize::MAX });
    }
    if r <= cfg.h() {
        return Ok(0.0);
    }
    let x = tbs_mean_measure(r, cfg);
    let pl = PI * cfg.lambda();
    Ok(2.0 * pl * r * x.powi(n as i32 - 1) * (-x).exp() / factorial(n as u32 - 1))
}

/// Nearest-TBS density in its special-case form.
pub fn pdf_tbs_nearest(r: f64, cfg: &ValidatedConfig) -> f64 {
    if r <= cfg.h() {
        return 0.0;
    }
    let h = cfg.h();
    2.0 * PI * cfg.lambda() * r * (-PI * cfg.lambda() * (r * r - h * h)).exp()
}

/// `P(R_n <= r)` for the n-th nearest TBS.
pub fn cdf_tbs_nth(r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    if n == 0 {
        return Err(DistError::IndexOutOfRange { n, max: usize::MAX });
    }
    Ok(reg_lower_gamma(n as f64, tbs_mean_measure(r, cfg)).expect("positive shape"))
}

/// Radius beyond which the n-th nearest TBS lies with probability below `tol`.
pub fn tbs_truncation_radius(n: usize, tol: f64, cfg: &ValidatedConfig) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while reg_upper_gamma(n as f64, hi).expect("positive shape") > tol {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if reg_upper_gamma(n as f64, mid).expect("positive shape") > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = cfg.h();
    (h * h + hi / (PI * cfg.lambda())).sqrt()
}

/// Joint density of the first `r.len()` ordered TBS distances.
pub fn joint_pdf_tbs_general(r: &[f64], cfg: &ValidatedConfig) -> Result<f64, DistError> {
    check_ordered(r)?;
    let n = r.len();
    if n == 0 {
        return Ok(1.0);
    }
    if r[0] <= cfg.h() {
        return Ok(0.0);
    }
    let two_pl = 2.0 * PI * cfg.lambda();
    let prod: f64 = r.iter().map(|x| two_pl * x).product();
    Ok(prod * (-tbs_mean_measure(r[n - 1], cfg)).exp())
}

pub fn joint_pdf_tbs(d: &OrderedDistances, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    joint_pdf_tbs_general(&d.r, cfg)
}

/// Density of `R3` given `R2 = r2` for the TBS tier.
pub fn conditional_pdf_tbs(r3: f64, r2: f64, cfg: &ValidatedConfig) -> f64 {
    if r3 < r2 {
        return 0.0;
    }
    2.0 * PI * cfg.lambda() * r3 * (-PI * cfg.lambda() * (r3 * r3 - r2 * r2)).exp()
}

/// `1 - P(R1 <= r1, R2 <= r2, R3 <= r3)` for the ABS tier.
pub fn joint_ccdf_abs(r: &[f64; 3], cfg: &ValidatedConfig) -> f64 {
    let big_n = cfg.n_abs() as i32;
    let g1 = abs_area_fraction(r[0], cfg);
    let g2 = abs_area_fraction(r[1], cfg);
    let g3 = abs_area_fraction(r[2], cfg);
    let (p1, p2, q) = (g1, g2 - g1, 1.0 - g3);
    let nf = big_n as f64;
    let v = (1.0 - p1).powi(big_n)
        + nf * p1 * (1.0 - p1 - p2).powi(big_n - 1)
        + (nf * (nf - 1.0) / 2.0 * p1 * p1 + nf * (nf - 1.0) * p1 * p2) * q.powi(big_n - 2);
    v.clamp(0.0, 1.0)
}

/// `1 - P(R1 <= r1, R2 <= r2, R3 <= r3)` for the TBS tier.
pub fn joint_ccdf_tbs(r: &[f64; 3], cfg: &ValidatedConfig) -> f64 {
    let a1 = tbs_mean_measure(r[0], cfg);
    let a2 = tbs_mean_measure(r[1], cfg);
    let a3 = tbs_mean_measure(r[2], cfg);
    let v = (-a1).exp() + a1 * (-a2).exp() + (0.5 * a1 * a1 + a1 * (a2 - a1)) * (-a3).exp();
    v.clamp(0.0, 1.0)
}

pub fn joint_ccdf(tier: Tier, r: &[f64; 3], cfg: &ValidatedConfig) -> f64 {
    match tier {
        Tier::Abs => joint_ccdf_abs(r, cfg),
        Tier::Tbs => joint_ccdf_tbs(r, cfg),
    }
}

/// Exact sampler of the three nearest ABS distances: drops `N` uniform points
/// on the disk and keeps the three closest.
#[derive(Debug, Clone, Copy)]
pub struct AbsSampler {
    n: usize,
    r_c: f64,
    gap: f64,
}

impl AbsSampler {
    pub fn new(cfg: &ValidatedConfig) -> Self {
        Self {
            n: cfg.n_abs(),
            r_c: cfg.r_c(),
            gap: cfg.gap(),
        }
    }
}

fn insert_top3(best: &mut [f64; 3], x: f64) {
    if x < best[2] {
        if x < best[1] {
            best[2] = best[1];
            if x < best[0] {
                best[1] = best[0];
                best[0] = x;
            } else {
                best[1] = x;
            }
        } else {
            best[2] = x;
        }
    }
}

impl TripleSampler for AbsSampler {
    fn sample_triple(&self, rng: &mut StreamRng) -> [f64; 3] {
        // squared horizontal radius of a uniform disk point is uniform on [0, r_C²]
        let mut best = [f64::INFINITY; 3];
        for _ in 0..self.n {
            let u: f64 = rng.random();
            insert_top3(&mut best, u);
        }
        let rc2 = self.r_c * self.r_c;
        let g2 = self.gap * self.gap;
        best.map(|u| (u * rc2 + g2).sqrt())
    }
}

/// Exact sampler of the three nearest TBS distances via exponential
/// increments of the mean measure.
#[derive(Debug, Clone, Copy)]
pub struct TbsSampler {
    pi_lambda: f64,
    h: f64,
}

impl TbsSampler {
    pub fn new(cfg: &ValidatedConfig) -> Self {
        Self {
            pi_lambda: PI * cfg.lambda(),
            h: cfg.h(),
        }
    }
}

impl TripleSampler for TbsSampler {
    fn sample_triple(&self, rng: &mut StreamRng) -> [f64; 3] {
        let mut r2 = self.h * self.h;
        std::array::from_fn(|_| {
            let e: f64 = Exp1.sample(rng);
            r2 += e / self.pi_lambda;
            r2.sqrt()
        })
    }
}

pub fn sample_ordered_abs(cfg: &ValidatedConfig, rng: &mut StreamRng) -> OrderedDistances {
    OrderedDistances::new_unchecked(AbsSampler::new(cfg).sample_triple(rng), Tier::Abs)
}

pub fn sample_ordered_tbs(cfg: &ValidatedConfig, rng: &mut StreamRng) -> OrderedDistances {
    OrderedDistances::new_unchecked(TbsSampler::new(cfg).sample_triple(rng), Tier::Tbs)
}

/// Sampler for either tier.
#[derive(Debug, Clone, Copy)]
pub enum TierSampler {
    Abs(AbsSampler),
    Tbs(TbsSampler),
}

impl TierSampler {
    pub fn new(tier: Tier, cfg: &ValidatedConfig) -> Self {
        match tier {
            Tier::Abs => TierSampler::Abs(AbsSampler::new(cfg)),
            Tier::Tbs => TierSampler::Tbs(TbsSampler::new(cfg)),
        }
    }
}

impl TripleSampler for TierSampler {
    fn sample_triple(&self, rng: &mut StreamRng) -> [f64; 3] {
        match self {
            TierSampler::Abs(s) => s.sample_triple(rng),
            TierSampler::Tbs(s) => s.sample_triple(rng),
        }
    }
}

/// Marginal density of the n-th nearest station of `tier`.
pub fn pdf_nth(tier: Tier, r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    match tier {
        Tier::Abs => pdf_abs_nth(r, n, cfg),
        Tier::Tbs => pdf_tbs_nth(r, n, cfg),
    }
}

/// Marginal CDF of the n-th nearest station of `tier`.
pub fn cdf_nth(tier: Tier, r: f64, n: usize, cfg: &ValidatedConfig) -> Result<f64, DistError> {
    match tier {
        Tier::Abs => cdf_abs_nth(r, n, cfg),
        Tier::Tbs => cdf_tbs_nth(r, n, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;
    use crate::numerics::{integrate_1d, QuadratureSpec, RngStream};

    fn cfg() -> ValidatedConfig {
        NetworkConfig::reference().validate().unwrap()
    }

    #[test]
    fn abs_nearest_special_case() {
        let c = cfg();
        for i in 0..=1000 {
            let r = c.gap() + (c.r_max() - c.gap()) * i as f64 / 1000.0;
            let a = pdf_abs_nth(r, 1, &c).unwrap();
            assert!((a - pdf_abs_nearest(r, &c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn tbs_nearest_special_case() {
        let c = cfg();
        for i in 0..=1000 {
            let r = c.h() + 2000.0 * i as f64 / 1000.0;
            assert!((pdf_tbs_nth(r, 1, &c).unwrap() - pdf_tbs_nearest(r, &c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn binomial_sum_matches_compact() {
        let c = cfg();
        for n in 1..=c.n_abs() {
            for i in 0..=200 {
                let r = c.gap() + (c.r_max() - c.gap()) * i as f64 / 200.0;
                let a = pdf_abs_nth(r, n, &c).unwrap();
                let b = pdf_abs_nth_binomial_sum(r, n, &c).unwrap();
                assert!((a - b).abs() <= 1e-10, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn densities_normalize() {
        let c = cfg();
        let q = QuadratureSpec::default();
        for n in 1..=3 {
            let m =
                integrate_1d(|r| pdf_abs_nth(r, n, &c).unwrap(), c.gap(), c.r_max(), &q).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "abs n={n}: {m}");
            let hi = tbs_truncation_radius(n, 1e-12, &c);
            let m = integrate_1d(|r| pdf_tbs_nth(r, n, &c).unwrap(), c.h(), hi, &q).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "tbs n={n}: {m}");
            let m =
                integrate_1d(|r| pdf_tbs_nth(r, n, &c).unwrap(), c.h(), f64::INFINITY, &q).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "tbs-inf n={n}: {m}");
        }
    }

    #[test]
    fn support_and_errors() {
        let c = cfg();
        assert_eq!(pdf_abs_nth(c.gap() - 1.0, 2, &c).unwrap(), 0.0);
        assert_eq!(pdf_tbs_nth(c.h(), 1, &c).unwrap(), 0.0);
        assert!(pdf_abs_nth(300.0, 0, &c).is_err());
        assert!(pdf_abs_nth(300.0, 21, &c).is_err());
        assert!(joint_pdf_abs_general(&[300.0, 250.0, 400.0], &c).is_err());
        assert!(OrderedDistances::new([300.0, 250.0, 400.0], Tier::Abs, &c).is_err());
        assert!(OrderedDistances::new([100.0, 250.0, 400.0], Tier::Abs, &c).is_err());
        assert!(OrderedDistances::new([200.0, 250.0, 400.0], Tier::Abs, &c).is_ok());
    }

    #[test]
    fn cdf_matches_integrated_pdf() {
        let c = cfg();
        let q = QuadratureSpec::default();
        for n in 1..=3 {
            let r = 450.0;
            let i = integrate_1d(|x| pdf_abs_nth(x, n, &c).unwrap(), c.gap(), r, &q).unwrap();
            assert!((i - cdf_abs_nth(r, n, &c).unwrap()).abs() < 1e-9);
            let i = integrate_1d(|x| pdf_tbs_nth(x, n, &c).unwrap(), c.h(), r, &q).unwrap();
            assert!((i - cdf_nth(Tier::Tbs, r, n, &c).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn tbs_conditional_factorization() {
        let c = cfg();
        let mut rng = RngStream::new(11, 0).rng();
        for _ in 0..200 {
            let d = sample_ordered_tbs(&c, &mut rng);
            let joint = joint_pdf_tbs(&d, &c).unwrap();
            let two = joint_pdf_tbs_general(&d.r[..2], &c).unwrap();
            let cond = conditional_pdf_tbs(d.r[2], d.r[1], &c);
            assert!((joint / two - cond).abs() <= 1e-12 * cond.max(1e-300));
        }
    }

    #[test]
    fn samplers_stay_in_support() {
        let c = cfg();
        let mut rng = RngStream::new(12, 0).rng();
        for _ in 0..10_000 {
            let a = sample_ordered_abs(&c, &mut rng);
            assert!(
                a.r[0] >= c.gap() && a.r[2] <= c.r_max() && a.r[0] <= a.r[1] && a.r[1] <= a.r[2]
            );
            let t = sample_ordered_tbs(&c, &mut rng);
            assert!(t.r[0] >= c.h() && t.r[0] <= t.r[1] && t.r[1] <= t.r[2]);
        }
    }

    #[test]
    fn ccdf_limits() {
        let c = cfg();
        // all three at the inner edge: joint CDF is zero
        assert!((joint_ccdf_tbs(&[c.h(); 3], &c) - 1.0).abs() < 1e-15);
        assert!((joint_ccdf_abs(&[c.gap(); 3], &c) - 1.0).abs() < 1e-15);
        // everything far away: joint CDF one
        assert!(joint_ccdf_tbs(&[1e5; 3], &c) < 1e-12);
        assert!(joint_ccdf_abs(&[c.r_max(); 3], &c) < 1e-15);
    }

    #[test]
    fn ccdf_matches_simulation() {
        let c = cfg();
        let mut rng = RngStream::new(13, 0).rng();
        let pt = [180.0, 260.0, 300.0];
        let pa = [320.0, 420.0, 500.0];
        let n = 200_000;
        let (mut ht, mut ha) = (0usize, 0usize);
        for _ in 0..n {
            let t = sample_ordered_tbs(&c, &mut rng).r;
            if !(t[0] <= pt[0] && t[1] <= pt[1] && t[2] <= pt[2]) {
                ht += 1;
            }
            let a = sample_ordered_abs(&c, &mut rng).r;
            if !(a[0] <= pa[0] && a[1] <= pa[1] && a[2] <= pa[2]) {
                ha += 1;
            }
        }
        let (et, ea) = (ht as f64 / n as f64, ha as f64 / n as f64);
        let (xt, xa) = (joint_ccdf_tbs(&pt, &c), joint_ccdf_abs(&pa, &c));
        assert!(
            (et - xt).abs() < 4.0 * (xt * (1.0 - xt) / n as f64).sqrt() + 1e-4,
            "{et} {xt}"
        );
        assert!(
            (ea - xa).abs() < 4.0 * (xa * (1.0 - xa) / n as f64).sqrt() + 1e-4,
            "{ea} {xa}"
        );
    }

    proptest::proptest! {
        #[test]
        fn joint_vanishes_off_simplex(a in 100.0f64..2000.0, b in 100.0f64..2000.0, cc in 100.0f64..2000.0) {
            let c = cfg();
            let mut v = [a, b, cc];
            v.sort_by(f64::total_cmp);
            let ja = joint_pdf_abs_general(&v, &c).unwrap();
            if v[0] < c.gap() || v[2] > c.r_max() {
                proptest::prop_assert_eq!(ja, 0.0);
            } else {
                proptest::prop_assert!(ja >= 0.0);
            }
            let jt = joint_pdf_tbs_general(&v, &c).unwrap();
            if v[0] <= c.h() {
                proptest::prop_assert_eq!(jt, 0.0);
            }
            if a > b {
                proptest::prop_assert!(joint_pdf_tbs_general(&[a, b, cc], &c).is_err());
            }
        }
    }
}
