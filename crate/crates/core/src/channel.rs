//! LoS probability, Nakagami-m fading and power-law attenuation.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::model::{Environment, LinkState};
use crate::numerics::{reg_lower_gamma, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("Nakagami shape must be >= 0.5 and mean power > 0 (m={m}, omega={omega})")]
    Fading { m: f64, omega: f64 },
    #[error("link distance must be positive, got {0}")]
    Distance(f64),
}

/// Probability of a line-of-sight link at horizontal distance `z` for a user
/// `h_rel` above the station plane, clamped to `[0, 1]`.
pub fn los_probability(z: f64, h_rel: f64, env: Environment) -> f64 {
    let delta = if z <= 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        (h_rel / z).atan()
    };
    (-env.a * (-env.b * delta).exp() + env.c).clamp(0.0, 1.0)
}

pub fn nlos_probability(z: f64, h_rel: f64, env: Environment) -> f64 {
    1.0 - los_probability(z, h_rel, env)
}

/// Probability of `state` at horizontal distance `z`.
pub fn state_probability(state: LinkState, z: f64, h_rel: f64, env: Environment) -> f64 {
    match state {
        LinkState::Los => los_probability(z, h_rel, env),
        LinkState::Nlos => nlos_probability(z, h_rel, env),
    }
}

/// Nakagami-m parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    m: f64,
    omega: f64,
    power: Gamma<f64>,
}

impl FadingParams {
    pub fn new(m: f64, omega: f64) -> Result<Self, ChannelError> {
        if !(m >= 0.5 && m.is_finite() && omega > 0.0 && omega.is_finite()) {
            return Err(ChannelError::Fading { m, omega });
        }
        let power = Gamma::new(m, omega / m).map_err(|_| ChannelError::Fading { m, omega })?;
        Ok(Self { m, omega, power })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Channel power gain `|H|²`, Gamma(m, Ω/m).
    pub fn sample_power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng)
    }

    /// CDF of the power gain.
    pub fn power_cdf(&self, g: f64) -> Result<f64, NumericsError> {
        reg_lower_gamma(self.m, (self.m * g / self.omega).max(0.0))
    }

    /// CDF of the amplitude `|H|`.
    pub fn amplitude_cdf(&self, x: f64) -> Result<f64, NumericsError> {
        self.power_cdf(x * x)
    }
}

/// Nakagami amplitude as the square root of a Gamma(m, Ω/m) draw.
pub fn sample_nakagami_amplitude<R: Rng + ?Sized>(params: &FadingParams, rng: &mut R) -> f64 {
    params.sample_power(rng).sqrt()
}

/// Power attenuation `r^-α`.
pub fn attenuation_power(r: f64, alpha: f64) -> Result<f64, ChannelError> {
    if !(r > 0.0) {
        return Err(ChannelError::Distance(r));
    }
    Ok(r.powf(-alpha))
}

/// Amplitude attenuation `r^(-α/2)`.
pub fn attenuation_amplitude(r: f64, alpha: f64) -> Result<f64, ChannelError> {
    if !(r > 0.0) {
        return Err(ChannelError::Distance(r));
    }
    Ok(r.powf(-0.5 * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::stats::ks_statistic;
    use crate::numerics::{gamma_fn, RngStream};

    #[test]
    fn suburban_limits() {
        let env = Environment::SUBURBAN;
        assert!(los_probability(1e12, 120.0, env) < 1e-6);
        let p0 = los_probability(0.0, 120.0, env);
        assert!((p0 - 1.0).abs() < 1e-4);
        assert_eq!(p0, 1.0 - (-6.581 * std::f64::consts::FRAC_PI_2).exp());
    }

    #[test]
    fn highrise_is_clamped() {
        let env = Environment::HIGHRISE_URBAN;
        let raw = -1.124 * (-0.049 * std::f64::consts::FRAC_PI_2).exp() + 1.024;
        assert_eq!(los_probability(0.0, 50.0, env), raw.clamp(0.0, 1.0));
        for z in [0.0, 1.0, 100.0, 1e4] {
            let p = los_probability(z, 50.0, env);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn attenuation_values() {
        assert_eq!(attenuation_power(1.0, 2.7).unwrap(), 1.0);
        assert!((attenuation_power(200.0, 2.0).unwrap() - 2.5e-5).abs() < 1e-18);
        assert!(attenuation_power(0.0, 2.0).is_err());
        assert!(attenuation_amplitude(-1.0, 2.0).is_err());
    }

    #[test]
    fn rejects_bad_fading() {
        assert!(FadingParams::new(0.4, 1.0).is_err());
        assert!(FadingParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn rayleigh_power_is_exponential() {
        let p = FadingParams::new(1.0, 2.0).unwrap();
        let mut r = RngStream::new(3, 0).rng();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_nakagami_amplitude(&p, &mut r).powi(2))
            .collect();
        let ks = ks_statistic(&xs, |g| 1.0 - (-g / 2.0).exp());
        assert!(ks < 0.005, "ks={ks}");
    }

    #[test]
    fn sample_moments() {
        let mut r = RngStream::new(4, 0).rng();
        for &(m, om) in &[(0.5, 1.0), (2.0, 1.0), (1.0, 3.0), (4.5, 0.7)] {
            let p = FadingParams::new(m, om).unwrap();
            let n = 1_000_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let a = sample_nakagami_amplitude(&p, &mut r);
                s1 += a;
                s2 += a * a;
            }
            assert!((s2 / n as f64 / om - 1.0).abs() < 0.005, "m={m}");
            let mean = gamma_fn(m + 0.5) / gamma_fn(m) * (om / m).sqrt();
            assert!((s1 / n as f64 / mean - 1.0).abs() < 0.005, "m={m}");
        }
    }

    #[test]
    fn amplitude_ks() {
        for &(m, om) in &[(2.0, 1.0), (0.7, 1.3)] {
            let p = FadingParams::new(m, om).unwrap();
            let mut r = RngStream::new(5, 1).rng();
            let xs: Vec<f64> = (0..100_000)
                .map(|_| sample_nakagami_amplitude(&p, &mut r))
                .collect();
            let ks = ks_statistic(&xs, |x| p.amplitude_cdf(x).unwrap());
            assert!(ks < 0.005, "m={m} ks={ks}");
        }
    }

    proptest::proptest! {
        #[test]
        fn los_nonincreasing(z in 0.0f64..5e3, dz in 0.0f64..500.0, h in 1.0f64..300.0,
                             a in 0.0f64..2.0, b in 0.0f64..10.0, c in 0.01f64..2.0) {
            let env = Environment { a, b, c };
            proptest::prop_assert!(los_probability(z + dz, h, env) <= los_probability(z, h, env) + 1e-15);
        }

        #[test]
        fn power_is_amplitude_squared(r in 1e-2f64..1e4, alpha in 2.0f64..6.0) {
            let p = attenuation_power(r, alpha).unwrap();
            let a = attenuation_amplitude(r, alpha).unwrap();
            proptest::prop_assert!((p - a * a).abs() <= 1e-12 * p);
        }
    }
}
