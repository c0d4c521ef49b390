use statrs::function::gamma as sg;

use super::NumericsError;

fn check_shape(func: &'static str, nu: f64, x: f64) -> Result<(), NumericsError> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(NumericsError::Domain {
            func,
            detail: format!("shape must be positive and finite, got {nu}"),
        });
    }
    if !(x >= 0.0) {
        return Err(NumericsError::Domain {
            func,
            detail: format!("argument must be nonnegative, got {x}"),
        });
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(nu, x) = γ(nu, x) / Γ(nu)`.
pub fn reg_lower_gamma(nu: f64, x: f64) -> Result<f64, NumericsError> {
    check_shape("reg_lower_gamma", nu, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(sg::gamma_lr(nu, x).clamp(0.0, 1.0))
}

/// Regularized upper incomplete gamma `Q(nu, x) = 1 - P(nu, x)`.
pub fn reg_upper_gamma(nu: f64, x: f64) -> Result<f64, NumericsError> {
    check_shape("reg_upper_gamma", nu, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(sg::gamma_ur(nu, x).clamp(0.0, 1.0))
}

pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

pub fn gamma_fn(x: f64) -> f64 {
    sg::gamma(x)
}

/// `n!` as a float; exact while the result fits in 53 bits.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient by the multiplicative formula (exact for moderate `n`).
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: power series P(a,x) = x^a e^-x / Γ(a+1) Σ x^k / ((a+1)...(a+k)).
    fn series_oracle(a: f64, x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= x / (a + k);
            sum += term;
            k += 1.0;
        }
        (a * x.ln() - x - ln_gamma(a + 1.0)).exp() * sum
    }

    #[test]
    fn exponential_case() {
        for &x in &[0.0, 0.1, 1.0, 3.0, 20.0] {
            let p = reg_lower_gamma(1.0, x).unwrap();
            assert!((p - (1.0 - (-x as f64).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(reg_lower_gamma(3.7, 0.0).unwrap(), 0.0);
        assert_eq!(reg_upper_gamma(3.7, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn matches_series_oracle() {
        let p = reg_lower_gamma(2.5, 3.1).unwrap();
        assert!((p - series_oracle(2.5, 3.1)).abs() < 1e-10);
        for &(a, x) in &[
            (0.5, 0.2),
            (7.3, 4.0),
            (1.7, 9.5),
            (30.0, 25.0),
            (0.9, 1e-3),
        ] {
            let p = reg_lower_gamma(a, x).unwrap();
            assert!((p - series_oracle(a, x)).abs() < 1e-10, "a={a} x={x}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(reg_lower_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_gamma(-1.0, 1.0).is_err());
        assert!(reg_lower_gamma(1.0, -0.5).is_err());
        assert!(reg_lower_gamma(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(20, 10), 184756.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 6), 0.0);
        assert_eq!(factorial(5), 120.0);
    }

    proptest::proptest! {
        #[test]
        fn lower_gamma_is_a_cdf(nu in 0.05f64..40.0, x in 0.0f64..80.0, dx in 0.0f64..5.0) {
            let p0 = reg_lower_gamma(nu, x).unwrap();
            let p1 = reg_lower_gamma(nu, x + dx).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&p0));
            proptest::prop_assert!(p1 + 1e-14 >= p0);
            let q = reg_upper_gamma(nu, x).unwrap();
            proptest::prop_assert!((p0 + q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tends_to_one() {
        assert!((reg_lower_gamma(4.0, 200.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(reg_lower_gamma(4.0, f64::INFINITY).unwrap(), 1.0);
    }
}
