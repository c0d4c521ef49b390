use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Tolerances for adaptive 1-D quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self, NumericsError> {
        let s = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(NumericsError::InvalidSpec(format!(
                "tolerances must be positive (abs_tol={}, rel_tol={})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericsError::InvalidSpec(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_508_386,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = f(c);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = (WGK[10] * fc).abs();
    for k in 0..10 {
        let dx = hw * XGK[k];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv1[k] = f1;
        fv2[k] = f2;
        resk += WGK[k] * (f1 + f2);
        resabs += WGK[k] * (f1.abs() + f2.abs());
        if k % 2 == 1 {
            resg += WG[k / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for k in 0..10 {
        resasc += WGK[k] * ((fv1[k] - reskh).abs() + (fv2[k] - reskh).abs());
    }
    let value = resk * hw;
    resabs *= hw.abs();
    resasc *= hw.abs();
    let mut error = ((resk - resg) * hw).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(NumericsError::Domain {
            func: "integrate_1d",
            detail: format!("integrand not finite on [{a}, {b}]"),
        });
    }
    Ok((value, error))
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (v, e) = gk21(f, w[0], w[1])?;
        total += v;
        total_err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut frozen_err = 0.0;
    let mut subdivisions = 0;
    loop {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk21(f, worst.a, mid)?;
        let (v2, e2) = gk21(f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        subdivisions += 1;
    }
    // re-sum to drop accumulated cancellation in the running totals
    let (v, e): (f64, f64) = heap
        .iter()
        .fold((0.0, frozen_err), |(v, e), s| (v + s.value, e + s.error));
    if e <= spec.abs_tol.max(spec.rel_tol * v.abs()) {
        return Ok(v);
    }
    Err(NumericsError::NoConvergence {
        subdivisions,
        estimate: v,
        error: e,
    })
}

/// Adaptive Gauss–Kronrod (10/21) integration of `f` over `[lo, hi]`.
///
/// `hi` may be `+∞`; the half-line is mapped onto `[0, 1)` by
/// `x = lo + t / (1 - t)`.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    spec.check()?;
    if !lo.is_finite() || hi.is_nan() || hi < lo {
        return Err(NumericsError::Domain {
            func: "integrate_1d",
            detail: format!("need finite lo <= hi, got [{lo}, {hi}]"),
        });
    }
    if hi == lo {
        return Ok(0.0);
    }
    if hi.is_infinite() {
        let g = |t: f64| {
            let s = 1.0 - t;
            f(lo + t / s) / (s * s)
        };
        let breaks = [0.0, 0.5, 0.9, 0.99, 0.999, 0.9999, 0.99999, 1.0];
        return adaptive(&g, &breaks, spec);
    }
    adaptive(&f, &[lo, hi], spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn exponential_half_line() {
        let v = integrate_1d(|x| (-x).exp(), 0.0, f64::INFINITY, &spec()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn polynomial() {
        let v = integrate_1d(|x| x * x, 0.0, 1.0, &spec()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn algebraic_tail() {
        let v = integrate_1d(|x| 1.0 / (x * x), 1.0, f64::INFINITY, &spec()).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
        let v = integrate_1d(|x: f64| x.powf(-1.7), 1.0, f64::INFINITY, &spec()).unwrap();
        assert!((v - 1.0 / 0.7).abs() < 1e-6);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate_1d(|x: f64| x.powf(-0.5), 0.0, 1.0, &spec()).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }

    #[test]
    fn peaked_far_from_origin() {
        let v = integrate_1d(
            |x: f64| (-(x - 300.0).powi(2) / 50.0).exp(),
            0.0,
            f64::INFINITY,
            &spec(),
        )
        .unwrap();
        assert!((v - (50.0 * std::f64::consts::PI).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn non_convergence_reported() {
        let tight = QuadratureSpec::new(1e-15, 1e-15, 2).unwrap();
        let r = integrate_1d(|x: f64| x.sin().abs(), 0.0, 100.0, &tight);
        assert!(matches!(r, Err(NumericsError::NoConvergence { .. })));
    }

    #[test]
    fn bad_inputs() {
        assert!(QuadratureSpec::new(0.0, 1e-7, 10).is_err());
        assert!(integrate_1d(|x| x, 1.0, 0.0, &spec()).is_err());
        assert_eq!(integrate_1d(|x| x, 1.0, 1.0, &spec()).unwrap(), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn polynomial_antiderivatives(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c3 in -3.0f64..3.0, a in -2.0f64..2.0, w in 0.01f64..4.0) {
            let b = a + w;
            let f = |x: f64| c0 + c1 * x + c3 * x * x * x;
            let anti = |x: f64| c0 * x + c1 * x * x / 2.0 + c3 * x.powi(4) / 4.0;
            let v = integrate_1d(f, a, b, &spec()).unwrap();
            proptest::prop_assert!((v - (anti(b) - anti(a))).abs() < 1e-9);
        }

        #[test]
        fn exponential_antiderivatives(k in 0.1f64..5.0, a in 0.0f64..3.0) {
            let v = integrate_1d(|x: f64| (-k * x).exp(), a, f64::INFINITY, &spec()).unwrap();
            let exact = (-k * a).exp() / k;
            proptest::prop_assert!((v - exact).abs() < 1e-9_f64.max(1e-7 * exact));
        }
    }
}
