use vhetnet::coverage::{
    laplace_interference, laplace_sqrt_interference, laplace_sqrt_moment, laplace_sqrt_moment_fd,
};
use vhetnet::numerics::{chunked_map, MeanAccumulator};
use vhetnet::sim::InterferenceField;
use vhetnet::{NetworkConfig, QuadratureSpec, RngStream, Tier, ValidatedConfig};

fn cfg() -> ValidatedConfig {
    NetworkConfig::reference().validate().unwrap()
}

/// Mean of `f(I)` over `n` simulated fields.
fn field_mean(
    c: &ValidatedConfig,
    tier: Tier,
    r3: f64,
    n: usize,
    seed: u64,
    f: impl Fn(f64) -> f64 + Sync,
) -> (f64, f64) {
    let field = InterferenceField::new(c).unwrap();
    let parts = chunked_map(n, &RngStream::new(seed, 0), |r, count| {
        let mut a = MeanAccumulator::default();
        for _ in 0..count {
            a.push(f(field.sample(tier, r3, r)));
        }
        a
    });
    let m = MeanAccumulator::merge_all(&parts);
    (m.mean, m.std_error())
}

#[test]
fn laplace_matches_field_simulation() {
    let c = cfg();
    let spec = QuadratureSpec::default();
    for (tier, r3) in [(Tier::Abs, 330.0), (Tier::Tbs, 260.0)] {
        let field = InterferenceField::new(&c).unwrap();
        let (mean_i, _) = field_mean(&c, tier, r3, 20_000, 1, |i| i);
        for scale in [0.3, 1.0, 3.0] {
            let u = scale / mean_i;
            let exact = laplace_interference(u, r3, tier, &c, &spec).unwrap();
            let (mc, se) = field_mean(&c, tier, r3, 100_000, 2, |i| (-u * i).exp());
            println!("{tier} u*E[I]={scale}: quad={exact:.5} mc={mc:.5} se={se:.1e}");
            // the simulator replaces far-field fluctuation by its mean
            let bias = 0.5 * u * u * field.window().far_field_std.powi(2);
            assert!((exact - mc).abs() <= 3.0 * se + bias, "{tier} u={u}");
        }
    }
}

#[test]
fn sqrt_laplace_matches_field_simulation() {
    let c = cfg();
    let spec = QuadratureSpec::default();
    for (tier, r3) in [(Tier::Abs, 330.0), (Tier::Tbs, 260.0)] {
        let (m, _) = field_mean(&c, tier, r3, 20_000, 3, |i| i.sqrt());
        for scale in [0.5, 2.0] {
            let s = scale / m;
            let exact = laplace_sqrt_interference(s, r3, tier, &c, &spec).unwrap();
            let (mc, se) = field_mean(&c, tier, r3, 100_000, 4, |i| (-s * i.sqrt()).exp());
            println!("{tier} s*E[sqrt I]={scale}: quad={exact:.5} mc={mc:.5} se={se:.1e}");
            assert!((exact - mc).abs() <= 3.0 * se + 1e-3, "{tier} s={s}");
        }
        let big = laplace_sqrt_interference(1e4 / m, r3, tier, &c, &spec).unwrap();
        assert!(big < 1e-6);
    }
}

#[test]
fn moments_match_finite_differences() {
    let c = cfg();
    let spec = QuadratureSpec::default();
    let (tier, r3) = (Tier::Tbs, 260.0);
    let (m, _) = field_mean(&c, tier, r3, 20_000, 5, |i| i.sqrt());
    let s = 0.5 / m;
    let rng = RngStream::new(6, 0);
    for k in 0..=2u32 {
        let mc = laplace_sqrt_moment(s, k, r3, tier, &c, 100_000, &rng).unwrap();
        let fd = laplace_sqrt_moment_fd(s, k, r3, tier, &c, &spec, 0.05 * s).unwrap();
        println!(
            "k={k}: mc={:.6e} se={:.1e} fd={fd:.6e}",
            mc.estimate, mc.std_error
        );
        let scale = m.powi(k as i32);
        assert!(
            (mc.estimate - fd).abs() <= (3.0 * mc.std_error).max(1e-3 * scale) + 2e-3 * scale,
            "k={k}"
        );
    }
    let far = laplace_sqrt_moment(1e3 / m, 2, r3, tier, &c, 1000, &rng).unwrap();
    assert!(far.estimate < 1e-12 * m * m);
}
