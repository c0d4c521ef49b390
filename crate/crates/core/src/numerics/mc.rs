use rayon::prelude::*;

use super::{NumericsError, RngStream, StreamRng};

/// Trials below this count are rejected by the MC drivers.
pub const MIN_TRIALS: usize = 100;

/// Fixed chunk size; chunk `i` always draws from `rng.substream(i)` so results
/// do not depend on the number of worker threads.
pub const MC_CHUNK: usize = 2048;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Draws an ordered distance triple `r1 <= r2 <= r3`.
pub trait TripleSampler: Sync {
    fn sample_triple(&self, rng: &mut StreamRng) -> [f64; 3];
}

/// Count / mean / centred second moment, merged with Chan's formula.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> McEstimate {
        McEstimate {
            estimate: self.mean,
            std_error: self.std_error(),
            trials: self.n,
        }
    }

    /// Deterministic pairwise tree merge.
    pub fn merge_all(parts: &[Self]) -> Self {
        match parts.len() {
            0 => Self::default(),
            1 => parts[0],
            n => {
                let (l, r) = parts.split_at(n / 2);
                Self::merge_all(l).merge(&Self::merge_all(r))
            }
        }
    }
}

/// Pairwise summation; identical order for identical input.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Splits `trials` into fixed-size chunks, runs `f(rng, count)` for each in
/// parallel and returns the per-chunk results in chunk order.
pub fn chunked_map<T, F>(trials: usize, rng: &RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync,
{
    let chunks = trials.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let count = MC_CHUNK.min(trials - i * MC_CHUNK);
            let mut r = rng.substream(i as u64).rng();
            f(&mut r, count)
        })
        .collect()
}

/// Estimates `E[g(R1, R2, R3)]` by sampling triples from `sampler`.
pub fn integrate_ordered_triple_mc<G, S>(
    g: G,
    sampler: &S,
    trials: usize,
    rng: &RngStream,
) -> Result<McEstimate, NumericsError>
where
    G: Fn(f64, f64, f64) -> f64 + Sync,
    S: TripleSampler + ?Sized,
{
    if trials < MIN_TRIALS {
        return Err(NumericsError::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        });
    }
    let parts = chunked_map(trials, rng, |r, count| {
        let mut acc = MeanAccumulator::default();
        for _ in 0..count {
            let [r1, r2, r3] = sampler.sample_triple(r);
            acc.push(g(r1, r2, r3));
        }
        acc
    });
    Ok(MeanAccumulator::merge_all(&parts).estimate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    struct Uniform3;
    impl TripleSampler for Uniform3 {
        fn sample_triple(&self, rng: &mut StreamRng) -> [f64; 3] {
            let mut v = [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ];
            v.sort_by(f64::total_cmp);
            v
        }
    }

    #[test]
    fn constant_integrand() {
        let e = integrate_ordered_triple_mc(|_, _, _| 1.0, &Uniform3, 5000, &RngStream::new(1, 0))
            .unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn rejects_few_trials() {
        let r = integrate_ordered_triple_mc(|_, _, _| 1.0, &Uniform3, 99, &RngStream::new(1, 0));
        assert!(matches!(r, Err(NumericsError::TooFewTrials { .. })));
    }

    #[test]
    fn order_statistic_mean() {
        // max of three uniforms has mean 3/4
        let e =
            integrate_ordered_triple_mc(|_, _, r3| r3, &Uniform3, 100_000, &RngStream::new(2, 0))
                .unwrap();
        assert!((e.estimate - 0.75).abs() < 4.0 * e.std_error);
    }

    #[test]
    fn independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    integrate_ordered_triple_mc(
                        |a, b, c| a * b + c,
                        &Uniform3,
                        50_000,
                        &RngStream::new(9, 1),
                    )
                    .unwrap()
                })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut seq = MeanAccumulator::default();
        xs.iter().for_each(|&x| seq.push(x));
        let parts: Vec<MeanAccumulator> = xs
            .chunks(77)
            .map(|c| {
                let mut a = MeanAccumulator::default();
                c.iter().for_each(|&x| a.push(x));
                a
            })
            .collect();
        let m = MeanAccumulator::merge_all(&parts);
        assert_eq!(m.n, seq.n);
        assert!((m.mean - seq.mean).abs() < 1e-12);
        assert!((m.variance() - seq.variance()).abs() < 1e-10);
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-9);
    }
}
