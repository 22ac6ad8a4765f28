//! Seeded random streams and the primitive samplers every stochastic module
//! draws from.
//!
//! A stream is identified by `(seed, stream_id)`; replica `r` of an
//! experiment uses `stream_id = r`, so replicas can be farmed out to any
//! number of workers and still reproduce bit for bit.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngState {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    /// Uniform integer in `lo..hi`.
    pub fn index(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub(crate) fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Mixes an experiment-specific salt into a base seed so that unrelated
/// experiments sharing a user seed do not share streams.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

pub fn sample_exponential(rng: &mut RngState, rate: f64) -> Result<f64> {
    check_positive("rate", rate)?;
    Ok(rng.exp1() / rate)
}

/// Exact Gamma(shape, 1) sampler (Marsaglia–Tsang, with the `U^{1/shape}`
/// boost below shape 1).
#[derive(Clone, Copy, Debug)]
pub struct GammaSampler {
    dist: Gamma<f64>,
}

impl GammaSampler {
    pub fn new(shape: f64) -> Result<Self> {
        check_positive("shape", shape)?;
        let dist = Gamma::new(shape, 1.0).map_err(|e| Error::param(format!("gamma: {e}")))?;
        Ok(GammaSampler { dist })
    }

    pub fn sample(&self, rng: &mut RngState) -> f64 {
        self.dist.sample(&mut rng.inner)
    }
}

pub fn sample_gamma(rng: &mut RngState, shape: f64) -> Result<f64> {
    Ok(GammaSampler::new(shape)?.sample(rng))
}

/// Arrival times in `(0, t_max]` of a unit-rate Poisson process.
pub fn unit_poisson_arrivals(rng: &mut RngState, t_max: f64) -> Result<Vec<f64>> {
    check_positive("t_max", t_max)?;
    let mut arrivals = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.exp1();
        if t > t_max {
            return Ok(arrivals);
        }
        arrivals.push(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = RngState::new(42, 0);
        let mut b = RngState::new(42, 0);
        let xa = [
            sample_exponential(&mut a, 1.0).unwrap(),
            sample_exponential(&mut a, 1.0).unwrap(),
        ];
        let xb = [
            sample_exponential(&mut b, 1.0).unwrap(),
            sample_exponential(&mut b, 1.0).unwrap(),
        ];
        assert_eq!(xa[0].to_bits(), xb[0].to_bits());
        assert_eq!(xa[1].to_bits(), xb[1].to_bits());
    }

    #[test]
    fn streams_differ() {
        let mut a = RngState::new(42, 0);
        let mut b = RngState::new(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = RngState::new(1, 0);
        assert!(sample_exponential(&mut rng, 0.0).is_err());
        assert!(sample_exponential(&mut rng, -1.0).is_err());
        assert!(sample_exponential(&mut rng, f64::NAN).is_err());
        assert!(sample_exponential(&mut rng, f64::INFINITY).is_err());
        assert!(sample_gamma(&mut rng, 0.0).is_err());
        assert!(unit_poisson_arrivals(&mut rng, 0.0).is_err());
    }

    #[test]
    fn exponential_moments() {
        let mut rng = RngState::new(7, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_exponential(&mut rng, 1.0).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");

        let mut rng = RngState::new(8, 0);
        let above = (0..n)
            .filter(|_| sample_exponential(&mut rng, 2.0).unwrap() > 0.5)
            .count();
        let frac = above as f64 / n as f64;
        assert!((frac - (-1.0f64).exp()).abs() < 0.005, "survival {frac}");
    }

    #[test]
    fn gamma_moments() {
        let n = 1_000_000;
        let mut rng = RngState::new(9, 0);
        let g = GammaSampler::new(3.0).unwrap();
        let mean = (0..n).map(|_| g.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 0.01, "mean {mean}");

        let g = GammaSampler::new(2.5).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.5).abs() < 0.05, "var {var}");
    }

    #[test]
    fn small_shape_gamma_is_positive() {
        let mut rng = RngState::new(10, 0);
        let g = GammaSampler::new(0.3).unwrap();
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x >= 0.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn poisson_count_mean() {
        let replicas = 100_000;
        let total: usize = (0..replicas)
            .map(|r| {
                unit_poisson_arrivals(&mut RngState::new(11, r), 10.0)
                    .unwrap()
                    .len()
            })
            .sum();
        let mean = total as f64 / replicas as f64;
        assert!((mean - 10.0).abs() < 0.05, "mean count {mean}");
    }

    #[test]
    fn poisson_arrivals_increase_and_stay_in_range() {
        let mut rng = RngState::new(12, 0);
        let ts = unit_poisson_arrivals(&mut rng, 50.0).unwrap();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!(ts.iter().all(|&t| t > 0.0 && t <= 50.0));
    }

    #[test]
    fn tiny_horizon_is_mostly_empty() {
        let replicas = 20_000;
        let empty = (0..replicas)
            .filter(|&r| {
                unit_poisson_arrivals(&mut RngState::new(13, r), 1e-4)
                    .unwrap()
                    .is_empty()
            })
            .count();
        let frac = empty as f64 / replicas as f64;
        // P(empty) = e^{-1e-4}; the binomial sd at this size is ~7e-5.
        assert!(
            (frac - (-1e-4f64).exp()).abs() < 5e-4,
            "void fraction {frac}"
        );
    }
}
