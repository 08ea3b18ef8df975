use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};

/// Seeded, counter-based random stream. Identical seeds (and stream ids)
/// give identical sample sequences on every platform.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Independent sub-stream for batch `index`. Used to parallelise a run
    /// without changing its output.
    pub fn derive(&self, index: u64) -> Self {
        Self::with_stream(self.seed, self.stream.wrapping_mul(0x9E37_79B9).wrapping_add(index).wrapping_add(1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> Result<f64> {
        if !(std >= 0.0) {
            return Err(Error::domain("std", std, "standard deviation must be >= 0"));
        }
        if std == 0.0 {
            return Ok(mean);
        }
        Ok(mean + std * self.standard_normal())
    }

    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::domain("mean", mean, "Poisson mean must be finite and >= 0"));
        }
        if mean == 0.0 {
            return Ok(0);
        }
        if mean < 1.0 {
            return Ok(self.poisson_small(mean));
        }
        let dist = Poisson::new(mean).map_err(|_| Error::domain("mean", mean, "Poisson mean rejected"))?;
        Ok(dist.sample(&mut self.rng) as u64)
    }

    // Inversion; one uniform per draw, fast for the sub-photon means of
    // attenuated pulses.
    fn poisson_small(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u >= cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    /// Index drawn from a discrete distribution given by cumulative weights
    /// ending at 1.
    pub fn pick(&mut self, cumulative: &[f64]) -> usize {
        let u = self.uniform();
        cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_returns_mean() {
        let mut rng = RandomSource::new(1);
        assert_eq!(rng.gaussian(3.25, 0.0).unwrap(), 3.25);
        assert!(rng.gaussian(0.0, -1.0).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        for _ in 0..1000 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
            assert_eq!(a.poisson(0.3).unwrap(), b.poisson(0.3).unwrap());
        }
        let mut c = RandomSource::new(43);
        assert_ne!(a.uniform(), c.uniform());
    }

    #[test]
    fn derived_streams_differ() {
        let root = RandomSource::new(7);
        let mut x = root.derive(0);
        let mut y = root.derive(1);
        assert_ne!(x.uniform(), y.uniform());
        let mut x2 = root.derive(0);
        let mut x3 = RandomSource::new(7).derive(0);
        assert_eq!(x2.uniform(), x3.uniform());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RandomSource::new(2024);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = rng.gaussian(0.0, 1.0).unwrap();
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        // mean: 5/sqrt(n); variance: ±0.005 (≈3.5σ of sqrt(2/n)).
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn poisson_moments() {
        assert_eq!(RandomSource::new(0).poisson(0.0).unwrap(), 0);
        assert!(RandomSource::new(0).poisson(-0.1).is_err());
        let mut rng = RandomSource::new(99);
        let n = 1_000_000;
        let mut sum = 0u64;
        let mut zeros = 0u64;
        for _ in 0..n {
            let k = rng.poisson(0.5).unwrap();
            sum += k;
            zeros += (k == 0) as u64;
        }
        let mean = sum as f64 / n as f64;
        let p0 = zeros as f64 / n as f64;
        assert!((mean - 0.5).abs() < 0.004, "mean {mean}");
        assert!((p0 - (-0.5f64).exp()).abs() < 0.003, "p0 {p0}");
    }

    #[test]
    fn poisson_large_mean() {
        let mut rng = RandomSource::new(5);
        let n = 200_000;
        let mean = (0..n).map(|_| rng.poisson(20.0).unwrap()).sum::<u64>() as f64 / n as f64;
        assert!((mean - 20.0).abs() < 5.0 * (20.0f64 / n as f64).sqrt());
    }
}
