use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DistributionSpec, ModelError};

/// Name of the generator behind every seeded draw in this crate.
pub const SAMPLER_PRNG: &str = "ChaCha8Rng";

/// Ages at death, optionally tagged with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSample {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl LifetimeSample {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(ModelError::InvalidSampleValue(bad));
        }
        Ok(Self { values, seed: None })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Seed used by [`sample`], `None` for observed data.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Generator used by [`sample`], `None` for observed data.
    pub fn generator(&self) -> Option<&'static str> {
        self.seed.map(|_| SAMPLER_PRNG)
    }
}

/// Uniform draw on the open interval (0, 1) from the top 53 bits.
pub(crate) fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-transform sample of `n` lifetimes from `spec`.
///
/// Deterministic in `(spec, n, seed)`. Normal draws landing below age 0 are
/// redrawn, so the normal sample follows the law truncated to `[0, ∞)`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<LifetimeSample, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n);
    while values.len() < n {
        match spec.quantile(open_unit(&mut rng)) {
            Ok(t) => values.push(t),
            Err(ModelError::QuantileBelowSupport(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(LifetimeSample {
        values,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lifebet_oracle::ks_statistic;

    #[test]
    fn same_seed_same_sample() {
        let spec = DistributionSpec::gompertz((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        let a = sample(&spec, 100, 7).unwrap();
        let b = sample(&spec, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample(&spec, 100, 8).unwrap());
        assert_eq!(a.seed(), Some(7));
        assert_eq!(a.generator(), Some(SAMPLER_PRNG));
    }

    #[test]
    fn zero_size_is_rejected() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        assert_eq!(sample(&spec, 0, 1), Err(ModelError::EmptySample));
    }

    #[test]
    fn gompertz_sample_passes_ks() {
        let spec = DistributionSpec::gompertz((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        let n = 10_000;
        let s = sample(&spec, n, 42).unwrap();
        let d = ks_statistic(s.values(), |x| spec.cdf(x).unwrap());
        assert!(d < 1.63 / (n as f64).sqrt(), "KS = {d}");
    }

    #[test]
    fn exponential_sample_mean() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let s = sample(&spec, 10_000, 3).unwrap();
        let mean = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn observed_samples_are_validated() {
        assert!(LifetimeSample::new(vec![]).is_err());
        assert!(LifetimeSample::new(vec![1.0, -2.0]).is_err());
        assert!(LifetimeSample::new(vec![1.0, f64::NAN]).is_err());
        let s = LifetimeSample::new(vec![70.0, 80.0]).unwrap();
        assert_eq!(s.seed(), None);
        assert_eq!(s.generator(), None);
    }
}
