//! Data families for agent observations.
//!
//! Every family is parameterised by its mean and standard deviation so that
//! classes can be matched on the first two moments while differing in shape
//! (kurtosis). Samples are drawn from per-agent ChaCha streams keyed on
//! `(master seed, realization, agent)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of an agent's data distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Gaussian,
    /// `mean ± sigma` with equal probability.
    ScaledRademacher,
    /// Sum of `k` i.i.d. centred uniforms sharing the variance equally.
    UniformSum(u32),
}

impl Family {
    /// Population kurtosis `E(x-μ)^4 / σ^4`.
    pub fn kurtosis(self) -> f64 {
        match self {
            Family::Gaussian => 3.0,
            Family::ScaledRademacher => 1.0,
            Family::UniformSum(k) => 3.0 - 6.0 / (5.0 * k as f64),
        }
    }

    /// Kurtosis of `x(t) - x(t-1)` for i.i.d. draws; excess kurtosis halves
    /// because fourth cumulants add while the variance doubles.
    pub fn difference_kurtosis(self) -> f64 {
        3.0 + (self.kurtosis() - 3.0) / 2.0
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian => f.write_str("gaussian"),
            Family::ScaledRademacher => f.write_str("rademacher"),
            Family::UniformSum(k) => write!(f, "uniform_sum:{k}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaussian" => Ok(Family::Gaussian),
            "rademacher" => Ok(Family::ScaledRademacher),
            other => {
                let k = other
                    .strip_prefix("uniform_sum:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown family {other:?}")))?;
                if k == 0 {
                    return Err(Error::Config("uniform_sum needs k >= 1".into()));
                }
                Ok(Family::UniformSum(k))
            }
        }
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// A similarity class: every agent of the class draws from this distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    pub mean: f64,
    pub sigma: f64,
    pub family: Family,
}

/// Population moments of a class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub kappa_d: f64,
}

impl ClassSpec {
    pub fn new(label: impl Into<String>, mean: f64, sigma: f64, family: Family) -> Result<Self> {
        let spec = ClassSpec { label: label.into(), mean, sigma, family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(label: impl Into<String>, mean: f64, sigma: f64) -> Result<Self> {
        Self::new(label, mean, sigma, Family::Gaussian)
    }

    /// Zero sigma is accepted as the degenerate noiseless case.
    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::Config(format!("class {}: mean must be finite", self.label)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!("class {}: sigma must be finite and non-negative", self.label)));
        }
        if let Family::UniformSum(0) = self.family {
            return Err(Error::Config(format!("class {}: uniform_sum needs k >= 1", self.label)));
        }
        Ok(())
    }

    pub fn theoretical_moments(&self) -> Moments {
        Moments {
            mean: self.mean,
            sigma: self.sigma,
            kappa: self.family.kurtosis(),
            kappa_d: self.family.difference_kurtosis(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let noise = match self.family {
            Family::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                z * self.sigma
            }
            Family::ScaledRademacher => {
                if rng.random::<bool>() {
                    self.sigma
                } else {
                    -self.sigma
                }
            }
            Family::UniformSum(k) => {
                let half_width = self.sigma * (3.0 / k as f64).sqrt();
                (0..k).map(|_| rng.random_range(-1.0..1.0) * half_width).sum()
            }
        };
        self.mean + noise
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `(master, realization, stream)`.
pub fn stream_seed(master: u64, realization: u64, stream: u64) -> u64 {
    mix64(mix64(mix64(master) ^ realization) ^ stream)
}

/// Stream index reserved for graph generation within a realization.
pub const GRAPH_STREAM: u64 = u64::MAX;
/// Stream index reserved for bootstrap resampling.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX - 1;

pub fn agent_rng(master: u64, realization: u64, agent: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, realization, agent as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments_of(spec: &ClassSpec, n: usize, seed: u64) -> (f64, f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        (mean, m2, m4 / (m2 * m2))
    }

    #[test]
    fn rademacher_takes_two_values() {
        let spec = ClassSpec::new("4", 1.0, 1.9, Family::ScaledRademacher).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = spec.sample(&mut rng);
            assert!((x - 2.9).abs() < 1e-12 || (x + 0.9).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn zero_sigma_is_constant() {
        for family in [Family::Gaussian, Family::ScaledRademacher, Family::UniformSum(3)] {
            let spec = ClassSpec::new("c", 0.7, 0.0, family).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            assert!((0..100).all(|_| spec.sample(&mut rng) == 0.7));
        }
    }

    #[test]
    fn gaussian_mean_within_band() {
        let spec = ClassSpec::gaussian("g", 0.0, 2.0).unwrap();
        let (mean, _, _) = moments_of(&spec, 1_000_000, 3);
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn theoretical_moment_table() {
        let r = ClassSpec::new("r", 0.0, 1.0, Family::ScaledRademacher).unwrap();
        let g = ClassSpec::gaussian("g", 0.0, 1.0).unwrap();
        let u = ClassSpec::new("u", 0.0, 1.0, Family::UniformSum(2)).unwrap();
        let m = r.theoretical_moments();
        assert_eq!((m.kappa, m.kappa_d), (1.0, 2.0));
        let m = g.theoretical_moments();
        assert_eq!((m.kappa, m.kappa_d), (3.0, 3.0));
        let m = u.theoretical_moments();
        assert!((m.kappa - 2.4).abs() < 1e-12 && (m.kappa_d - 2.7).abs() < 1e-12);
    }

    #[test]
    fn uniform_sum_kurtosis_tends_to_gaussian() {
        let mut prev = Family::UniformSum(1).kurtosis();
        for k in [2, 4, 16, 256, 65536] {
            let kappa = Family::UniformSum(k).kurtosis();
            assert!(kappa > prev);
            prev = kappa;
        }
        assert!((3.0 - prev).abs() < 1e-4);
    }

    // Sample kurtosis SE for n draws is roughly sqrt((κ8-type terms)/n);
    // 5 SE with a generous per-family SE bound of sqrt(100/n) = 0.01.
    #[test]
    fn empirical_moments_match_each_family() {
        let n = 1_000_000;
        for (i, family) in [Family::Gaussian, Family::ScaledRademacher, Family::UniformSum(2), Family::UniformSum(4)]
            .into_iter()
            .enumerate()
        {
            let spec = ClassSpec::new("c", 1.5, 2.0, family).unwrap();
            let (mean, var, kurt) = moments_of(&spec, n, 100 + i as u64);
            let se_mean = 2.0 / (n as f64).sqrt();
            let se_var = 4.0 * ((family.kurtosis() - 1.0) / n as f64).sqrt();
            assert!((mean - 1.5).abs() < 5.0 * se_mean, "{family}: mean {mean}");
            // The 100/n term covers the bias from centring on the sample mean.
            assert!((var - 4.0).abs() < 5.0 * se_var + 100.0 / n as f64, "{family}: var {var}");
            assert!((kurt - family.kurtosis()).abs() < 0.05, "{family}: kurt {kurt}");
        }
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let spec = ClassSpec::new("u", 0.0, 1.0, Family::UniformSum(3)).unwrap();
        let mut a = agent_rng(9, 2, 17);
        let mut b = agent_rng(9, 2, 17);
        let mut c = agent_rng(9, 2, 18);
        let xa: Vec<f64> = (0..64).map(|_| spec.sample(&mut a)).collect();
        let xb: Vec<f64> = (0..64).map(|_| spec.sample(&mut b)).collect();
        let xc: Vec<f64> = (0..64).map(|_| spec.sample(&mut c)).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn family_strings() {
        for s in ["gaussian", "rademacher", "uniform_sum:4"] {
            assert_eq!(s.parse::<Family>().unwrap().to_string(), s);
        }
        assert!("uniform_sum:0".parse::<Family>().is_err());
        assert!("cauchy".parse::<Family>().is_err());
    }
}
