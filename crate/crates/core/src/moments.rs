//! Mean-invariant online moment estimation.
//!
//! The successive difference `d(t) = x(t) - x(t-1)` has zero mean whatever the
//! agent's true mean is, with `E d² = 2σ²` and `E d⁴ = 2μ₄ + 6σ⁴`. Accumulating
//! `Σd²` and `Σd⁴` therefore yields σ̂ and κ̂ without ever referencing the
//! local mean.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// σ̂ used before enough differences exist, wide enough that every interval
/// intersects.
pub const SIGMA_SENTINEL: f64 = 10.0;

/// Which differences enter the sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceMode {
    /// Every `t >= 2` contributes `x(t) - x(t-1)`.
    #[default]
    Overlapping,
    /// Only even `t`, so consecutive differences share no sample.
    Disjoint,
}

/// Per-agent running statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub t: u64,
    pub last_x: f64,
    pub sum_x: f64,
    pub sum_d2: f64,
    pub sum_d4: f64,
    pub n_diff: u64,
    pub mode: DifferenceMode,
}

impl MomentAccumulator {
    pub fn new(mode: DifferenceMode) -> Self {
        MomentAccumulator { mode, ..Default::default() }
    }

    pub fn push(&mut self, x: f64) {
        self.t += 1;
        self.sum_x += x;
        let take = match self.mode {
            DifferenceMode::Overlapping => self.t >= 2,
            DifferenceMode::Disjoint => self.t.is_multiple_of(2),
        };
        if take {
            let d2 = (x - self.last_x).powi(2);
            self.sum_d2 += d2;
            self.sum_d4 += d2 * d2;
            self.n_diff += 1;
        }
        self.last_x = x;
    }

    /// Local mean `m(t)/t`; zero before the first sample.
    pub fn local_mean(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.sum_x / self.t as f64
        }
    }

    pub fn local_sum(&self) -> f64 {
        self.sum_x
    }

    /// `sqrt(Σd² / (2 n_diff))`.
    pub fn sigma_local(&self) -> Result<f64> {
        if self.n_diff == 0 {
            return Err(Error::UndefinedEstimate("no differences accumulated"));
        }
        Ok((self.sum_d2 / (2.0 * self.n_diff as f64)).sqrt())
    }

    /// `Σd⁴ / (2 n_diff σ̂⁴) - 3`.
    pub fn kurtosis_estimate(&self, sigma_hat: f64) -> Result<f64> {
        if self.n_diff == 0 {
            return Err(Error::UndefinedEstimate("no differences accumulated"));
        }
        if !(sigma_hat > 0.0) {
            return Err(Error::UndefinedEstimate("sigma estimate is zero"));
        }
        Ok(self.sum_d4 / (2.0 * self.n_diff as f64 * sigma_hat.powi(4)) - 3.0)
    }

    /// κ̂ using this accumulator's own σ̂.
    pub fn kurtosis_local(&self) -> Result<f64> {
        self.kurtosis_estimate(self.sigma_local()?)
    }
}

/// Pooled σ̂ from a summed `Σd²` over `n_diff` differences.
pub fn pooled_sigma(sum_d2: f64, n_diff: u64) -> Result<f64> {
    if n_diff == 0 {
        return Err(Error::UndefinedEstimate("no differences pooled"));
    }
    Ok((sum_d2 / (2.0 * n_diff as f64)).sqrt())
}

/// Neighbourhood-pooled σ̂ over the first `t_s` differences of each stream.
///
/// `streams[0]` is conventionally the agent itself and the rest its initial
/// neighbours; every stream must hold `x(0), ..., x(t_s)`.
pub fn sigma_collaborative<S: AsRef<[f64]>>(streams: &[S], t_s: usize) -> Result<f64> {
    if t_s == 0 || streams.is_empty() {
        return Err(Error::UndefinedEstimate("no streams or zero estimation window"));
    }
    let mut sum = 0.0;
    for (i, s) in streams.iter().enumerate() {
        let s = s.as_ref();
        if s.len() < t_s + 1 {
            return Err(Error::InsufficientSamples { stream: i, have: s.len(), need: t_s + 1 });
        }
        sum += s[..=t_s].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    }
    pooled_sigma(sum, (t_s * streams.len()) as u64)
}

/// Delta-method standard error of σ̂: `sqrt(κ_d - 1)/2 · σ/sqrt(t)`.
pub fn sigma_standard_error(sigma: f64, kappa_d: f64, t: f64) -> Result<f64> {
    if !(kappa_d > 1.0) {
        return Err(domain(format!("kappa_d must exceed 1, got {kappa_d}")));
    }
    if !(t >= 1.0) {
        return Err(domain(format!("t must be >= 1, got {t}")));
    }
    Ok((kappa_d - 1.0).sqrt() / 2.0 * sigma / t.sqrt())
}

/// Fisher's variance of the sample kurtosis,
/// `24t(t-1)² / ((t-3)(t-2)(t+3)(t+5))`.
pub fn kurtosis_variance_fisher(t: u64) -> Result<f64> {
    if t <= 3 {
        return Err(domain(format!("Fisher kurtosis variance needs t >= 4, got {t}")));
    }
    let t = t as f64;
    Ok(24.0 * t * (t - 1.0).powi(2) / ((t - 3.0) * (t - 2.0) * (t + 3.0) * (t + 5.0)))
}

/// Large-sample form `24/t`.
pub fn kurtosis_variance_approx(t: f64) -> f64 {
    24.0 / t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ClassSpec, Family};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fed(xs: &[f64]) -> MomentAccumulator {
        let mut acc = MomentAccumulator::new(DifferenceMode::Overlapping);
        xs.iter().for_each(|&x| acc.push(x));
        acc
    }

    #[test]
    fn constant_stream() {
        let acc = fed(&[1.0; 50]);
        assert_eq!(acc.local_mean(), 1.0);
        assert_eq!(acc.sum_d2, 0.0);
        assert_eq!(acc.sigma_local().unwrap(), 0.0);
        assert!(matches!(acc.kurtosis_local(), Err(Error::UndefinedEstimate(_))));
    }

    #[test]
    fn alternating_stream() {
        let acc = fed(&[0.0, 2.0, 0.0, 2.0]);
        assert_eq!(acc.local_mean(), 1.0);
        assert_eq!(acc.sum_d2, 12.0);
        let acc = fed(&(0..1001).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect::<Vec<_>>());
        assert!((acc.sigma_local().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn undefined_before_first_difference() {
        let mut acc = MomentAccumulator::default();
        assert!(acc.sigma_local().is_err());
        acc.push(3.0);
        assert!(acc.sigma_local().is_err());
        acc.push(4.0);
        assert_eq!(acc.sigma_local().unwrap(), (0.5f64).sqrt());
    }

    #[test]
    fn disjoint_mode_skips_odd_steps() {
        let mut acc = MomentAccumulator::new(DifferenceMode::Disjoint);
        for x in [0.0, 1.0, 5.0, 7.0] {
            acc.push(x);
        }
        assert_eq!(acc.n_diff, 2);
        assert_eq!(acc.sum_d2, 1.0 + 4.0);
    }

    #[test]
    fn gaussian_local_mean_band() {
        let spec = ClassSpec::gaussian("g", 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = MomentAccumulator::default();
        for _ in 0..100_000 {
            acc.push(spec.sample(&mut rng));
        }
        assert!(acc.local_mean().abs() < 0.04);
    }

    #[test]
    fn pooled_sigma_over_agents() {
        let spec = ClassSpec::gaussian("g", 5.0, 2.0).unwrap();
        let mut total = 0.0;
        for a in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + a);
            let mut acc = MomentAccumulator::default();
            for _ in 0..2000 {
                acc.push(spec.sample(&mut rng));
            }
            total += acc.sigma_local().unwrap();
        }
        assert!((total / 200.0 - 2.0).abs() < 0.05);
    }

    #[test]
    fn rademacher_sigma_converges() {
        let spec = ClassSpec::new("r", 1.0, 1.9, Family::ScaledRademacher).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = MomentAccumulator::default();
        for _ in 0..200_000 {
            acc.push(spec.sample(&mut rng));
        }
        assert!((acc.sigma_local().unwrap() - 1.9).abs() < 0.01);
    }

    #[test]
    fn kurtosis_limits() {
        // Gaussian: E d⁴ = 12σ⁴ gives 3; Rademacher: E d⁴ = 8σ⁴ gives 1.
        let cases =
            [(Family::Gaussian, 3.0, 0.1), (Family::ScaledRademacher, 1.0, 0.05), (Family::UniformSum(4), 2.7, 0.05)];
        for (i, (family, expect, tol)) in cases.into_iter().enumerate() {
            let spec = ClassSpec::new("c", -3.0, 1.7, family).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
            let mut acc = MomentAccumulator::default();
            for _ in 0..1_000_000 {
                acc.push(spec.sample(&mut rng));
            }
            let k = acc.kurtosis_local().unwrap();
            assert!((k - expect).abs() < tol, "{family}: {k}");
        }
    }

    #[test]
    fn rademacher_difference_fourth_moment_by_enumeration() {
        // (x(t), x(t-1)) ∈ {±σ}², each with probability 1/4.
        let sigma: f64 = 1.3;
        let mut e_d2 = 0.0;
        let mut e_d4 = 0.0;
        for a in [-sigma, sigma] {
            for b in [-sigma, sigma] {
                e_d2 += 0.25 * (a - b).powi(2);
                e_d4 += 0.25 * (a - b).powi(4);
            }
        }
        assert!((e_d2 - 2.0 * sigma * sigma).abs() < 1e-12);
        assert!((e_d4 / (2.0 * sigma.powi(4)) - 3.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collaborative_sigma() {
        let constant = vec![vec![4.0; 11]; 13];
        assert_eq!(sigma_collaborative(&constant, 10).unwrap(), 0.0);

        let short = vec![vec![0.0; 11], vec![0.0; 10]];
        assert_eq!(sigma_collaborative(&short, 10), Err(Error::InsufficientSamples { stream: 1, have: 10, need: 11 }));

        // 12 neighbours plus the centre, 10 instants: 130 pooled differences.
        let streams: Vec<Vec<f64>> =
            (0..13).map(|i| (0..11).map(|t| if (t + i) % 2 == 0 { 1.0 } else { 0.0 }).collect()).collect();
        let s = sigma_collaborative(&streams, 10).unwrap();
        assert!((s - (130.0f64 / 260.0).sqrt()).abs() < 1e-12);

        let spec = ClassSpec::gaussian("g", 0.3, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let streams: Vec<Vec<f64>> = (0..13).map(|_| (0..11).map(|_| spec.sample(&mut rng)).collect()).collect();
        let s = sigma_collaborative(&streams, 10).unwrap();
        assert!((s - 2.0).abs() < 0.55, "{s}");
    }

    #[test]
    fn standard_error_values() {
        let se = sigma_standard_error(2.0, 3.0, 400.0).unwrap();
        assert!((se - 0.070_710_678).abs() < 1e-8);
        let quarter = sigma_standard_error(2.0, 3.0, 1600.0).unwrap();
        assert!((quarter - se / 2.0).abs() < 1e-15);
        assert!((sigma_standard_error(1.0, 2.0, 100.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(sigma_standard_error(1.0, 1.0, 100.0).is_err());
    }

    #[test]
    fn standard_error_against_monte_carlo() {
        // Disjoint differences are independent, so the delta-method SE with
        // n_diff in place of t applies directly.
        let spec = ClassSpec::gaussian("g", 0.0, 2.0).unwrap();
        let n_agents = 2000;
        let t = 800;
        let est: Vec<f64> = (0..n_agents)
            .map(|a| {
                let mut rng = ChaCha8Rng::seed_from_u64(5000 + a);
                let mut acc = MomentAccumulator::new(DifferenceMode::Disjoint);
                for _ in 0..t {
                    acc.push(spec.sample(&mut rng));
                }
                acc.sigma_local().unwrap()
            })
            .collect();
        let mean = est.iter().sum::<f64>() / n_agents as f64;
        let sd = (est.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n_agents - 1) as f64).sqrt();
        let se = sigma_standard_error(2.0, 3.0, (t / 2) as f64).unwrap();
        assert!((sd / se - 1.0).abs() < 0.1, "sd {sd} vs se {se}");
    }

    #[test]
    fn fisher_values() {
        let exact = kurtosis_variance_fisher(1000).unwrap();
        assert!((exact - 0.023_881).abs() < 1e-6, "{exact}");
        assert!((exact / kurtosis_variance_approx(1000.0) - 1.0).abs() < 0.01);
        assert!((kurtosis_variance_fisher(4).unwrap() - 864.0 / 126.0).abs() < 1e-12);
        assert!(kurtosis_variance_fisher(3).is_err());
        let big = kurtosis_variance_fisher(10_000_000).unwrap();
        assert!((big / kurtosis_variance_approx(1e7) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn accumulator_json_roundtrip() {
        let acc = fed(&[1.0, -2.0, 0.5]);
        let json = serde_json::to_string(&acc).unwrap();
        assert_eq!(serde_json::from_str::<MomentAccumulator>(&json).unwrap(), acc);
    }

    proptest! {
        #[test]
        // Dyadic samples and integer shifts keep every difference exact.
        fn shift_invariance(raw in prop::collection::vec(-20_000i32..20_000, 3..200), shift in -1_000_000i64..1_000_000) {
            let xs: Vec<f64> = raw.iter().map(|&v| v as f64 / 16.0).collect();
            let a = fed(&xs);
            let b = fed(&xs.iter().map(|x| x + shift as f64).collect::<Vec<_>>());
            prop_assert_eq!(a.sigma_local().unwrap(), b.sigma_local().unwrap());
            prop_assert_eq!(a.sum_d4, b.sum_d4);
            if let (Ok(ka), Ok(kb)) = (a.kurtosis_local(), b.kurtosis_local()) {
                prop_assert_eq!(ka, kb);
            }
        }

        #[test]
        fn accumulator_invariants(xs in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let acc = fed(&xs);
            prop_assert!(acc.sum_d2 >= 0.0 && acc.sum_d4 >= 0.0);
            if acc.n_diff >= 1 {
                prop_assert!(acc.sum_d4 * (1.0 + 1e-12) >= acc.sum_d2 * acc.sum_d2 / acc.n_diff as f64);
            }
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((acc.local_mean() - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
            if let Ok(k) = acc.kurtosis_local() {
                prop_assert!(k >= -3.0);
            }
        }
    }
}
