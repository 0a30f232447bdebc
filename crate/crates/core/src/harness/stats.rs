use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pointwise percentile bootstrap over realizations.
///
/// `series[r][i]` is realization `r` at step `i`. Each resample draws
/// realizations with replacement and is reused across all steps, so the
/// band is coherent in time.
#[allow(clippy::needless_range_loop)]
pub fn bootstrap_band(series: &[Vec<f64>], resamples: usize, level: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = series.len();
    if r < 2 {
        return Err(Error::InsufficientData(format!("bootstrap needs >= 2 realizations, got {r}")));
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain("bootstrap needs resamples > 0 and level in (0,1)".into()));
    }
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: bad.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<usize>> = (0..resamples).map(|_| (0..r).map(|_| rng.random_range(0..r)).collect()).collect();
    let lo_q = (1.0 - level) / 2.0;
    let hi_q = 1.0 - lo_q;
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    let mut means = vec![0.0; resamples];
    for i in 0..len {
        for (m, d) in means.iter_mut().zip(&draws) {
            *m = d.iter().map(|&k| series[k][i]).sum::<f64>() / r as f64;
        }
        means.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&means, lo_q));
        upper.push(quantile_sorted(&means, hi_q));
    }
    Ok((lower, upper))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Weighted mixture of normals used as a histogram overlay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalMixture {
    /// `(weight, mean, sd)`.
    pub components: Vec<(f64, f64, f64)>,
}

impl NormalMixture {
    pub fn single(mean: f64, sd: f64) -> Self {
        NormalMixture { components: vec![(1.0, mean, sd)] }
    }

    fn combine<F: Fn(&Normal) -> f64>(&self, f: F) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, s)| match Normal::new(m, s) {
                Ok(n) => w * f(&n),
                Err(_) => 0.0,
            })
            .sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.combine(|n| n.pdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.combine(|n| n.cdf(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Overlay density at bin centres, if any.
    pub overlay: Option<Vec<f64>>,
    pub total: usize,
}

/// Equal-width histogram of the finite values; constant data collapses to
/// one occupied bin.
pub fn histogram(values: &[f64], bins: usize, overlay: Option<&NormalMixture>) -> Result<Histogram> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Err(Error::InsufficientData("histogram needs values and bins >= 1".into()));
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let overlay = overlay.map(|m| (0..bins).map(|i| m.pdf(lo + width * (i as f64 + 0.5))).collect());
    Ok(Histogram { edges, counts, overlay, total: finite.len() })
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let width = self.edges[1] - self.edges[0];
        let mut out = String::from("bin_lo,bin_hi,count,density,overlay\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let density = c as f64 / (self.total as f64 * width);
            let overlay = self.overlay.as_ref().map_or(String::new(), |o| o[i].to_string());
            out.push_str(&format!("{},{},{c},{density},{overlay}\n", self.edges[i], self.edges[i + 1]));
        }
        out
    }
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `values` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS p-value with the small-sample correction to `λ`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_series_zero_width() {
        let s = vec![vec![1.0, 2.0, 3.0]; 5];
        let (lo, hi) = bootstrap_band(&s, 1000, 0.95, 1).unwrap();
        assert_eq!(lo, vec![1.0, 2.0, 3.0]);
        assert_eq!(hi, lo);
    }

    #[test]
    fn band_contains_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Vec<Vec<f64>> = (0..10).map(|_| (0..50).map(|_| rng.random::<f64>()).collect()).collect();
        let (lo, hi) = bootstrap_band(&s, 1000, 0.95, 2).unwrap();
        for i in 0..50 {
            let m = s.iter().map(|r| r[i]).sum::<f64>() / 10.0;
            assert!(lo[i] <= m && m <= hi[i]);
        }
    }

    #[test]
    fn band_shrinks_with_realizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut width = |r: usize| {
            let s: Vec<Vec<f64>> = (0..r)
                .map(|_| {
                    (0..200).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect()
                })
                .collect();
            let (lo, hi) = bootstrap_band(&s, 1000, 0.95, 3).unwrap();
            lo.iter().zip(&hi).map(|(l, h)| h - l).sum::<f64>() / 200.0
        };
        let ratio = width(10) / width(40);
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn bootstrap_needs_two() {
        assert!(matches!(bootstrap_band(&[vec![1.0]], 1000, 0.95, 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn constant_values_one_bin() {
        let h = histogram(&[2.0; 30], 10, None).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.total, 30);
        assert!(histogram(&[], 5, None).is_err());
    }

    #[test]
    fn histogram_csv_density_integrates() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.618).fract()).collect();
        let h = histogram(&v, 20, Some(&NormalMixture::single(0.5, 0.3))).unwrap();
        let csv = h.to_csv();
        let total: f64 = csv
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
                f[3] * (f[1] - f[0])
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Classical critical values: Q(1.36) ≈ 0.05, Q(1.63) ≈ 0.01.
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_accepts_true_model_and_rejects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = Normal::standard();
        let d = ks_statistic(&v, |x| n.cdf(x));
        assert!(ks_p_value(d, v.len()) > 0.01);
        let d = ks_statistic(&v, |x| n.cdf(x - 0.2));
        assert!(ks_p_value(d, v.len()) < 0.01);
    }

    #[test]
    fn mixture_cdf_limits() {
        let m = NormalMixture { components: vec![(0.5, 0.0, 1.0), (0.5, 10.0, 1.0)] };
        assert!((m.cdf(5.0) - 0.5).abs() < 1e-6);
        assert!(m.cdf(-20.0) < 1e-12 && (m.cdf(30.0) - 1.0).abs() < 1e-12);
    }
}
