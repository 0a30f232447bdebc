//! Expected separation times: the first `t` at which two classes' intervals
//! on a given fold stop overlapping, using the true class parameters.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::confidence::{gaussian_bound, laplace_profile, BoundConfig, BoundKind, Fold};
use crate::distributions::ClassSpec;
use crate::error::{domain, Result};

/// Upper end of the search bracket.
pub const MAX_SEPARATION_TIME: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SeparationTime {
    Finite(u64),
    Infinite,
}

impl SeparationTime {
    pub fn finite(self) -> Option<u64> {
        match self {
            SeparationTime::Finite(t) => Some(t),
            SeparationTime::Infinite => None,
        }
    }
}

impl fmt::Display for SeparationTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparationTime::Finite(t) => write!(f, "{t}"),
            SeparationTime::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for SeparationTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeparationTime::Finite(t) => s.serialize_u64(*t),
            SeparationTime::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationQuery {
    pub fold: Fold,
    /// Gap `Δ` between the two classes' statistic.
    pub delta_stat: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub delta: f64,
    pub z_delta: f64,
    pub bound_kind: BoundKind,
}

impl SeparationQuery {
    pub fn mean(delta_stat: f64, sigma_a: f64, sigma_b: f64, delta: f64) -> Self {
        SeparationQuery {
            fold: Fold::Mean,
            delta_stat,
            sigma_a,
            sigma_b,
            delta,
            z_delta: 0.0,
            bound_kind: BoundKind::Laplace,
        }
    }

    pub fn sigma(delta_stat: f64, sigma_a: f64, sigma_b: f64, delta: f64) -> Self {
        SeparationQuery { fold: Fold::Sigma, ..Self::mean(delta_stat, sigma_a, sigma_b, delta) }
    }

    pub fn kurtosis(delta_stat: f64, z_delta: f64) -> Self {
        SeparationQuery {
            fold: Fold::Kurtosis,
            delta_stat,
            sigma_a: 0.0,
            sigma_b: 0.0,
            delta: 0.5,
            z_delta,
            bound_kind: BoundKind::Laplace,
        }
    }
}

/// Width per unit σ for the mean and σ folds. The fourth-moment shape is
/// used with its Gaussian coefficient.
fn unit_profile(kind: BoundKind, t: f64, delta: f64) -> Result<f64> {
    match kind {
        BoundKind::Laplace => laplace_profile(t, delta),
        BoundKind::GaussianZ => gaussian_bound(1.0, t, delta),
        BoundKind::FourthMoment => crate::confidence::fourth_moment_bound(1.0, 3.0, t, delta),
    }
}

pub fn separation_time(q: &SeparationQuery) -> Result<SeparationTime> {
    if !(q.delta_stat >= 0.0) {
        return Err(domain(format!("gap must be non-negative, got {}", q.delta_stat)));
    }
    if q.delta_stat == 0.0 {
        return Ok(SeparationTime::Infinite);
    }
    match q.fold {
        Fold::Kurtosis => {
            if !(q.z_delta > 0.0) {
                return Err(domain("z_delta must be positive"));
            }
            let t = (96.0 * q.z_delta * q.z_delta / (q.delta_stat * q.delta_stat)).ceil();
            Ok(SeparationTime::Finite((t as u64).max(1)))
        }
        Fold::Mean | Fold::Sigma => {
            let scale = q.sigma_a + q.sigma_b;
            if !(scale >= 0.0) {
                return Err(domain("sigmas must be non-negative"));
            }
            let excess =
                |t: u64| -> Result<f64> { Ok(scale * unit_profile(q.bound_kind, t as f64, q.delta)? - q.delta_stat) };
            if excess(1)? <= 0.0 {
                return Ok(SeparationTime::Finite(1));
            }
            // The width is nonincreasing in t; grow a bracket, then bisect.
            let (mut lo, mut hi) = (1u64, 2u64);
            while excess(hi)? > 0.0 {
                if hi >= MAX_SEPARATION_TIME {
                    return Ok(SeparationTime::Infinite);
                }
                lo = hi;
                hi = (hi * 2).min(MAX_SEPARATION_TIME);
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if excess(mid)? <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(SeparationTime::Finite(hi))
        }
    }
}

/// Separation times of one class pair on every fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSeparation {
    pub a: usize,
    pub b: usize,
    pub mean: SeparationTime,
    pub sigma: SeparationTime,
    pub kurtosis: SeparationTime,
    /// Fold with the earliest finite time; `None` if the classes coincide.
    pub fastest: Option<Fold>,
}

impl PairSeparation {
    pub fn get(&self, fold: Fold) -> SeparationTime {
        match fold {
            Fold::Mean => self.mean,
            Fold::Sigma => self.sigma,
            Fold::Kurtosis => self.kurtosis,
        }
    }

    pub fn fastest_time(&self) -> SeparationTime {
        self.fastest.map_or(SeparationTime::Infinite, |f| self.get(f))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationTable {
    pub labels: Vec<String>,
    pub pairs: Vec<PairSeparation>,
}

pub fn pair_separation(a: &ClassSpec, b: &ClassSpec, cfg: &BoundConfig) -> Result<[SeparationTime; 3]> {
    let mean = SeparationQuery {
        bound_kind: cfg.bound_kind,
        ..SeparationQuery::mean((a.mean - b.mean).abs(), a.sigma, b.sigma, cfg.delta)
    };
    let sigma = SeparationQuery { fold: Fold::Sigma, delta_stat: (a.sigma - b.sigma).abs(), ..mean };
    let kappa_gap = (a.family.kurtosis() - b.family.kurtosis()).abs();
    let kurt = SeparationQuery::kurtosis(kappa_gap, cfg.z_delta_kurtosis);
    Ok([separation_time(&mean)?, separation_time(&sigma)?, separation_time(&kurt)?])
}

pub fn separation_table(classes: &[ClassSpec], cfg: &BoundConfig) -> Result<SeparationTable> {
    if classes.len() < 2 {
        return Err(domain("separation table needs at least two classes"));
    }
    cfg.validate()?;
    let mut pairs = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let [mean, sigma, kurtosis] = pair_separation(&classes[i], &classes[j], cfg)?;
            let fastest = [(Fold::Mean, mean), (Fold::Sigma, sigma), (Fold::Kurtosis, kurtosis)]
                .into_iter()
                .filter(|(_, t)| t.finite().is_some())
                .min_by_key(|&(_, t)| t)
                .map(|(f, _)| f);
            pairs.push(PairSeparation { a: i, b: j, mean, sigma, kurtosis, fastest });
        }
    }
    Ok(SeparationTable { labels: classes.iter().map(|c| c.label.clone()).collect(), pairs })
}

impl SeparationTable {
    pub fn pair(&self, a: usize, b: usize) -> Option<&PairSeparation> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| p.a == a && p.b == b)
    }

    /// Latest of the per-pair earliest times: when every pair should be apart.
    pub fn full_separation_time(&self) -> SeparationTime {
        self.pairs.iter().map(PairSeparation::fastest_time).max().unwrap_or(SeparationTime::Infinite)
    }

    /// Aligned text, fastest fold per pair marked with `*`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<14}{:>10}{:>10}{:>10}\n", "pair", "mean", "sigma", "kurtosis");
        for p in &self.pairs {
            let cell = |f: Fold| {
                let mark = if p.fastest == Some(f) { "*" } else { "" };
                format!("{}{mark}", p.get(f))
            };
            let name = format!("{}-{}", self.labels[p.a], self.labels[p.b]);
            out.push_str(&format!(
                "{:<14}{:>10}{:>10}{:>10}\n",
                name,
                cell(Fold::Mean),
                cell(Fold::Sigma),
                cell(Fold::Kurtosis)
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class_a,class_b,t_mean,t_sigma,t_kurtosis,fastest\n");
        for p in &self.pairs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.labels[p.a],
                self.labels[p.b],
                p.mean,
                p.sigma,
                p.kurtosis,
                p.fastest.map_or("none", Fold::as_str)
            ));
        }
        out
    }
}

/// Latest mean-fold time over all class pairs. With a shared σ this is the
/// solve on the smallest gap between means; infinite if two means coincide.
pub fn global_separation_time(classes: &[ClassSpec], cfg: &BoundConfig) -> Result<SeparationTime> {
    let mut worst = SeparationTime::Finite(0);
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let (a, b) = (&classes[i], &classes[j]);
            let q = SeparationQuery {
                bound_kind: cfg.bound_kind,
                ..SeparationQuery::mean((a.mean - b.mean).abs(), a.sigma, b.sigma, cfg.delta)
            };
            worst = worst.max(separation_time(&q)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use proptest::prelude::*;

    fn finite(q: SeparationQuery) -> u64 {
        separation_time(&q).unwrap().finite().unwrap()
    }

    #[test]
    fn scalar_anchors() {
        assert!(finite(SeparationQuery::mean(0.2, 1.2, 1.8, 0.01)).abs_diff(4265) <= 2);
        assert!(finite(SeparationQuery::sigma(0.6, 1.2, 1.8, 0.01)).abs_diff(416) <= 2);
        assert!(finite(SeparationQuery::kurtosis(1.7, 3.89)).abs_diff(502) <= 1);
        assert!(finite(SeparationQuery::kurtosis(1.4, 3.89)).abs_diff(741) <= 1);
    }

    #[test]
    fn solution_is_first_crossing() {
        let q = SeparationQuery::mean(0.2, 1.2, 1.8, 0.01);
        let t = finite(q) as f64;
        assert!(3.0 * laplace_profile(t, 0.01).unwrap() <= 0.2);
        assert!(3.0 * laplace_profile(t - 1.0, 0.01).unwrap() > 0.2);
    }

    #[test]
    fn zero_gap_is_infinite() {
        assert_eq!(separation_time(&SeparationQuery::mean(0.0, 1.0, 1.0, 0.01)).unwrap(), SeparationTime::Infinite);
        assert_eq!(separation_time(&SeparationQuery::kurtosis(0.0, 3.89)).unwrap(), SeparationTime::Infinite);
        assert!(separation_time(&SeparationQuery::mean(-0.1, 1.0, 1.0, 0.01)).is_err());
    }

    #[test]
    fn zero_sigma_separates_immediately() {
        assert_eq!(finite(SeparationQuery::mean(0.1, 0.0, 0.0, 0.01)), 1);
    }

    fn four_classes() -> Vec<ClassSpec> {
        vec![
            ClassSpec::new("1", 0.9, 1.8, Family::UniformSum(2)).unwrap(),
            ClassSpec::new("2", 0.1, 2.0, Family::UniformSum(2)).unwrap(),
            ClassSpec::new("3", 1.1, 1.2, Family::UniformSum(2)).unwrap(),
            ClassSpec::new("4", 1.0, 1.9, Family::ScaledRademacher).unwrap(),
        ]
    }

    #[test]
    fn four_class_table() {
        let cfg = BoundConfig::default();
        let table = separation_table(&four_classes(), &cfg).unwrap();
        let inf = SeparationTime::Infinite;
        type Row = (usize, usize, Option<u64>, Option<u64>, Option<u64>);
        let expect: [Row; 6] = [
            (0, 1, Some(373), Some(7023), None),
            (0, 2, Some(4264), Some(416), None),
            (0, 3, Some(28552), Some(28552), Some(741)),
            (1, 2, Some(161), Some(258), None),
            (1, 3, Some(306), Some(31890), Some(741)),
            (2, 3, Some(19685), Some(321), Some(741)),
        ];
        for (a, b, m, s, k) in expect {
            let p = table.pair(a, b).unwrap();
            for (got, want) in [(p.mean, m), (p.sigma, s), (p.kurtosis, k)] {
                match want {
                    Some(w) => assert!(got.finite().unwrap().abs_diff(w) <= 2, "{a}-{b}: {got} vs {w}"),
                    None => assert_eq!(got, inf),
                }
            }
        }
        assert_eq!(table.pair(0, 1).unwrap().fastest, Some(Fold::Mean));
        assert_eq!(table.pair(0, 2).unwrap().fastest, Some(Fold::Sigma));
        assert_eq!(table.pair(0, 3).unwrap().fastest, Some(Fold::Kurtosis));
        assert!(table.full_separation_time().finite().unwrap().abs_diff(741) <= 1);
        let text = table.to_text();
        assert!(text.contains(&format!("{}*", table.pair(0, 3).unwrap().kurtosis)) && text.contains("inf"));
        assert_eq!(table.to_csv().lines().count(), 7);
    }

    #[test]
    fn identical_classes_never_separate() {
        let c = ClassSpec::gaussian("x", 1.0, 2.0).unwrap();
        let table = separation_table(&[c.clone(), c], &BoundConfig::default()).unwrap();
        let p = &table.pairs[0];
        assert_eq!(
            (p.mean, p.sigma, p.kurtosis, p.fastest),
            (SeparationTime::Infinite, SeparationTime::Infinite, SeparationTime::Infinite, None)
        );
    }

    #[test]
    fn one_class_rejected() {
        let c = ClassSpec::gaussian("x", 1.0, 2.0).unwrap();
        assert!(separation_table(&[c], &BoundConfig::default()).is_err());
    }

    #[test]
    fn global_time_uses_smallest_gap() {
        let classes = four_classes();
        let g = global_separation_time(&classes, &BoundConfig::default()).unwrap();
        assert_eq!(g, separation_table(&classes, &BoundConfig::default()).unwrap().pair(0, 3).unwrap().mean);
        let shared: Vec<ClassSpec> =
            [0.0, 0.5, 0.7].iter().map(|&m| ClassSpec::gaussian("g", m, 1.0).unwrap()).collect();
        let g = global_separation_time(&shared, &BoundConfig::default()).unwrap();
        let direct = separation_time(&SeparationQuery::mean(0.7 - 0.5, 1.0, 1.0, 0.01)).unwrap();
        assert_eq!(g, direct);
    }

    proptest! {
        #[test]
        fn monotone_in_parameters(gap in 0.01f64..2.0, extra in 0.0f64..1.0, s in 0.1f64..3.0, ds in 0.0f64..1.0, d in 0.001f64..0.2) {
            let t = |gap: f64, s: f64, d: f64| separation_time(&SeparationQuery::mean(gap, s, s, d)).unwrap();
            prop_assert!(t(gap + extra, s, d) <= t(gap, s, d));
            prop_assert!(t(gap, s + ds, d) >= t(gap, s, d));
            prop_assert!(t(gap, s, d / 2.0) >= t(gap, s, d));
        }
    }
}
