//! Confidence-interval widths and pairwise compatibility checks.
//!
//! An edge between two agents survives as long as, for every active fold
//! (mean, σ̂, κ̂), the two agents' closed intervals overlap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Error, Result};

/// Default `z_δ` for the kurtosis fold (δ = 0.001).
pub const DEFAULT_Z_KURTOSIS: f64 = 3.89;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub center: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width >= 0.0) {
            return Err(domain(format!("negative half-width {half_width}")));
        }
        Ok(Interval { center, half_width })
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// Closed-interval overlap; touching intervals intersect.
    pub fn intersects(&self, other: &Interval) -> bool {
        (self.center - other.center).abs() <= self.half_width + other.half_width
    }
}

pub fn intersects(a: &Interval, b: &Interval) -> bool {
    a.intersects(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    GaussianZ,
    Laplace,
    FourthMoment,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::GaussianZ => "gaussian",
            BoundKind::Laplace => "laplace",
            BoundKind::FourthMoment => "fourth_moment",
        }
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian_z" => Ok(BoundKind::GaussianZ),
            "laplace" => Ok(BoundKind::Laplace),
            "fourth_moment" => Ok(BoundKind::FourthMoment),
            other => Err(Error::Config(format!("unknown bound kind {other:?}"))),
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A statistic compared between agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fold {
    Mean,
    Sigma,
    Kurtosis,
}

impl Fold {
    pub const ALL: [Fold; 3] = [Fold::Mean, Fold::Sigma, Fold::Kurtosis];

    pub fn as_str(self) -> &'static str {
        match self {
            Fold::Mean => "mean",
            Fold::Sigma => "sigma",
            Fold::Kurtosis => "kurtosis",
        }
    }
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Fold::Mean),
            "sigma" => Ok(Fold::Sigma),
            "kurtosis" => Ok(Fold::Kurtosis),
            other => Err(Error::Config(format!("unknown fold {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FoldSet {
    pub mean: bool,
    pub sigma: bool,
    pub kurtosis: bool,
}

impl FoldSet {
    pub const MEAN_ONLY: FoldSet = FoldSet { mean: true, sigma: false, kurtosis: false };
    pub const MEAN_SIGMA: FoldSet = FoldSet { mean: true, sigma: true, kurtosis: false };
    pub const ALL: FoldSet = FoldSet { mean: true, sigma: true, kurtosis: true };

    pub fn contains(&self, fold: Fold) -> bool {
        match fold {
            Fold::Mean => self.mean,
            Fold::Sigma => self.sigma,
            Fold::Kurtosis => self.kurtosis,
        }
    }

    pub fn from_folds(folds: &[Fold]) -> Self {
        let mut set = FoldSet::default();
        for f in folds {
            match f {
                Fold::Mean => set.mean = true,
                Fold::Sigma => set.sigma = true,
                Fold::Kurtosis => set.kurtosis = true,
            }
        }
        set
    }

    pub fn folds(&self) -> Vec<Fold> {
        Fold::ALL.into_iter().filter(|f| self.contains(*f)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub delta: f64,
    pub bound_kind: BoundKind,
    pub z_delta_kurtosis: f64,
    pub kurtosis_activation_time: u64,
    pub folds: FoldSet,
    /// Replaces the fourth-moment prefactor `(2(κ+3)/(δ/2))^{1/4}` when set.
    pub fourth_moment_coefficient: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            delta: 0.01,
            bound_kind: BoundKind::Laplace,
            z_delta_kurtosis: DEFAULT_Z_KURTOSIS,
            kurtosis_activation_time: 500,
            folds: FoldSet::MEAN_ONLY,
            fourth_moment_coefficient: None,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.z_delta_kurtosis > 0.0) {
            return Err(Error::Config("z_delta must be positive".into()));
        }
        Ok(())
    }

    /// Half-width of an agent's mean interval (also reused for the σ̂ fold).
    pub fn mean_half_width(&self, sigma: f64, kappa: Option<f64>, t: u64) -> Result<f64> {
        let t = t as f64;
        match self.bound_kind {
            BoundKind::GaussianZ => gaussian_bound(sigma, t, self.delta),
            BoundKind::Laplace => laplace_bound(sigma, t, self.delta),
            BoundKind::FourthMoment => match self.fourth_moment_coefficient {
                Some(c) => Ok(c * sigma * fourth_moment_profile(t)),
                None => fourth_moment_bound(sigma, kappa.unwrap_or(3.0).max(1.0), t, self.delta),
            },
        }
    }

    pub fn kurtosis_active(&self, t: u64) -> bool {
        self.folds.kurtosis && t >= self.kurtosis_activation_time
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("delta must lie in (0,1), got {delta}")))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("t must be >= 1, got {t}")))
    }
}

/// Two-sided standard-normal quantile `z_{1-δ/2}`.
pub fn z_quantile(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let n = Normal::standard();
    Ok(n.inverse_cdf(1.0 - delta / 2.0))
}

/// `z_{1-δ/2} σ / sqrt(t)`.
pub fn gaussian_bound(sigma: f64, t: f64, delta: f64) -> Result<f64> {
    check_t(t)?;
    Ok(z_quantile(delta)? * sigma / t.sqrt())
}

/// Laplace profile `B_δ(t)`, the half-width per unit σ.
pub fn laplace_profile(t: f64, delta: f64) -> Result<f64> {
    check_t(t)?;
    check_delta(delta)?;
    Ok((2.0 / t * (1.0 + 1.0 / t) * ((t + 1.0).sqrt() / (delta / 2.0)).ln()).sqrt())
}

/// `σ sqrt((2/t)(1+1/t) ln(sqrt(t+1)/(δ/2)))`.
pub fn laplace_bound(sigma: f64, t: f64, delta: f64) -> Result<f64> {
    Ok(sigma * laplace_profile(t, delta)?)
}

/// `(2(κ+3)/(δ/2))^{1/4}`.
pub fn fourth_moment_coefficient(kappa: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(kappa >= 1.0) {
        return Err(domain(format!("kurtosis must be >= 1, got {kappa}")));
    }
    Ok((2.0 * (kappa + 3.0) / (delta / 2.0)).powf(0.25))
}

fn fourth_moment_profile(t: f64) -> f64 {
    ((1.0 + t.ln().powi(2)) / t).powf(0.25)
}

/// `σ (2(κ+3)/(δ/2) · (1+ln²t)/t)^{1/4}`.
pub fn fourth_moment_bound(sigma: f64, kappa: f64, t: f64, delta: f64) -> Result<f64> {
    check_t(t)?;
    Ok(sigma * fourth_moment_coefficient(kappa, delta)? * fourth_moment_profile(t))
}

/// `z sqrt(24/t)`.
pub fn kurtosis_bound(t: f64, z_delta: f64) -> f64 {
    z_delta * (24.0 / t).sqrt()
}

/// What an agent exposes to its neighbours for compatibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentStats {
    pub mean: f64,
    /// σ̂ used both as the σ-fold centre and to scale the widths.
    pub sigma: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Prune(Fold),
}

impl Decision {
    pub fn is_keep(&self) -> bool {
        matches!(self, Decision::Keep)
    }
}

/// Prunes iff some active fold's intervals are disjoint; reports the first
/// failing fold in mean, σ, κ order.
pub fn multifold_decision(a: &AgentStats, b: &AgentStats, cfg: &BoundConfig, t: u64) -> Result<Decision> {
    let t = t.max(1);
    let wa = cfg.mean_half_width(a.sigma, a.kappa, t)?;
    let wb = cfg.mean_half_width(b.sigma, b.kappa, t)?;
    Ok(decide(a, wa, b, wb, cfg.folds, active_kurtosis_width(cfg, t)))
}

/// Kurtosis half-width at `t`, or `None` while that fold is inactive.
pub fn active_kurtosis_width(cfg: &BoundConfig, t: u64) -> Option<f64> {
    cfg.kurtosis_active(t).then(|| kurtosis_bound(t.max(1) as f64, cfg.z_delta_kurtosis))
}

/// [`multifold_decision`] with the per-agent half-widths already computed.
pub fn decide(
    a: &AgentStats,
    wa: f64,
    b: &AgentStats,
    wb: f64,
    folds: FoldSet,
    kurtosis_width: Option<f64>,
) -> Decision {
    if folds.mean && (a.mean - b.mean).abs() > wa + wb {
        return Decision::Prune(Fold::Mean);
    }
    if folds.sigma && (a.sigma - b.sigma).abs() > wa + wb {
        return Decision::Prune(Fold::Sigma);
    }
    if let (Some(w), Some(ka), Some(kb)) = (kurtosis_width, a.kappa, b.kappa) {
        if (ka - kb).abs() > 2.0 * w {
            return Decision::Prune(Fold::Kurtosis);
        }
    }
    Decision::Keep
}

/// `exp(-(2 Δ / 2β)^4)`.
pub fn kernel_weight(delta_stat: f64, two_beta: f64) -> Result<f64> {
    if !(two_beta > 0.0) {
        return Err(domain(format!("kernel width must be positive, got {two_beta}")));
    }
    Ok((-(2.0 * delta_stat / two_beta).powi(4)).exp())
}

/// Smallest kernel weight over the active folds.
pub fn multifold_weight(a: &AgentStats, b: &AgentStats, cfg: &BoundConfig, t: u64) -> Result<f64> {
    let t = t.max(1);
    let wa = cfg.mean_half_width(a.sigma, a.kappa, t)?;
    let wb = cfg.mean_half_width(b.sigma, b.kappa, t)?;
    Ok(weight(a, wa, b, wb, cfg.folds, active_kurtosis_width(cfg, t)))
}

/// [`multifold_weight`] with the per-agent half-widths already computed.
/// Folds with a zero width are skipped.
pub fn weight(a: &AgentStats, wa: f64, b: &AgentStats, wb: f64, folds: FoldSet, kurtosis_width: Option<f64>) -> f64 {
    let kernel = |gap: f64, two_beta: f64| (-(2.0 * gap / two_beta).powi(4)).exp();
    let two_beta = wa + wb;
    let mut w: f64 = 1.0;
    if two_beta > 0.0 {
        if folds.mean {
            w = w.min(kernel(a.mean - b.mean, two_beta));
        }
        if folds.sigma {
            w = w.min(kernel(a.sigma - b.sigma, two_beta));
        }
    }
    if let (Some(kw), Some(ka), Some(kb)) = (kurtosis_width, a.kappa, b.kappa) {
        if kw > 0.0 {
            w = w.min(kernel(ka - kb, 2.0 * kw));
        }
    }
    w
}
