use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::Protocol;
use crate::confidence::{BoundConfig, BoundKind, Fold, FoldSet, DEFAULT_Z_KURTOSIS};
use crate::distributions::{ClassSpec, Family};
use crate::error::{Error, Result};
use crate::moments::DifferenceMode;

/// Which σ̂ scales the interval widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Running difference-based σ̂ of the agent's own stream.
    #[default]
    Local,
    /// Pooled over the agent and its initial neighbours at `t_s`, then frozen.
    Collaborative,
    /// True class σ (a reference mode, not a protocol).
    Known,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: String,
    pub mean: f64,
    pub sigma: f64,
    pub family: Family,
    pub proportion: f64,
}

impl ClassEntry {
    pub fn spec(&self) -> ClassSpec {
        ClassSpec { label: self.label.clone(), mean: self.mean, sigma: self.sigma, family: self.family }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub delta: f64,
    pub bound_kind: BoundKind,
    pub z_delta_kurtosis: f64,
    pub kurtosis_activation_time: u64,
    pub folds: Vec<Fold>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fourth_moment_coefficient: Option<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            delta: 0.01,
            bound_kind: BoundKind::Laplace,
            z_delta_kurtosis: DEFAULT_Z_KURTOSIS,
            kurtosis_activation_time: 500,
            folds: vec![Fold::Mean],
            fourth_moment_coefficient: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n_agents: usize,
    /// Degree of the initial random regular graph.
    pub r: usize,
    pub protocol: Protocol,
    /// B-colME message depth.
    pub depth: usize,
    pub horizon: u64,
    pub realizations: usize,
    pub master_seed: u64,
    /// σ̂ warm-up: the sentinel is used up to and including this step.
    pub t_s: u64,
    /// C-colME mixing schedule constant.
    pub alpha_k: f64,
    pub weighting: bool,
    pub reconnection: bool,
    pub sigma_mode: SigmaMode,
    pub difference_mode: DifferenceMode,
    /// Steps at which σ̂/κ̂ histograms and graph snapshots are taken.
    pub checkpoints: Vec<u64>,
    pub histogram_bins: usize,
    pub bootstrap_resamples: usize,
    pub bootstrap_level: f64,
    pub bounds: BoundsSection,
    pub classes: Vec<ClassEntry>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            n_agents: 200,
            r: 10,
            protocol: Protocol::BColme,
            depth: 4,
            horizon: 2000,
            realizations: 10,
            master_seed: 1,
            t_s: 10,
            alpha_k: 10.0,
            weighting: false,
            reconnection: false,
            sigma_mode: SigmaMode::Local,
            difference_mode: DifferenceMode::Overlapping,
            checkpoints: vec![100, 500, 1000, 2000],
            histogram_bins: 40,
            bootstrap_resamples: 1000,
            bootstrap_level: 0.95,
            bounds: BoundsSection::default(),
            classes: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn bound_config(&self) -> BoundConfig {
        BoundConfig {
            delta: self.bounds.delta,
            bound_kind: self.bounds.bound_kind,
            z_delta_kurtosis: self.bounds.z_delta_kurtosis,
            kurtosis_activation_time: self.bounds.kurtosis_activation_time,
            folds: FoldSet::from_folds(&self.bounds.folds),
            fourth_moment_coefficient: self.bounds.fourth_moment_coefficient,
        }
    }

    pub fn class_specs(&self) -> Vec<ClassSpec> {
        self.classes.iter().map(ClassEntry::spec).collect()
    }

    /// Agents split into contiguous blocks by proportion (largest remainder).
    pub fn class_assignment(&self) -> Vec<usize> {
        let n = self.n_agents;
        let raw: Vec<f64> = self.classes.iter().map(|c| c.proportion * n as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
        let missing = n.saturating_sub(counts.iter().sum());
        for i in 0..missing {
            counts[order[i % order.len()]] += 1;
        }
        counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect()
    }

    /// Hard errors come back as `Err`; soft issues as warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.classes.is_empty() {
            return bad("at least one class is required".into());
        }
        if self.n_agents == 0 {
            return bad("n_agents must be positive".into());
        }
        if self.realizations == 0 {
            return bad("realizations must be positive".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.protocol != Protocol::Colme {
            if (self.n_agents * self.r) % 2 == 1 {
                return bad(format!("n_agents * r must be even (n_agents={}, r={})", self.n_agents, self.r));
            }
            if self.r >= self.n_agents {
                return bad(format!("r={} must be below n_agents={}", self.r, self.n_agents));
            }
        }
        if self.t_s >= self.horizon {
            return bad(format!("t_s={} must be below horizon={}", self.t_s, self.horizon));
        }
        if !(self.alpha_k > 0.0) {
            return bad("alpha_k must be positive".into());
        }
        if !(self.bootstrap_level > 0.0 && self.bootstrap_level < 1.0) {
            return bad("bootstrap_level must lie in (0,1)".into());
        }
        if self.histogram_bins == 0 {
            return bad("histogram_bins must be positive".into());
        }
        if self.bounds.folds.is_empty() {
            return bad("bounds.folds must name at least one fold".into());
        }
        self.bound_config().validate()?;
        let mut total = 0.0;
        for c in &self.classes {
            c.spec().validate()?;
            if !(c.proportion > 0.0) {
                return bad(format!("class {}: proportion must be positive", c.label));
            }
            total += c.proportion;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("class proportions sum to {total}, not 1"));
        }

        let mut warnings = Vec::new();
        if self.realizations < 2 {
            warnings.push("fewer than 2 realizations: bootstrap bands are skipped".to_string());
        }
        if self.bootstrap_resamples < 1000 {
            warnings.push(format!("bootstrap_resamples={} is below 1000", self.bootstrap_resamples));
        }
        for &t in &self.checkpoints {
            if t == 0 || t > self.horizon {
                warnings.push(format!("checkpoint {t} lies outside 1..={}", self.horizon));
            }
        }
        let folds = FoldSet::from_folds(&self.bounds.folds);
        if folds.kurtosis && self.bounds.kurtosis_activation_time > self.horizon {
            warnings.push("kurtosis fold never activates before the horizon".to_string());
        }
        let class_of = self.class_assignment();
        for (i, c) in self.classes.iter().enumerate() {
            if class_of.iter().filter(|&&k| k == i).count() < 2 {
                warnings.push(format!("class {} has fewer than 2 agents", c.label));
            }
        }
        if self.protocol == Protocol::BColme && self.depth == 0 {
            warnings.push("depth 0 reduces B-colME to the local estimate".to_string());
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class() -> ScenarioConfig {
        ScenarioConfig {
            classes: vec![
                ClassEntry { label: "a".into(), mean: 0.0, sigma: 1.0, family: Family::Gaussian, proportion: 0.5 },
                ClassEntry {
                    label: "b".into(),
                    mean: 1.0,
                    sigma: 1.0,
                    family: Family::ScaledRademacher,
                    proportion: 0.5,
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = two_class();
        let text = cfg.to_toml_string();
        assert!(text.contains("family = \"rademacher\""));
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = ScenarioConfig::from_toml_str(
            "n_agents = 20\nr = 4\n[[classes]]\nlabel = \"x\"\nmean = 0.0\nsigma = 1.0\nfamily = \"gaussian\"\nproportion = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.horizon, 2000);
        assert_eq!(cfg.bounds.folds, vec![Fold::Mean]);
        assert!(cfg.validate().unwrap().is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_toml_str("agents = 3\n").is_err());
    }

    #[test]
    fn odd_degree_sum_rejected() {
        let cfg = ScenarioConfig { n_agents: 201, r: 5, ..two_class() };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("n_agents * r must be even"), "{err}");
    }

    #[test]
    fn proportions_must_sum_to_one() {
        let mut cfg = two_class();
        cfg.classes[1].proportion = 0.4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn assignment_is_contiguous_and_complete() {
        let mut cfg = two_class();
        cfg.n_agents = 7;
        let a = cfg.class_assignment();
        assert_eq!(a.len(), 7);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        let cfg3 = ScenarioConfig {
            n_agents: 10,
            classes: (0..3)
                .map(|i| ClassEntry {
                    label: i.to_string(),
                    mean: 0.0,
                    sigma: 1.0,
                    family: Family::Gaussian,
                    proportion: 1.0 / 3.0,
                })
                .collect(),
            ..Default::default()
        };
        let a = cfg3.class_assignment();
        assert_eq!(a.len(), 10);
        assert_eq!(a.iter().filter(|&&c| c == 0).count(), 4);
    }

    #[test]
    fn warnings_for_soft_issues() {
        let cfg = ScenarioConfig { realizations: 1, checkpoints: vec![5000], ..two_class() };
        assert_eq!(cfg.validate().unwrap().len(), 2);
    }
}
