//! Built-in scenarios.
//!
//! Each base scenario comes in four variants: `-b`, `-c`, `-b-weighted` and
//! `-c-weighted`. The bare base name is an alias for `-b`.

use crate::algorithms::Protocol;
use crate::confidence::Fold;
use crate::distributions::Family;
use crate::error::{Error, Result};
use crate::harness::{BoundsSection, ClassEntry, ScenarioConfig};

pub const BASES: [&str; 3] = ["sec5-two-class-sigma", "sec6-kurtosis", "sec7-four-class"];

const VARIANTS: [(&str, Protocol, bool); 4] = [
    ("-b", Protocol::BColme, false),
    ("-c", Protocol::CColme, false),
    ("-b-weighted", Protocol::BColme, true),
    ("-c-weighted", Protocol::CColme, true),
];

fn class(label: &str, mean: f64, sigma: f64, family: Family, proportion: f64) -> ClassEntry {
    ClassEntry { label: label.into(), mean, sigma, family, proportion }
}

fn base(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "sec5-two-class-sigma" => ScenarioConfig {
            classes: vec![class("1", 0.9, 1.2, Family::Gaussian, 0.5), class("2", 1.1, 1.8, Family::Gaussian, 0.5)],
            bounds: BoundsSection { folds: vec![Fold::Mean, Fold::Sigma], ..Default::default() },
            ..Default::default()
        },
        "sec6-kurtosis" => ScenarioConfig {
            classes: vec![
                class("1", 0.9, 1.9, Family::ScaledRademacher, 0.5),
                class("2", 1.1, 2.1, Family::UniformSum(4), 0.5),
            ],
            reconnection: true,
            bounds: BoundsSection { folds: Fold::ALL.to_vec(), kurtosis_activation_time: 500, ..Default::default() },
            ..Default::default()
        },
        "sec7-four-class" => ScenarioConfig {
            r: 20,
            horizon: 2500,
            checkpoints: vec![100, 500, 1000, 2500],
            classes: vec![
                class("1", 0.9, 1.8, Family::UniformSum(2), 0.25),
                class("2", 0.1, 2.0, Family::UniformSum(2), 0.25),
                class("3", 1.1, 1.2, Family::UniformSum(2), 0.25),
                class("4", 1.0, 1.9, Family::ScaledRademacher, 0.25),
            ],
            reconnection: true,
            bounds: BoundsSection { folds: Fold::ALL.to_vec(), kurtosis_activation_time: 500, ..Default::default() },
            ..Default::default()
        },
        _ => return None,
    };
    Some(ScenarioConfig { name: name.to_string(), ..cfg })
}

/// Every preset name, bare aliases excluded.
pub fn names() -> Vec<String> {
    BASES.iter().flat_map(|b| VARIANTS.iter().map(move |(suffix, _, _)| format!("{b}{suffix}"))).collect()
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    if let Some(cfg) = base(name) {
        return preset(&format!("{}-b", cfg.name));
    }
    for b in BASES {
        if let Some(suffix) = name.strip_prefix(b) {
            if let Some(&(_, protocol, weighting)) = VARIANTS.iter().find(|(s, _, _)| *s == suffix) {
                let cfg = base(b).expect("listed base exists");
                return Ok(ScenarioConfig { name: name.to_string(), protocol, weighting, ..cfg });
            }
        }
    }
    Err(Error::Config(format!("unknown preset '{name}' (known: {})", names().join(", "))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_cleanly() {
        for name in names() {
            let cfg = preset(&name).unwrap();
            assert_eq!(cfg.validate().unwrap(), Vec::<String>::new(), "{name}");
        }
        assert_eq!(names().len(), 12);
    }

    #[test]
    fn bare_name_is_b_variant() {
        let bare = preset("sec6-kurtosis").unwrap();
        assert_eq!(bare.protocol, Protocol::BColme);
        assert!(!bare.weighting);
        assert_eq!(bare.name, "sec6-kurtosis-b");
        let w = preset("sec7-four-class-c-weighted").unwrap();
        assert_eq!(w.protocol, Protocol::CColme);
        assert!(w.weighting);
    }

    #[test]
    fn unknown_preset_lists_known() {
        let err = preset("nope").unwrap_err().to_string();
        assert!(err.contains("sec5-two-class-sigma-b"));
    }
}
