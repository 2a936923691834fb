//! Pipeline configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use visrisk_core::ewm::{IndicatorGroup, DEFAULT_GROUP_NAMES};
use visrisk_core::som::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use visrisk_core::state::Transform;
use visrisk_core::{Error, FitConfig, Result, SotmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SomSettings {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub sigma_final: f64,
    pub hard_assignment: bool,
    pub transform: Transform,
}

impl Default for SomSettings {
    fn default() -> Self {
        SomSettings {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            iterations: 40,
            sigma_final: 1.0,
            hard_assignment: false,
            transform: Transform::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SotmSettings {
    pub units: usize,
    pub sigma: f64,
    pub epochs_per_slice: usize,
    pub transform: Transform,
}

impl Default for SotmSettings {
    fn default() -> Self {
        let c = SotmConfig::default();
        SotmSettings {
            units: c.units,
            sigma: c.sigma,
            epochs_per_slice: c.epochs_per_slice,
            transform: Transform::Raw,
        }
    }
}

impl SotmSettings {
    pub fn core(&self) -> SotmConfig {
        SotmConfig {
            units: self.units,
            sigma: self.sigma,
            epochs_per_slice: self.epochs_per_slice,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSettings {
    pub width: f64,
    pub height: f64,
    pub iterations: usize,
    pub relax_iterations: usize,
    pub seed: u64,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        NetworkSettings {
            width: 1000.0,
            height: 1000.0,
            iterations: 300,
            relax_iterations: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EwmSettings {
    /// Empty means: split the cube's indicators into the three default
    /// groups in axis order.
    pub groups: Vec<IndicatorGroup>,
    /// Scoring model used when no fitted model is in the data directory.
    /// Missing indicators get weight 0.
    pub weights: std::collections::BTreeMap<String, f64>,
    pub bias: f64,
    pub fit: FitConfig,
}

impl Default for EwmSettings {
    fn default() -> Self {
        EwmSettings {
            groups: Vec::new(),
            weights: Default::default(),
            bias: 0.0,
            fit: FitConfig::default(),
        }
    }
}

impl EwmSettings {
    pub fn resolve_groups(&self, indicators: &[String]) -> Vec<IndicatorGroup> {
        if !self.groups.is_empty() {
            return self.groups.clone();
        }
        let n = indicators.len();
        DEFAULT_GROUP_NAMES
            .iter()
            .enumerate()
            .map(|(g, name)| IndicatorGroup {
                name: name.to_string(),
                indicators: indicators[g * n / 3..(g + 1) * n / 3].to_vec(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub observations: Option<PathBuf>,
    pub links: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub occurrences: Option<PathBuf>,
    /// Binary crisis labels for fitting the early-warning model.
    pub labels: Option<PathBuf>,
    /// Class labels (`entity,time,label`) for the map's state layer.
    pub states: Option<PathBuf>,
    pub som: SomSettings,
    pub sotm: SotmSettings,
    pub network: NetworkSettings,
    pub ewm: EwmSettings,
    pub distress_terms: Vec<String>,
}

impl Config {
    /// Reads a config file; relative input paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path)?;
        let mut config: Config = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.observations,
            &mut config.links,
            &mut config.events,
            &mut config.occurrences,
            &mut config.labels,
            &mut config.states,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn required<'a>(&self, path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("config lists no {what} file")))
    }
}
