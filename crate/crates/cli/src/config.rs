use std::path::{Path, PathBuf};

use serde::Deserialize;
use trafficproof::sim::{MobilitySpec, Mode, ScenarioSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

/// Top-level run file. Every key is optional; see `configs/manhattan.toml`
/// for the full schema with defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub output_dir: PathBuf,
    pub modes: Vec<Mode>,
    /// Repeat `i` runs with seed `scenario.seed + i`.
    pub repeats: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default(),
            output_dir: PathBuf::from("results"),
            modes: Mode::STANDARD.to_vec(),
            repeats: 1,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub modes: Vec<Mode>,
    pub seed: Option<u64>,
    pub repeats: Option<u64>,
}

impl RunConfig {
    /// Parses TOML text. Schema errors carry the dotted path of the
    /// offending key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Schema { path, message: inner.message().trim().to_string() }
        })?;
        Ok(config)
    }

    /// Parses the file at `path` and resolves a relative trace path against
    /// the config file's directory.
    pub fn load(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut config = Self::parse(text)?;
        if let MobilitySpec::TraceFile { path: trace } = &mut config.scenario.mobility {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(dir) = o.output_dir {
            self.output_dir = dir;
        }
        if !o.modes.is_empty() {
            self.modes = o.modes;
        }
        if let Some(seed) = o.seed {
            self.scenario.seed = seed;
        }
        if let Some(r) = o.repeats {
            self.repeats = r;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: &str| ConfigError::Invalid { key: key.into(), reason: reason.into() };
        if self.modes.is_empty() {
            return Err(invalid("modes", "must list at least one mode"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].contains(m) {
                return Err(invalid("modes", &format!("{m} listed twice")));
            }
        }
        if self.repeats == 0 {
            return Err(invalid("repeats", "must be at least 1"));
        }
        if self.scenario.seed.checked_add(self.repeats - 1).is_none() {
            return Err(invalid("repeats", "seed + repeats overflows"));
        }
        self.scenario.validate().map_err(|e| match e {
            trafficproof::sim::ScenarioError::Invalid { field, reason } => {
                ConfigError::Invalid { key: format!("scenario.{field}"), reason }
            }
            other => invalid("scenario", &other.to_string()),
        })
    }

    /// (mode, repeat index, spec) for every run, repeat-major so runs that
    /// share a seed are adjacent.
    pub fn runs(&self) -> Vec<(Mode, u64, ScenarioSpec)> {
        (0..self.repeats)
            .flat_map(|i| {
                self.modes.iter().map(move |&mode| {
                    let spec = ScenarioSpec { mode, seed: self.scenario.seed + i, ..self.scenario.clone() };
                    (mode, i, spec)
                })
            })
            .collect()
    }
}
