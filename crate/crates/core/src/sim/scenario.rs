//! Scenario description shared by the simulator and the runner.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::channel::ChannelParams;
use super::mobility::ManhattanParams;
use super::perception::PerceptionParams;
use crate::station::StationConfig;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("unknown mode {0:?} (expected local_only, conventional_cps, or pot_<N>s)")]
    UnknownMode(String),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

/// Which perception-sharing stack every honest vehicle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    LocalOnly,
    ConventionalCps,
    /// Proof of traffic with the given proof repeat interval in seconds.
    ProofOfTraffic(u64),
}

impl Mode {
    pub const STANDARD: [Mode; 4] =
        [Mode::LocalOnly, Mode::ConventionalCps, Mode::ProofOfTraffic(1), Mode::ProofOfTraffic(3)];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::LocalOnly => f.write_str("local_only"),
            Mode::ConventionalCps => f.write_str("conventional_cps"),
            Mode::ProofOfTraffic(n) => write!(f, "pot_{n}s"),
        }
    }
}

impl FromStr for Mode {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local_only" => Ok(Mode::LocalOnly),
            "conventional_cps" => Ok(Mode::ConventionalCps),
            _ => s
                .strip_prefix("pot_")
                .and_then(|r| r.strip_suffix('s'))
                .and_then(|n| n.parse::<u64>().ok())
                .filter(|&n| n > 0)
                .map(Mode::ProofOfTraffic)
                .ok_or_else(|| ScenarioError::UnknownMode(s.to_string())),
        }
    }
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum MobilitySpec {
    ManhattanGrid(ManhattanParams),
    TraceFile { path: PathBuf },
}

impl Default for MobilitySpec {
    fn default() -> Self {
        MobilitySpec::ManhattanGrid(ManhattanParams::default())
    }
}

/// Vehicles that do not run the honest stack, by type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackerMix {
    pub unconnected: usize,
    pub spam: usize,
    pub replay: usize,
    pub silence: usize,
}

impl AttackerMix {
    pub fn total(&self) -> usize {
        self.unconnected + self.spam + self.replay + self.silence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub mobility: MobilitySpec,
    pub duration_ticks: u64,
    pub seed: u64,
    pub mode: Mode,
    pub channel: ChannelParams,
    pub perception: PerceptionParams,
    pub attackers: AttackerMix,
    pub station: StationConfig,
    /// Per-vehicle, per-tick probability of switching pseudonym.
    pub pseudonym_change_probability: f64,
    /// Fabricated objects per spam CPM.
    pub spam_fabrication_count: usize,
    /// Steady state starts at this fraction of the run.
    pub steady_state_start: f64,
    /// TTV histogram bucket width, seconds.
    pub ttv_bucket_s: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            mobility: MobilitySpec::default(),
            duration_ticks: 7200,
            seed: 1,
            mode: Mode::ProofOfTraffic(3),
            channel: ChannelParams::default(),
            perception: PerceptionParams::default(),
            attackers: AttackerMix::default(),
            station: StationConfig::default(),
            pseudonym_change_probability: 1.0 / 43200.0,
            spam_fabrication_count: 8,
            steady_state_start: 0.5,
            ttv_bucket_s: 1,
        }
    }
}

impl ScenarioSpec {
    /// Checks everything except trace contents, which are validated on load.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration_ticks == 0 {
            return Err(invalid("duration_ticks", "must be at least 1"));
        }
        if let MobilitySpec::ManhattanGrid(p) = &self.mobility {
            p.validate().map_err(|r| invalid("mobility", r))?;
            if self.attackers.total() > p.n_vehicles {
                return Err(invalid(
                    "attackers",
                    format!("{} special vehicles exceed n_vehicles = {}", self.attackers.total(), p.n_vehicles),
                ));
            }
        }
        self.channel.validate().map_err(|f| invalid(&format!("channel.{f}"), "out of range"))?;
        self.perception.validate().map_err(|f| invalid(&format!("perception.{f}"), "must be positive"))?;
        self.station.validate().map_err(|e| invalid("station", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.pseudonym_change_probability) {
            return Err(invalid("pseudonym_change_probability", "must be in [0, 1]"));
        }
        if self.spam_fabrication_count > crate::wire::MAX_PROOFS_PER_CPM {
            return Err(invalid("spam_fabrication_count", "at most 8 (one proof per fabricated object)"));
        }
        if !(0.0..1.0).contains(&self.steady_state_start) {
            return Err(invalid("steady_state_start", "must be in [0, 1)"));
        }
        if self.ttv_bucket_s == 0 {
            return Err(invalid("ttv_bucket_s", "must be positive"));
        }
        Ok(())
    }

    /// Station configuration with the mode's repeat interval applied.
    pub fn effective_station(&self) -> StationConfig {
        let mut c = self.station;
        if let Mode::ProofOfTraffic(n) = self.mode {
            c.proof_repeat_interval = n;
        }
        c
    }

    pub fn steady_state_first_tick(&self) -> u64 {
        (self.duration_ticks as f64 * self.steady_state_start).floor() as u64
    }
}
