//! Deterministic tick-based city simulation: grid or trace mobility,
//! occlusion-aware cameras, a lossy broadcast channel, honest and attacking
//! vehicles, and ground-truth metrics.

pub mod channel;
pub mod geometry;
pub mod metrics;
pub mod mobility;
pub mod output;
pub mod perception;
pub mod rng;
pub mod scenario;
pub mod trace;
pub mod world;

pub use channel::{deliver_broadcasts, ChannelParams};
pub use metrics::MetricsLedger;
pub use mobility::{generate_manhattan, ManhattanParams, Mobility};
pub use perception::{compute_visibility, PerceptionParams};
pub use scenario::{AttackerMix, MobilitySpec, Mode, ScenarioError, ScenarioSpec};
pub use trace::{load_trace, TraceError};
pub use world::{Identity, Invariants, RunReport, Summary, VehicleKind, World, WorldError};
