//! On-board cooperative perception stack with the proof extension.
//!
//! The prover side turns local observations into CPMs and attaches proofs
//! for targets that were both seen (plate) and heard (pseudonym). The
//! verifier side is a gate in front of the planner: received objects are
//! held until two distinct provers corroborate their target.

mod prover;
mod verifier;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::crypto::{KdfConfig, PublicPoint, RecoveryCache, SharedSecret};
use crate::wire::{CpmMessage, PerceivedObject, ProofEntry, MAX_PROOFS_PER_CPM};

pub use prover::ProverState;
pub use verifier::{PendingBucket, PendingProof, StashedObject, VerificationEvent, VerifiedRecord, VerifierDatabase};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum StationError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("max_proofs_per_cpm must be at most {MAX_PROOFS_PER_CPM}, got {0}")]
    TooManyProofs(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationConfig {
    /// Minimum seconds between two proofs for the same target.
    pub proof_repeat_interval: u64,
    pub max_proofs_per_cpm: usize,
    /// Seconds an unmatched proof or stashed object is kept.
    pub pending_ttl: u64,
    /// Maximum unmatched proofs accepted from one prover pseudonym.
    pub spam_limit: u32,
    pub kdf: KdfConfig,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            proof_repeat_interval: 3,
            max_proofs_per_cpm: MAX_PROOFS_PER_CPM,
            pending_ttl: 30,
            spam_limit: 32,
            kdf: KdfConfig::PLAIN,
        }
    }
}

impl StationConfig {
    pub fn validate(&self) -> Result<(), StationError> {
        if self.proof_repeat_interval == 0 {
            return Err(StationError::NotPositive("proof_repeat_interval"));
        }
        if self.max_proofs_per_cpm == 0 {
            return Err(StationError::NotPositive("max_proofs_per_cpm"));
        }
        if self.max_proofs_per_cpm > MAX_PROOFS_PER_CPM {
            return Err(StationError::TooManyProofs(self.max_proofs_per_cpm));
        }
        if self.pending_ttl == 0 {
            return Err(StationError::NotPositive("pending_ttl"));
        }
        if self.spam_limit == 0 {
            return Err(StationError::NotPositive("spam_limit"));
        }
        if self.kdf.validate().is_err() {
            return Err(StationError::NotPositive("kdf.iterations"));
        }
        Ok(())
    }
}

/// Conventional stations forward every received object; proof-of-traffic
/// stations attach proofs and gate received objects on verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationMode {
    Conventional,
    ProofOfTraffic,
}

/// A target currently visible to the ego camera. `pseudonym` is the
/// target's V2X pseudonym if it broadcasts one; the station only links it to
/// the plate if it actually heard that pseudonym recently.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pseudonym: Option<u32>,
    pub plate: Vec<u8>,
    /// Offset from the ego, metres.
    pub offset: (f64, f64),
    pub velocity: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerSource {
    Local,
    Remote { sender: u32, received_tick: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlannerInput {
    pub source: PlannerSource,
    pub object: PerceivedObject,
}

/// Counters exported with the metrics. Every received object ends up in
/// exactly one of released, rejected, expired, or still stashed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub received_objects: u64,
    pub released_objects: u64,
    pub rejected_objects: u64,
    pub expired_objects: u64,
    pub proof_entries_received: u64,
    pub recovery_failures: u64,
    pub spam_rejections: u64,
    pub expired_proofs: u64,
    pub verifications: u64,
    pub ego_verifications: u64,
    pub invalidations: u64,
    pub proofs_sent: u64,
}

impl std::ops::AddAssign for Diagnostics {
    fn add_assign(&mut self, o: Self) {
        self.received_objects += o.received_objects;
        self.released_objects += o.released_objects;
        self.rejected_objects += o.rejected_objects;
        self.expired_objects += o.expired_objects;
        self.proof_entries_received += o.proof_entries_received;
        self.recovery_failures += o.recovery_failures;
        self.spam_rejections += o.spam_rejections;
        self.expired_proofs += o.expired_proofs;
        self.verifications += o.verifications;
        self.ego_verifications += o.ego_verifications;
        self.invalidations += o.invalidations;
        self.proofs_sent += o.proofs_sent;
    }
}

#[derive(Debug, Clone)]
struct Track {
    object_id: u16,
    last_seen: u64,
}

#[derive(Debug, Clone)]
struct Current {
    object: PerceivedObject,
    secret: Option<SharedSecret>,
}

#[derive(Debug, Clone)]
pub struct Station {
    config: StationConfig,
    mode: StationMode,
    recovery: RecoveryCache,
    prover: ProverState,
    tracks: HashMap<Vec<u8>, Track>,
    next_object_id: u16,
    current: Vec<Current>,
    local_plates: HashSet<Vec<u8>>,
    heard: HashMap<u32, u64>,
    own_keys: HashSet<PublicPoint>,
    db: VerifierDatabase,
    planner: Vec<PlannerInput>,
    diagnostics: Diagnostics,
}

impl Station {
    pub fn new(config: StationConfig, mode: StationMode, own_pseudonym: u32, recovery: RecoveryCache) -> Self {
        Self {
            config,
            mode,
            recovery,
            prover: ProverState::new(own_pseudonym, config.kdf),
            tracks: HashMap::new(),
            next_object_id: 0,
            current: Vec::new(),
            local_plates: HashSet::new(),
            heard: HashMap::new(),
            own_keys: HashSet::new(),
            db: VerifierDatabase::default(),
            planner: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn config(&self) -> &StationConfig {
        &self.config
    }

    pub fn mode(&self) -> StationMode {
        self.mode
    }

    pub fn own_pseudonym(&self) -> u32 {
        self.prover.own_pseudonym()
    }

    pub fn prover(&self) -> &ProverState {
        &self.prover
    }

    pub fn database(&self) -> &VerifierDatabase {
        &self.db
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    /// Distinct plates ever seen by the local camera.
    pub fn local_identity_count(&self) -> usize {
        self.local_plates.len()
    }

    pub fn has_heard(&self, pseudonym: u32, tick: u64) -> bool {
        self.heard.get(&pseudonym).is_some_and(|&t| tick.saturating_sub(t) <= self.config.pending_ttl)
    }

    /// Takes everything delivered to the planner since the last drain.
    pub fn drain_planner(&mut self) -> Vec<PlannerInput> {
        std::mem::take(&mut self.planner)
    }

    fn track_id(&mut self, plate: &[u8], tick: u64) -> u16 {
        if let Some(t) = self.tracks.get_mut(plate) {
            t.last_seen = tick;
            return t.object_id;
        }
        let id = self.next_object_id;
        self.next_object_id = self.next_object_id.wrapping_add(1);
        self.tracks.insert(plate.to_vec(), Track { object_id: id, last_seen: tick });
        id
    }

    /// Feeds this tick's camera observations to the planner and the prover.
    /// Returns the object id assigned to each observation, in order.
    pub fn ingest_local_perception(&mut self, observations: &[Observation], tick: u64) -> Vec<u16> {
        self.current.clear();
        let mut ids = Vec::with_capacity(observations.len());
        for obs in observations {
            let object_id = self.track_id(&obs.plate, tick);
            ids.push(object_id);
            let object = PerceivedObject::from_metric(object_id, obs.offset, obs.velocity);
            self.local_plates.insert(obs.plate.clone());
            self.planner.push(PlannerInput { source: PlannerSource::Local, object });
            let secret = match obs.pseudonym {
                Some(p) if self.mode == StationMode::ProofOfTraffic && self.has_heard(p, tick) => {
                    SharedSecret::new(p, obs.plate.clone()).ok()
                }
                _ => None,
            };
            if let Some(secret) = &secret {
                let key = self.prover.touch(secret, tick);
                self.own_keys.insert(key);
            }
            self.current.push(Current { object, secret });
        }
        self.current.sort_by_key(|c| c.object.object_id);
        ids
    }

    pub fn build_cpm(&mut self, tick: u64) -> CpmMessage {
        let objects: Vec<PerceivedObject> = self.current.iter().map(|c| c.object).collect();
        let mut proofs = Vec::new();
        if self.mode == StationMode::ProofOfTraffic {
            let interval = self.config.proof_repeat_interval;
            let mut eligible: Vec<(Option<u64>, u16, SharedSecret)> = self
                .current
                .iter()
                .filter_map(|c| c.secret.as_ref().map(|s| (c.object.object_id, s)))
                .map(|(id, s)| (self.prover.last_proof_sent(s), id, s.clone()))
                .filter(|(last, _, _)| last.is_none_or(|t| tick.saturating_sub(t) >= interval))
                .collect();
            // Never-proved targets sort first (None < Some), then oldest, then lowest id.
            eligible.sort_by_key(|a| (a.0, a.1));
            eligible.truncate(self.config.max_proofs_per_cpm);
            for (_, object_id, secret) in eligible {
                let proof = self.prover.proof_for(&secret);
                self.prover.mark_sent(&secret, tick);
                proofs.push(ProofEntry::from_proof(object_id, secret.station_id(), &proof));
            }
            self.diagnostics.proofs_sent += proofs.len() as u64;
        }
        CpmMessage { sender_pseudonym: self.own_pseudonym(), tick, objects, proofs }
    }

    pub fn handle_cpm(&mut self, msg: &CpmMessage, tick: u64) -> Vec<VerificationEvent> {
        self.heard.insert(msg.sender_pseudonym, tick);
        if self.mode == StationMode::Conventional {
            let sender = msg.sender_pseudonym;
            self.diagnostics.received_objects += msg.objects.len() as u64;
            self.diagnostics.released_objects += msg.objects.len() as u64;
            self.planner.extend(
                msg.objects.iter().map(|&object| PlannerInput {
                    source: PlannerSource::Remote { sender, received_tick: tick },
                    object,
                }),
            );
            return Vec::new();
        }
        let mut ctx = verifier::Context {
            recovery: &self.recovery,
            own_keys: &self.own_keys,
            spam_limit: self.config.spam_limit,
            diagnostics: &mut self.diagnostics,
            planner: &mut self.planner,
        };
        self.db.handle(msg, tick, &mut ctx)
    }

    pub fn expire_state(&mut self, tick: u64) {
        let ttl = self.config.pending_ttl;
        self.db.expire(tick, ttl, &mut self.diagnostics);
        self.heard.retain(|_, &mut t| tick.saturating_sub(t) <= ttl);
        self.tracks.retain(|_, t| tick.saturating_sub(t.last_seen) <= ttl);
        for key in self.prover.prune(tick, ttl) {
            self.own_keys.remove(&key);
        }
    }

    pub fn change_pseudonym(&mut self, new_pseudonym: u32, _tick: u64) {
        self.prover.change_pseudonym(new_pseudonym);
    }

    /// Objects currently held back awaiting verification.
    pub fn stashed_count(&self) -> usize {
        self.db.stashed_count()
    }
}

#[cfg(test)]
mod tests;
