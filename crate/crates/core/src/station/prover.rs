use std::collections::HashMap;

use crate::crypto::{
    derive_keypair, sign_with_scalar, KdfConfig, ProofScalar, PublicPoint, SharedSecret, TrafficProof,
};

#[derive(Debug, Clone)]
pub(crate) struct TargetState {
    pub last_seen: u64,
    pub last_proof_sent: Option<u64>,
}

#[derive(Debug, Clone)]
struct KeyMaterial {
    scalar: ProofScalar,
    public: PublicPoint,
    /// Proof salted with the current own pseudonym, if one was signed.
    proof: Option<TrafficProof>,
}

/// Prover-side bookkeeping: which linked targets were proved when, plus
/// memoized key material so repeated inclusion does not re-derive keys.
#[derive(Debug, Clone)]
pub struct ProverState {
    own_pseudonym: u32,
    pub(crate) targets: HashMap<SharedSecret, TargetState>,
    keys: HashMap<SharedSecret, KeyMaterial>,
    kdf: KdfConfig,
}

impl ProverState {
    pub fn new(own_pseudonym: u32, kdf: KdfConfig) -> Self {
        Self { own_pseudonym, targets: HashMap::new(), keys: HashMap::new(), kdf }
    }

    pub fn own_pseudonym(&self) -> u32 {
        self.own_pseudonym
    }

    pub fn last_proof_sent(&self, target: &SharedSecret) -> Option<u64> {
        self.targets.get(target).and_then(|t| t.last_proof_sent)
    }

    pub(crate) fn touch(&mut self, target: &SharedSecret, tick: u64) -> PublicPoint {
        self.targets
            .entry(target.clone())
            .and_modify(|t| t.last_seen = tick)
            .or_insert(TargetState { last_seen: tick, last_proof_sent: None });
        self.material(target).public
    }

    fn material(&mut self, target: &SharedSecret) -> &mut KeyMaterial {
        let kdf = self.kdf;
        self.keys.entry(target.clone()).or_insert_with(|| {
            let (scalar, public) = derive_keypair(target, kdf);
            KeyMaterial { scalar, public, proof: None }
        })
    }

    pub(crate) fn proof_for(&mut self, target: &SharedSecret) -> TrafficProof {
        let salt = self.own_pseudonym.to_be_bytes();
        let material = self.material(target);
        material
            .proof
            .get_or_insert_with(|| sign_with_scalar(&material.scalar, &salt).expect("salt is 4 bytes"))
            .clone()
    }

    pub(crate) fn mark_sent(&mut self, target: &SharedSecret, tick: u64) {
        if let Some(t) = self.targets.get_mut(target) {
            t.last_proof_sent = Some(tick);
        }
    }

    pub(crate) fn change_pseudonym(&mut self, new_pseudonym: u32) {
        self.own_pseudonym = new_pseudonym;
        for t in self.targets.values_mut() {
            t.last_proof_sent = None;
        }
        for m in self.keys.values_mut() {
            m.proof = None;
        }
    }

    /// Drops targets unseen for longer than `ttl`; returns their keys.
    pub(crate) fn prune(&mut self, tick: u64, ttl: u64) -> Vec<PublicPoint> {
        let mut dropped = Vec::new();
        self.targets.retain(|secret, t| {
            let keep = tick.saturating_sub(t.last_seen) <= ttl;
            if !keep {
                if let Some(m) = self.keys.remove(secret) {
                    dropped.push(m.public);
                }
            }
            keep
        });
        dropped
    }
}
