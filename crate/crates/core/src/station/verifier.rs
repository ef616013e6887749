use std::collections::{BTreeMap, HashMap, HashSet};

use crate::crypto::{PublicPoint, RecoveryCache};
use crate::wire::{CpmMessage, PerceivedObject};

use super::{Diagnostics, PlannerInput, PlannerSource};

/// One prover's unmatched proof for a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingProof {
    pub prover_pseudonym: u32,
    pub pid_prefix: u32,
    pub first_seen: u64,
    pub last_seen: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StashedObject {
    pub sender: u32,
    pub received_tick: u64,
    pub object: PerceivedObject,
}

impl StashedObject {
    fn release(self) -> PlannerInput {
        PlannerInput {
            source: PlannerSource::Remote { sender: self.sender, received_tick: self.received_tick },
            object: self.object,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PendingBucket {
    pub proofs: Vec<PendingProof>,
    pub stash: Vec<StashedObject>,
}

impl PendingBucket {
    fn first_seen(&self) -> Option<u64> {
        self.proofs.iter().map(|p| p.first_seen).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedRecord {
    pub matched_tick: u64,
    pub provers: Vec<u32>,
    pub pid_prefix: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationEvent {
    pub key: PublicPoint,
    pub tick: u64,
    /// Seconds from the first pending proof to the match. `None` when the
    /// ego's own knowledge of the secret verified a single remote proof.
    pub ttv: Option<u64>,
    pub provers: Vec<u32>,
    pub released: Vec<PlannerInput>,
}

#[derive(Debug, Clone)]
struct Link {
    key: PublicPoint,
    pid_prefix: u32,
    last_seen: u64,
}

/// Pending proofs, verified keys, per-prover spam counters, and the objects
/// held back until their key verifies.
#[derive(Debug, Clone, Default)]
pub struct VerifierDatabase {
    pending: BTreeMap<PublicPoint, PendingBucket>,
    verified: HashMap<PublicPoint, VerifiedRecord>,
    spam_counters: HashMap<u32, u32>,
    /// (sender, object id) -> key, learned from that sender's proof entries.
    links: HashMap<(u32, u16), Link>,
    /// Objects whose sender has not yet proved them.
    unlinked: BTreeMap<(u32, u16), Vec<StashedObject>>,
}

pub(crate) struct Context<'a> {
    pub recovery: &'a RecoveryCache,
    pub own_keys: &'a HashSet<PublicPoint>,
    pub spam_limit: u32,
    pub diagnostics: &'a mut Diagnostics,
    pub planner: &'a mut Vec<PlannerInput>,
}

impl VerifierDatabase {
    pub fn is_verified(&self, key: &PublicPoint) -> bool {
        self.verified.contains_key(key)
    }

    pub fn is_pending(&self, key: &PublicPoint) -> bool {
        self.pending.contains_key(key)
    }

    pub fn verified(&self) -> &HashMap<PublicPoint, VerifiedRecord> {
        &self.verified
    }

    pub fn pending(&self) -> &BTreeMap<PublicPoint, PendingBucket> {
        &self.pending
    }

    pub fn spam_counter(&self, prover: u32) -> u32 {
        self.spam_counters.get(&prover).copied().unwrap_or(0)
    }

    /// Pending entries attributed to `prover`, counted directly.
    pub fn pending_from(&self, prover: u32) -> usize {
        self.pending.values().flat_map(|b| b.proofs.iter()).filter(|p| p.prover_pseudonym == prover).count()
    }

    /// Prover with the most pending entries, with that count.
    pub fn max_pending_per_prover(&self) -> Option<(u32, usize)> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for p in self.pending.values().flat_map(|b| b.proofs.iter()) {
            *counts.entry(p.prover_pseudonym).or_default() += 1;
        }
        counts.into_iter().max_by_key(|&(p, c)| (c, std::cmp::Reverse(p)))
    }

    pub fn stashed_count(&self) -> usize {
        self.pending.values().map(|b| b.stash.len()).sum::<usize>()
            + self.unlinked.values().map(Vec::len).sum::<usize>()
    }

    fn decrement(&mut self, prover: u32) {
        if let Some(c) = self.spam_counters.get_mut(&prover) {
            *c = c.saturating_sub(1);
            if *c == 0 {
                self.spam_counters.remove(&prover);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn mark_verified(
        &mut self,
        key: PublicPoint,
        tick: u64,
        pid_prefix: u32,
        sender: u32,
        ttv_eligible: bool,
        ctx: &mut Context<'_>,
        carried: Vec<StashedObject>,
    ) -> VerificationEvent {
        let bucket = self.pending.remove(&key).unwrap_or_default();
        let ttv = if ttv_eligible { bucket.first_seen().map(|first| tick - first) } else { None };
        let mut provers: Vec<u32> = bucket.proofs.iter().map(|p| p.prover_pseudonym).collect();
        for p in &provers {
            self.decrement(*p);
        }
        if !provers.contains(&sender) {
            provers.push(sender);
        }
        let released: Vec<PlannerInput> = bucket.stash.into_iter().chain(carried).map(StashedObject::release).collect();
        ctx.diagnostics.released_objects += released.len() as u64;
        ctx.planner.extend(released.iter().cloned());
        if ttv_eligible {
            ctx.diagnostics.verifications += 1;
        } else {
            ctx.diagnostics.ego_verifications += 1;
        }
        self.verified.insert(key, VerifiedRecord { matched_tick: tick, provers: provers.clone(), pid_prefix });
        VerificationEvent { key, tick, ttv, provers, released }
    }

    pub(crate) fn handle(&mut self, msg: &CpmMessage, tick: u64, ctx: &mut Context<'_>) -> Vec<VerificationEvent> {
        let sender = msg.sender_pseudonym;
        let salt = msg.salt();
        let mut events = Vec::new();
        let mut rejected: HashSet<u16> = HashSet::new();

        for entry in &msg.proofs {
            ctx.diagnostics.proof_entries_received += 1;
            if self.spam_counter(sender) >= ctx.spam_limit {
                ctx.diagnostics.spam_rejections += 1;
                rejected.insert(entry.object_id);
                continue;
            }
            let key = match ctx.recovery.recover(&entry.to_proof(&salt)) {
                Ok(key) => key,
                Err(_) => {
                    ctx.diagnostics.recovery_failures += 1;
                    rejected.insert(entry.object_id);
                    continue;
                }
            };

            let link_id = (sender, entry.object_id);
            let previous = self.links.insert(link_id, Link { key, pid_prefix: entry.pid_prefix, last_seen: tick });
            if let Some(prev) = previous {
                // Same track, new target pseudonym: the old key's epoch is over.
                if prev.key != key && prev.pid_prefix != entry.pid_prefix && self.verified.remove(&prev.key).is_some() {
                    ctx.diagnostics.invalidations += 1;
                }
            }
            let carried = self.unlinked.remove(&link_id).unwrap_or_default();

            if self.verified.contains_key(&key) {
                ctx.diagnostics.released_objects += carried.len() as u64;
                ctx.planner.extend(carried.into_iter().map(StashedObject::release));
                continue;
            }
            if ctx.own_keys.contains(&key) {
                events.push(self.mark_verified(key, tick, entry.pid_prefix, sender, false, ctx, carried));
                continue;
            }
            let bucket = self.pending.entry(key).or_default();
            if bucket.proofs.iter().any(|p| p.prover_pseudonym != sender) {
                events.push(self.mark_verified(key, tick, entry.pid_prefix, sender, true, ctx, carried));
                continue;
            }
            bucket.stash.extend(carried);
            if let Some(p) = bucket.proofs.iter_mut().find(|p| p.prover_pseudonym == sender) {
                p.last_seen = tick;
                p.pid_prefix = entry.pid_prefix;
            } else {
                bucket.proofs.push(PendingProof {
                    prover_pseudonym: sender,
                    pid_prefix: entry.pid_prefix,
                    first_seen: tick,
                    last_seen: tick,
                });
                *self.spam_counters.entry(sender).or_default() += 1;
            }
        }

        for object in &msg.objects {
            ctx.diagnostics.received_objects += 1;
            if rejected.contains(&object.object_id) {
                ctx.diagnostics.rejected_objects += 1;
                continue;
            }
            let stashed = StashedObject { sender, received_tick: tick, object: *object };
            let link = self.links.get_mut(&(sender, object.object_id));
            match link {
                Some(link) if self.verified.contains_key(&link.key) => {
                    link.last_seen = tick;
                    ctx.diagnostics.released_objects += 1;
                    ctx.planner.push(stashed.release());
                }
                Some(link) if self.pending.contains_key(&link.key) => {
                    link.last_seen = tick;
                    let key = link.key;
                    self.pending.get_mut(&key).expect("checked above").stash.push(stashed);
                }
                _ => self.unlinked.entry((sender, object.object_id)).or_default().push(stashed),
            }
        }
        events
    }

    pub(crate) fn expire(&mut self, tick: u64, ttl: u64, diagnostics: &mut Diagnostics) {
        let stale = |t: u64| tick.saturating_sub(t) > ttl;
        let mut expired_provers = Vec::new();
        let mut expired_objects = 0u64;
        self.pending.retain(|_, bucket| {
            bucket.proofs.retain(|p| {
                let keep = !stale(p.last_seen);
                if !keep {
                    expired_provers.push(p.prover_pseudonym);
                }
                keep
            });
            if bucket.proofs.is_empty() {
                expired_objects += bucket.stash.len() as u64;
                return false;
            }
            let before = bucket.stash.len();
            bucket.stash.retain(|o| !stale(o.received_tick));
            expired_objects += (before - bucket.stash.len()) as u64;
            true
        });
        self.unlinked.retain(|_, stash| {
            let before = stash.len();
            stash.retain(|o| !stale(o.received_tick));
            expired_objects += (before - stash.len()) as u64;
            !stash.is_empty()
        });
        self.links.retain(|_, l| !stale(l.last_seen));
        diagnostics.expired_proofs += expired_provers.len() as u64;
        diagnostics.expired_objects += expired_objects;
        for p in expired_provers {
            self.decrement(p);
        }
    }
}
