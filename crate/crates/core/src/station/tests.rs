use super::*;
use crate::crypto::{derive_keypair, recover_public_key};

fn pot(pseudonym: u32) -> Station {
    Station::new(StationConfig::default(), StationMode::ProofOfTraffic, pseudonym, RecoveryCache::new())
}

fn beacon(from: u32, tick: u64) -> CpmMessage {
    CpmMessage { sender_pseudonym: from, tick, ..Default::default() }
}

fn plate(n: u32) -> Vec<u8> {
    format!("PLATE-{n}").into_bytes()
}

fn obs(pseudonym: u32) -> Observation {
    Observation { pseudonym: Some(pseudonym), plate: plate(pseudonym), offset: (10.0, 0.0), velocity: (5.0, 0.0) }
}

/// A prover that has heard `targets` and sees them at `tick`.
fn prover_seeing(own: u32, targets: &[u32], tick: u64) -> Station {
    let mut s = pot(own);
    for &t in targets {
        s.handle_cpm(&beacon(t, tick), tick);
    }
    let observations: Vec<_> = targets.iter().map(|&t| obs(t)).collect();
    s.ingest_local_perception(&observations, tick);
    s
}

fn conservation_holds(s: &Station) -> bool {
    let d = s.diagnostics();
    d.received_objects == d.released_objects + d.rejected_objects + d.expired_objects + s.stashed_count() as u64
}

#[test]
fn local_observation_reaches_planner_same_tick() {
    let mut s = pot(1);
    s.ingest_local_perception(&[obs(2)], 5);
    let fed = s.drain_planner();
    assert_eq!(fed.len(), 1);
    assert_eq!(fed[0].source, PlannerSource::Local);
}

#[test]
fn reobserved_target_counts_once() {
    let mut s = pot(1);
    s.ingest_local_perception(&[obs(2)], 1);
    s.ingest_local_perception(&[obs(2)], 2);
    assert_eq!(s.local_identity_count(), 1);
}

#[test]
fn seen_but_not_heard_creates_no_proof() {
    let mut s = pot(1);
    s.ingest_local_perception(&[obs(2)], 1);
    assert_eq!(s.drain_planner().len(), 1);
    let cpm = s.build_cpm(1);
    assert_eq!(cpm.objects.len(), 1);
    assert!(cpm.proofs.is_empty());
    // An unconnected target never carries a pseudonym at all.
    let mut s = pot(1);
    let silent = Observation { pseudonym: None, ..obs(3) };
    s.ingest_local_perception(&[silent], 1);
    assert!(s.build_cpm(1).proofs.is_empty());
}

#[test]
fn inclusion_caps_at_eight_excluding_most_recent() {
    let cfg = StationConfig { proof_repeat_interval: 1, ..Default::default() };
    let mut s = Station::new(cfg, StationMode::ProofOfTraffic, 1, RecoveryCache::new());
    let targets: Vec<u32> = (100..110).collect();
    for &t in &targets {
        s.handle_cpm(&beacon(t, 0), 0);
    }
    let all: Vec<_> = targets.iter().map(|&t| obs(t)).collect();
    // Tick 0: only targets 108 and 109 visible, so they get proved first.
    s.ingest_local_perception(&all[8..], 0);
    assert_eq!(s.build_cpm(0).proofs.len(), 2);
    s.ingest_local_perception(&all, 1);
    let cpm = s.build_cpm(1);
    assert_eq!(cpm.proofs.len(), 8);
    let proved: Vec<u32> = cpm.proofs.iter().map(|p| p.pid_prefix).collect();
    assert!(!proved.contains(&108) && !proved.contains(&109));
}

#[test]
fn repeat_interval_spacing() {
    let mut s = prover_seeing(1, &[7], 10);
    assert_eq!(s.build_cpm(10).proofs.len(), 1);
    for tick in [11, 12] {
        s.handle_cpm(&beacon(7, tick), tick);
        s.ingest_local_perception(&[obs(7)], tick);
        assert!(s.build_cpm(tick).proofs.is_empty(), "tick {tick}");
    }
    s.ingest_local_perception(&[obs(7)], 13);
    assert_eq!(s.build_cpm(13).proofs.len(), 1);
}

#[test]
fn no_linked_targets_sends_objects_only() {
    let mut s = pot(1);
    s.ingest_local_perception(&[obs(4), obs(5)], 0);
    let cpm = s.build_cpm(0);
    assert_eq!(cpm.objects.len(), 2);
    assert!(cpm.proofs.is_empty());
}

#[test]
fn proofs_recover_to_target_key() {
    let mut s = prover_seeing(1, &[7], 0);
    let cpm = s.build_cpm(0);
    let proof = cpm.proofs[0].to_proof(&cpm.salt());
    let secret = SharedSecret::new(7, plate(7)).unwrap();
    assert_eq!(recover_public_key(&proof).unwrap(), derive_keypair(&secret, KdfConfig::PLAIN).1);
}

#[test]
fn two_provers_verify_with_ttv() {
    let mut a = prover_seeing(10, &[7], 3);
    let mut b = prover_seeing(11, &[7], 5);
    let mut v = pot(99);
    let cpm_a = a.build_cpm(3);
    assert!(v.handle_cpm(&cpm_a, 3).is_empty());
    assert!(v.drain_planner().is_empty());
    let cpm_b = b.build_cpm(5);
    let events = v.handle_cpm(&cpm_b, 5);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].ttv, Some(2));
    assert_eq!(events[0].provers, vec![10, 11]);
    // Both senders' objects are released: A's from the stash, B's now.
    let released = v.drain_planner();
    let senders: HashSet<u32> = released
        .iter()
        .map(|p| match p.source {
            PlannerSource::Remote { sender, .. } => sender,
            PlannerSource::Local => unreachable!(),
        })
        .collect();
    assert_eq!(senders, HashSet::from([10, 11]));
    assert!(conservation_holds(&v));
    // Later objects from a linked sender flow straight through.
    v.handle_cpm(&a.build_cpm(4), 6);
    assert_eq!(v.drain_planner().len(), 1);
}

#[test]
fn same_tick_arrivals_give_zero_ttv() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut b = prover_seeing(11, &[7], 0);
    let mut v = pot(99);
    v.handle_cpm(&a.build_cpm(0), 0);
    let events = v.handle_cpm(&b.build_cpm(0), 0);
    assert_eq!(events[0].ttv, Some(0));
}

#[test]
fn same_prover_cannot_self_corroborate() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = pot(99);
    let first = a.build_cpm(0);
    assert!(v.handle_cpm(&first, 0).is_empty());
    assert!(v.handle_cpm(&first, 1).is_empty());
    assert_eq!(v.database().pending_from(10), 1);
    assert_eq!(v.database().spam_counter(10), 1);
}

#[test]
fn replay_under_other_sender_never_corroborates() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = pot(99);
    let genuine = a.build_cpm(0);
    v.handle_cpm(&genuine, 0);
    let replay = CpmMessage { sender_pseudonym: 666, ..genuine.clone() };
    assert!(v.handle_cpm(&replay, 0).is_empty());
    let genuine_key = recover_public_key(&genuine.proofs[0].to_proof(&genuine.salt())).unwrap();
    let replay_key = recover_public_key(&replay.proofs[0].to_proof(&replay.salt())).unwrap();
    assert_ne!(genuine_key, replay_key);
    assert!(!v.database().is_verified(&genuine_key));
    assert_eq!(v.database().pending().len(), 2);
}

#[test]
fn pending_entry_expires_after_ttl() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = pot(99);
    v.handle_cpm(&a.build_cpm(0), 0);
    v.expire_state(30);
    assert_eq!(v.database().pending_from(10), 1);
    v.expire_state(31);
    assert_eq!(v.database().pending_from(10), 0);
    assert_eq!(v.database().spam_counter(10), 0);
    assert_eq!(v.diagnostics().expired_objects, 1);
    assert!(conservation_holds(&v));
}

#[test]
fn spam_limit_caps_pending_entries() {
    let cfg = StationConfig { spam_limit: 5, ..Default::default() };
    let mut v = Station::new(cfg, StationMode::ProofOfTraffic, 99, RecoveryCache::new());
    let mut next_id = 0u16;
    for tick in 0..4 {
        let mut cpm = beacon(666, tick);
        for i in 0..8u32 {
            let secret = SharedSecret::new(1000 + next_id as u32, b"FAKE".to_vec()).unwrap();
            let proof = crate::crypto::sign_proof(&secret, &666u32.to_be_bytes(), KdfConfig::PLAIN).unwrap();
            cpm.objects.push(PerceivedObject::from_metric(next_id, (1.0, 1.0), (0.0, 0.0)));
            cpm.proofs.push(ProofEntry::from_proof(next_id, i, &proof));
            next_id += 1;
        }
        v.handle_cpm(&cpm, tick);
        assert!(v.database().pending_from(666) <= 5);
    }
    assert_eq!(v.database().pending_from(666), 5);
    assert_eq!(v.diagnostics().spam_rejections, 27);
    assert_eq!(v.diagnostics().rejected_objects, 27);
    assert!(conservation_holds(&v));
}

#[test]
fn corrupted_entry_is_dropped() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = pot(99);
    let mut cpm = a.build_cpm(0);
    cpm.proofs[0].r = [0; 32];
    assert!(v.handle_cpm(&cpm, 0).is_empty());
    assert_eq!(v.diagnostics().recovery_failures, 1);
    assert_eq!(v.diagnostics().rejected_objects, 1);
    assert!(v.database().pending().is_empty());
}

#[test]
fn ego_knowledge_verifies_single_proof() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = prover_seeing(99, &[7], 0);
    v.drain_planner();
    let events = v.handle_cpm(&a.build_cpm(0), 0);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].ttv, None);
    assert_eq!(v.diagnostics().ego_verifications, 1);
}

#[test]
fn pseudonym_change_keeps_key_changes_salt() {
    let mut a = prover_seeing(10, &[7], 0);
    let before = a.build_cpm(0);
    a.change_pseudonym(20, 1);
    a.ingest_local_perception(&[obs(7)], 1);
    let after = a.build_cpm(1);
    // last_proof_sent was reset, so the target is proved again right away.
    assert_eq!(after.proofs.len(), 1);
    assert_eq!(after.sender_pseudonym, 20);
    let k0 = recover_public_key(&before.proofs[0].to_proof(&before.salt())).unwrap();
    let k1 = recover_public_key(&after.proofs[0].to_proof(&after.salt())).unwrap();
    assert_eq!(k0, k1);
    assert_ne!(before.salt(), after.salt());
}

#[test]
fn prover_pseudonym_change_looks_like_two_provers() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut v = pot(99);
    v.handle_cpm(&a.build_cpm(0), 0);
    a.change_pseudonym(20, 1);
    a.ingest_local_perception(&[obs(7)], 1);
    let events = v.handle_cpm(&a.build_cpm(1), 1);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].provers, vec![10, 20]);
}

#[test]
fn target_pseudonym_change_invalidates_verified_key() {
    let mut a = prover_seeing(10, &[7], 0);
    let mut b = prover_seeing(11, &[7], 0);
    let mut v = pot(99);
    v.handle_cpm(&a.build_cpm(0), 0);
    v.handle_cpm(&b.build_cpm(0), 0);
    assert_eq!(v.database().verified().len(), 1);
    let old_key = *v.database().verified().keys().next().unwrap();

    // Target 7 becomes 8; same plate, same physical track at both provers.
    let renamed = Observation { pseudonym: Some(8), ..obs(7) };
    for (s, tick) in [(&mut a, 5), (&mut b, 5)] {
        s.handle_cpm(&beacon(8, tick), tick);
        s.ingest_local_perception(std::slice::from_ref(&renamed), tick);
    }
    assert!(v.handle_cpm(&a.build_cpm(5), 5).is_empty());
    assert!(!v.database().is_verified(&old_key));
    assert_eq!(v.diagnostics().invalidations, 1);
    let events = v.handle_cpm(&b.build_cpm(5), 5);
    assert_eq!(events.len(), 1);
    assert_ne!(events[0].key, old_key);
}

#[test]
fn conventional_station_forwards_everything() {
    let mut s = Station::new(StationConfig::default(), StationMode::Conventional, 1, RecoveryCache::new());
    s.handle_cpm(&beacon(7, 0), 0);
    s.ingest_local_perception(&[obs(7)], 0);
    let cpm = s.build_cpm(0);
    assert!(cpm.proofs.is_empty());
    let mut v = Station::new(StationConfig::default(), StationMode::Conventional, 2, RecoveryCache::new());
    v.handle_cpm(&cpm, 0);
    assert_eq!(v.drain_planner().len(), 1);
}

#[test]
fn config_validation() {
    assert!(StationConfig::default().validate().is_ok());
    let bad = StationConfig { max_proofs_per_cpm: 9, ..Default::default() };
    assert_eq!(bad.validate(), Err(StationError::TooManyProofs(9)));
    let bad = StationConfig { pending_ttl: 0, ..Default::default() };
    assert!(bad.validate().is_err());
}
