//! Inputs shared by the benchmark targets.

use trafficproof::{CpmMessage, PerceivedObject, ProofEntry, SharedSecret};

pub fn secret(i: u32) -> SharedSecret {
    SharedSecret::new(0x5eed_0000 ^ i, format!("B-{i:05}")).expect("non-empty plate")
}

/// A CPM with `objects` perceived objects and proofs on the first `proofs`.
pub fn cpm(objects: u16, proofs: usize) -> CpmMessage {
    let objects: Vec<PerceivedObject> = (0..objects)
        .map(|i| PerceivedObject { object_id: i, x_cm: 120 * i as i16, y_cm: -40, vx_cms: 900, vy_cms: 0 })
        .collect();
    let proofs = objects
        .iter()
        .take(proofs)
        .map(|o| ProofEntry { object_id: o.object_id, pid_prefix: 7, v: true, r: [3; 32], s: [5; 32] })
        .collect();
    CpmMessage { sender_pseudonym: 42, tick: 1000, objects, proofs }
}
