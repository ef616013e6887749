//! Fixtures shared by the scenario tests and the acceptance target.
#![allow(dead_code)]

use std::collections::BTreeMap;

use trafficproof::sim::geometry::Pose;
use trafficproof::sim::trace::Trace;
use trafficproof::sim::{ChannelParams, Mobility, Mode, ScenarioSpec, World};
use trafficproof::{derive_keypair, KdfConfig, PublicPoint, RecoveryCache, SharedSecret};

pub fn stationary(poses: &[Pose], ticks: u64) -> Mobility {
    let mut rows: BTreeMap<u32, BTreeMap<u64, Pose>> = BTreeMap::new();
    for (id, p) in poses.iter().enumerate() {
        rows.insert(id as u32, (0..ticks).map(|t| (t, *p)).collect());
    }
    Mobility::Trace(Trace::from_rows(rows).unwrap())
}

/// A, B, C see one another's plates; D listens from 200 m away and sees
/// nobody.
pub fn trio_with_listener(ticks: u64) -> World {
    let poses = [
        Pose { x: 0.0, y: 0.0, heading_deg: 0.0 },
        Pose { x: 30.0, y: 0.0, heading_deg: 180.0 },
        Pose { x: 15.0, y: 15.0, heading_deg: 270.0 },
        Pose { x: 15.0, y: 200.0, heading_deg: 90.0 },
    ];
    let spec = ScenarioSpec {
        mode: Mode::ProofOfTraffic(3),
        duration_ticks: ticks,
        channel: ChannelParams { pdr: 1.0, ..Default::default() },
        pseudonym_change_probability: 0.0,
        ..Default::default()
    };
    World::with_mobility(spec, stationary(&poses, ticks), RecoveryCache::new()).unwrap()
}

pub fn key_of(world: &World, slot: usize) -> PublicPoint {
    let a = &world.agents()[slot];
    derive_keypair(&SharedSecret::new(a.pseudonym, a.plate.clone()).unwrap(), KdfConfig::PLAIN).1
}

pub fn verified(world: &World, slot: usize, key: &PublicPoint) -> bool {
    world.agents()[slot].station().unwrap().database().is_verified(key)
}

/// Steps the trio past tick 0 and returns, for each (verifier, target) pair
/// among A, B, C and the listener, the tick at which the target's key was
/// first verified.
pub fn trio_verification_ticks(world: &mut World, ticks: u64) -> [[Option<u64>; 3]; 4] {
    world.step().unwrap();
    let keys: Vec<PublicPoint> = (0..3).map(|s| key_of(world, s)).collect();
    let mut at = [[None; 3]; 4];
    while world.next_tick() < ticks {
        let tick = world.next_tick();
        world.step().unwrap();
        for (v, row) in at.iter_mut().enumerate() {
            for (t, cell) in row.iter_mut().enumerate() {
                if v != t && cell.is_none() && verified(world, v, &keys[t]) {
                    *cell = Some(tick);
                }
            }
        }
    }
    at
}
