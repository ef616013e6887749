//! Lossy broadcast: range cut-off plus one independent delivery draw per
//! in-range receiver.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub range_m: f64,
    pub pdr: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { range_m: 300.0, pdr: 0.8 }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.range_m > 0.0 && self.range_m.is_finite()) {
            return Err("range_m");
        }
        if !(0.0..=1.0).contains(&self.pdr) {
            return Err("pdr");
        }
        Ok(())
    }

    pub fn in_range(&self, a: Vec2, b: Vec2) -> bool {
        a.distance(b) <= self.range_m
    }
}

/// Receivers of each broadcast. `senders` and `receivers` are `(slot,
/// position)`; the result holds one list of receiver slots per sender, in
/// receiver order. Draws are consumed sender by sender, receiver by
/// receiver, so outcomes depend only on the rng state and the inputs.
pub fn deliver_broadcasts<R: Rng>(
    params: &ChannelParams,
    senders: &[(usize, Vec2)],
    receivers: &[(usize, Vec2)],
    rng: &mut R,
) -> Vec<Vec<usize>> {
    senders
        .iter()
        .map(|&(s, sp)| {
            receivers
                .iter()
                .filter(|&&(r, rp)| r != s && params.in_range(sp, rp))
                .filter(|_| rng.gen_bool(params.pdr))
                .map(|&(r, _)| r)
                .collect()
        })
        .collect()
}
