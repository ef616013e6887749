//! Ground-truth accounting: local, received, and planner identity sets per
//! observer, TTV samples, and per-tick transmission volume.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

/// Distinct ground-truth identities known to one observer.
#[derive(Debug, Clone, Default)]
pub struct ObserverSets {
    pub vehicle_id: u32,
    /// Seen by the ego camera.
    pub local: HashSet<u32>,
    /// Carried in any CPM delivered to the ego.
    pub received: HashSet<u32>,
    /// Delivered to the ego planner (local or released remote).
    pub all: HashSet<u32>,
}

impl ObserverSets {
    /// `(|N_a \ N_l|) / (|N_r \ N_l|)`, absent when nothing was received
    /// beyond local perception.
    pub fn verification_ratio(&self) -> Option<f64> {
        verification_ratio(&self.local, &self.received, &self.all)
    }
}

pub fn verification_ratio(local: &HashSet<u32>, received: &HashSet<u32>, all: &HashSet<u32>) -> Option<f64> {
    let denom = received.difference(local).count();
    if denom == 0 {
        return None;
    }
    Some(all.difference(local).count() as f64 / denom as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TickTx {
    pub messages: u64,
    pub objects: u64,
    pub proofs: u64,
    pub bytes: u64,
    /// Vehicles with a V2X stack present this tick.
    pub connected: u64,
}

impl TickTx {
    /// Mean bits per second per connected vehicle.
    pub fn mean_bps(&self) -> f64 {
        if self.connected == 0 {
            0.0
        } else {
            8.0 * self.bytes as f64 / self.connected as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TtvSample {
    pub tick: u64,
    pub seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TtvBucket {
    pub hour: u64,
    pub start_s: u64,
    pub count: u64,
    /// Share of that hour's samples.
    pub fraction: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsLedger {
    pub total_vehicles: usize,
    pub observers: Vec<ObserverSets>,
    pub ttv_samples: Vec<TtvSample>,
    pub tx: Vec<TickTx>,
    /// Mean |N_a| / total_vehicles over observers, per tick.
    pub coverage: Vec<f64>,
}

impl MetricsLedger {
    pub fn new(total_vehicles: usize, observer_ids: &[u32]) -> Self {
        Self {
            total_vehicles,
            observers: observer_ids
                .iter()
                .map(|&vehicle_id| ObserverSets { vehicle_id, ..Default::default() })
                .collect(),
            ..Default::default()
        }
    }

    /// Appends this tick's coverage; call once per tick after all updates.
    pub fn close_tick(&mut self) {
        let c = if self.observers.is_empty() || self.total_vehicles == 0 {
            0.0
        } else {
            let sum: usize = self.observers.iter().map(|o| o.all.len()).sum();
            sum as f64 / (self.observers.len() * self.total_vehicles) as f64
        };
        self.coverage.push(c);
    }

    /// First tick at which mean coverage reaches `threshold`.
    pub fn ticks_to_coverage(&self, threshold: f64) -> Option<u64> {
        self.coverage.iter().position(|&c| c >= threshold).map(|t| t as u64)
    }

    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.observers.iter().map(ObserverSets::verification_ratio).collect()
    }

    /// Mean of the defined per-observer ratios.
    pub fn mean_verification_ratio(&self) -> Option<f64> {
        let defined: Vec<f64> = self.ratios().into_iter().flatten().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }

    pub fn bandwidth_series(&self) -> Vec<f64> {
        self.tx.iter().map(TickTx::mean_bps).collect()
    }

    /// Mean of the per-tick bandwidth over ticks `from..`.
    pub fn mean_bandwidth_from(&self, from: u64) -> f64 {
        let s = self.bandwidth_series();
        let tail = s.get(from as usize..).unwrap_or(&[]);
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }

    pub fn ttv_from(&self, from: u64) -> impl Iterator<Item = u64> + '_ {
        self.ttv_samples.iter().filter(move |s| s.tick >= from).map(|s| s.seconds)
    }

    /// Share of samples at or after `from` whose TTV is at most `limit_s`.
    pub fn ttv_share_within(&self, from: u64, limit_s: u64) -> Option<f64> {
        let (mut n, mut hit) = (0u64, 0u64);
        for s in self.ttv_from(from) {
            n += 1;
            hit += u64::from(s <= limit_s);
        }
        (n > 0).then(|| hit as f64 / n as f64)
    }

    /// TTV histogram per simulated hour, each hour normalised to 1.
    pub fn ttv_histogram(&self, bucket_s: u64) -> Vec<TtvBucket> {
        let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        let mut per_hour: BTreeMap<u64, u64> = BTreeMap::new();
        for s in &self.ttv_samples {
            let hour = s.tick / 3600;
            *counts.entry((hour, s.seconds / bucket_s * bucket_s)).or_default() += 1;
            *per_hour.entry(hour).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|((hour, start_s), count)| TtvBucket {
                hour,
                start_s,
                count,
                fraction: count as f64 / per_hour[&hour] as f64,
            })
            .collect()
    }
}
