//! The tick loop: mobility, perception, per-vehicle behaviour, broadcast,
//! reception, pseudonym changes, and metric accrual, in that order.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::channel::deliver_broadcasts;
use super::geometry::{Pose, Vec2};
use super::metrics::{MetricsLedger, TickTx, TtvSample};
use super::mobility::{generate_manhattan, Mobility};
use super::perception::compute_visibility;
use super::rng::RngStreams;
use super::scenario::{MobilitySpec, Mode, ScenarioError, ScenarioSpec};
use super::trace::{load_trace, TraceError};
use crate::crypto::RecoveryCache;
use crate::station::{Diagnostics, Observation, PlannerSource, Station, StationMode};
use crate::wire::{cpm_size_bytes, decode_cpm, encode_cpm, CpmMessage, PerceivedObject, ProofEntry, WireError};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("scenario needs {needed} special vehicles but the trace has {available}")]
    TooFewVehicles { needed: usize, available: usize },
    #[error("internal CPM failed to round-trip: {0}")]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Unconnected,
    Connected,
    ProofOfTraffic,
    SpamAttacker,
    ReplayAttacker,
    SilenceAttacker,
}

impl VehicleKind {
    pub fn has_radio(self) -> bool {
        self != VehicleKind::Unconnected
    }

    pub fn is_attacker(self) -> bool {
        matches!(self, VehicleKind::SpamAttacker | VehicleKind::ReplayAttacker | VehicleKind::SilenceAttacker)
    }

    fn honest_for(mode: Mode) -> Self {
        match mode {
            Mode::LocalOnly => VehicleKind::Unconnected,
            Mode::ConventionalCps => VehicleKind::Connected,
            Mode::ProofOfTraffic(_) => VehicleKind::ProofOfTraffic,
        }
    }
}

/// What a transmitted object really is. Only the simulator sees this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    Vehicle(u32),
    Fabricated,
    /// Copied by a replay attacker from another sender's CPM.
    Replayed(u32),
}

impl Identity {
    fn vehicle(self) -> Option<u32> {
        match self {
            Identity::Vehicle(v) | Identity::Replayed(v) => Some(v),
            Identity::Fabricated => None,
        }
    }
}

#[derive(Debug, Clone)]
struct ReplayItem {
    entry: ProofEntry,
    object: PerceivedObject,
    identity: Identity,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub ground_truth_id: u32,
    pub kind: VehicleKind,
    pub pseudonym: u32,
    pub plate: Vec<u8>,
    pub pose: Option<Pose>,
    pub velocity: Vec2,
    /// Runs the mode's honest stack and is scored by the metrics.
    pub observer: bool,
    station: Option<Station>,
    replay_buffer: Vec<ReplayItem>,
}

impl Agent {
    pub fn station(&self) -> Option<&Station> {
        self.station.as_ref()
    }
}

/// Safety properties checked against ground truth while running.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Invariants {
    /// Fabricated objects released to an honest planner.
    pub fabricated_accepted: u64,
    /// Replayed objects released to an honest planner.
    pub replayed_accepted: u64,
    /// Verification events at honest stations naming a replay attacker as a prover.
    pub replay_verifications: u64,
    /// Largest pending-entry count from one prover pseudonym at any honest station.
    pub max_pending_per_prover: usize,
    /// Same, restricted to attacker pseudonyms.
    pub max_pending_per_attacker: usize,
    /// Ticks at which some honest station's object counters did not reconcile.
    pub conservation_violations: u64,
    /// Released remote objects the oracle could not attribute.
    pub unattributed_releases: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub vehicles: usize,
    pub observers: usize,
    pub mean_verification_ratio: Option<f64>,
    pub ttv_samples_steady: usize,
    pub ttv_le_1s: Option<f64>,
    pub ttv_le_2s: Option<f64>,
    pub ttv_le_5s: Option<f64>,
    pub steady_bandwidth_bps: f64,
    pub ticks_to_95: Option<u64>,
    pub final_coverage: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub spec: ScenarioSpec,
    pub ledger: MetricsLedger,
    pub invariants: Invariants,
    pub diagnostics: Diagnostics,
    pub summary: Summary,
    /// Ground-truth id and kind per scored observer, ledger order.
    pub observer_kinds: Vec<(u32, VehicleKind)>,
}

struct ReceiveOutcome {
    received: Vec<Identity>,
    released: Vec<Option<Identity>>,
    ttvs: Vec<u64>,
    provers: Vec<u32>,
    max_pending: Option<(u32, usize)>,
    conserved: bool,
}

type OracleKey = (u32, u64, u16);

/// A CPM plus the ground-truth identity behind each object id.
type TaggedCpm = (CpmMessage, Vec<(u16, Identity)>);

pub struct World {
    spec: ScenarioSpec,
    mobility: Mobility,
    agents: Vec<Agent>,
    rng: RngStreams,
    cache: RecoveryCache,
    oracle: HashMap<OracleKey, Identity>,
    used_pseudonyms: HashSet<u32>,
    attacker_pseudonyms: HashSet<u32>,
    replay_pseudonyms: HashSet<u32>,
    ledger: MetricsLedger,
    observer_slot: Vec<Option<usize>>,
    invariants: Invariants,
    visibility: Vec<Vec<u32>>,
    next_tick: u64,
    parallel: bool,
}

fn map_agents<T, F>(parallel: bool, agents: &mut [Agent], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Agent) -> T + Sync + Send,
{
    if parallel {
        agents.par_iter_mut().enumerate().map(|(i, a)| f(i, a)).collect()
    } else {
        agents.iter_mut().enumerate().map(|(i, a)| f(i, a)).collect()
    }
}

fn fresh_pseudonym<R: Rng>(rng: &mut R, used: &mut HashSet<u32>) -> u32 {
    loop {
        let p = rng.gen();
        if used.insert(p) {
            return p;
        }
    }
}

impl World {
    pub fn new(spec: ScenarioSpec) -> Result<Self, WorldError> {
        Self::with_cache(spec, RecoveryCache::new())
    }

    /// Builds a world sharing `cache` with other runs (results do not depend
    /// on the cache, only speed does).
    pub fn with_cache(spec: ScenarioSpec, cache: RecoveryCache) -> Result<Self, WorldError> {
        spec.validate()?;
        let mut rng = RngStreams::new(spec.seed);
        let mobility = match &spec.mobility {
            MobilitySpec::ManhattanGrid(p) => Mobility::Grid(generate_manhattan(p, &mut rng.mobility)),
            MobilitySpec::TraceFile { path } => Mobility::Trace(load_trace(path)?),
        };
        Self::from_mobility(spec, mobility, rng, cache)
    }

    /// Builds a world driven by an already loaded mobility source.
    pub fn with_mobility(spec: ScenarioSpec, mobility: Mobility, cache: RecoveryCache) -> Result<Self, WorldError> {
        spec.validate()?;
        let rng = RngStreams::new(spec.seed);
        Self::from_mobility(spec, mobility, rng, cache)
    }

    fn from_mobility(
        spec: ScenarioSpec,
        mobility: Mobility,
        mut rng: RngStreams,
        cache: RecoveryCache,
    ) -> Result<Self, WorldError> {
        let ids = mobility.ground_truth_ids();
        let mix = spec.attackers;
        if mix.total() > ids.len() {
            return Err(WorldError::TooFewVehicles { needed: mix.total(), available: ids.len() });
        }
        let honest = VehicleKind::honest_for(spec.mode);
        let mut kinds = vec![honest; ids.len()];
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.shuffle(&mut rng.attacker);
        let special = std::iter::repeat_n(VehicleKind::Unconnected, mix.unconnected)
            .chain(std::iter::repeat_n(VehicleKind::SpamAttacker, mix.spam))
            .chain(std::iter::repeat_n(VehicleKind::ReplayAttacker, mix.replay))
            .chain(std::iter::repeat_n(VehicleKind::SilenceAttacker, mix.silence));
        let mut observer = vec![true; ids.len()];
        for (slot, kind) in order.into_iter().zip(special) {
            kinds[slot] = kind;
            observer[slot] = false;
        }

        let station_config = spec.effective_station();
        let mut used = HashSet::new();
        let mut attacker_pseudonyms = HashSet::new();
        let mut replay_pseudonyms = HashSet::new();
        let mut agents = Vec::with_capacity(ids.len());
        for (slot, &gt) in ids.iter().enumerate() {
            let kind = kinds[slot];
            let pseudonym = fresh_pseudonym(&mut rng.pseudonym, &mut used);
            if kind.is_attacker() {
                attacker_pseudonyms.insert(pseudonym);
            }
            if kind == VehicleKind::ReplayAttacker {
                replay_pseudonyms.insert(pseudonym);
            }
            let station_mode = match (spec.mode, kind) {
                (Mode::LocalOnly, _) => None,
                (_, VehicleKind::Connected) => Some(StationMode::Conventional),
                (_, VehicleKind::ProofOfTraffic) => Some(StationMode::ProofOfTraffic),
                (Mode::ConventionalCps, VehicleKind::SilenceAttacker) => Some(StationMode::Conventional),
                (Mode::ProofOfTraffic(_), VehicleKind::SilenceAttacker) => Some(StationMode::ProofOfTraffic),
                _ => None,
            };
            agents.push(Agent {
                ground_truth_id: gt,
                kind,
                pseudonym,
                plate: gt.to_string().into_bytes(),
                pose: None,
                velocity: Vec2::default(),
                observer: observer[slot],
                station: station_mode.map(|m| Station::new(station_config, m, pseudonym, cache.clone())),
                replay_buffer: Vec::new(),
            });
        }

        let observer_ids: Vec<u32> = agents.iter().filter(|a| a.observer).map(|a| a.ground_truth_id).collect();
        let mut next = 0;
        let observer_slot = agents
            .iter()
            .map(|a| {
                a.observer.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let ledger = MetricsLedger::new(ids.len(), &observer_ids);
        Ok(Self {
            spec,
            mobility,
            visibility: vec![Vec::new(); agents.len()],
            agents,
            rng,
            cache,
            oracle: HashMap::new(),
            used_pseudonyms: used,
            attacker_pseudonyms,
            replay_pseudonyms,
            ledger,
            observer_slot,
            invariants: Invariants::default(),
            next_tick: 0,
            parallel: true,
        })
    }

    /// Serial and parallel execution give identical results.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.ledger
    }

    pub fn invariants(&self) -> &Invariants {
        &self.invariants
    }

    pub fn recovery_cache(&self) -> &RecoveryCache {
        &self.cache
    }

    /// The tick `step` will run next.
    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    /// Ground-truth ids each vehicle saw in the last tick, by slot.
    pub fn visibility(&self) -> &[Vec<u32>] {
        &self.visibility
    }

    pub fn poses(&self) -> Vec<Option<Pose>> {
        self.agents.iter().map(|a| a.pose).collect()
    }

    /// Forces a pseudonym change, as the random process would.
    pub fn change_pseudonym(&mut self, slot: usize) {
        let p = fresh_pseudonym(&mut self.rng.pseudonym, &mut self.used_pseudonyms);
        let agent = &mut self.agents[slot];
        agent.pseudonym = p;
        if agent.kind.is_attacker() {
            self.attacker_pseudonyms.insert(p);
        }
        if agent.kind == VehicleKind::ReplayAttacker {
            self.replay_pseudonyms.insert(p);
        }
        let tick = self.next_tick;
        if let Some(s) = &mut agent.station {
            s.change_pseudonym(p, tick);
        }
    }

    pub fn run_to_end(&mut self) -> Result<(), WorldError> {
        while self.next_tick < self.spec.duration_ticks {
            self.step()?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunReport, WorldError> {
        self.run_to_end()?;
        Ok(self.report())
    }

    pub fn step(&mut self) -> Result<(), WorldError> {
        let tick = self.next_tick;
        self.mobility_phase(tick);
        let seen = self.perception_phase(tick);
        let messages = self.behaviour_phase(tick, &seen)?;
        let inboxes = self.delivery_phase(&messages);
        self.receive_phase(tick, &messages, &inboxes);
        self.pseudonym_phase(tick);
        self.ledger.close_tick();
        let horizon = self.spec.station.pending_ttl + 1;
        self.oracle.retain(|&(_, t, _), _| tick.saturating_sub(t) <= horizon);
        self.next_tick += 1;
        Ok(())
    }

    fn mobility_phase(&mut self, tick: u64) {
        let frame = self.mobility.advance(tick, &mut self.rng.mobility);
        for (agent, f) in self.agents.iter_mut().zip(frame) {
            agent.pose = f.map(|(p, _)| p);
            agent.velocity = f.map_or(Vec2::default(), |(_, v)| v);
        }
    }

    fn perception_phase(&mut self, _tick: u64) -> Vec<Vec<usize>> {
        let poses = self.poses();
        let params = self.spec.perception;
        let n = poses.len();
        let seen: Vec<Vec<usize>> = if self.parallel {
            (0..n).into_par_iter().map(|i| compute_visibility(&params, &poses, i)).collect()
        } else {
            (0..n).map(|i| compute_visibility(&params, &poses, i)).collect()
        };
        for (slot, targets) in seen.iter().enumerate() {
            let ids: Vec<u32> = targets.iter().map(|&t| self.agents[t].ground_truth_id).collect();
            if let Some(o) = self.observer_slot[slot] {
                let sets = &mut self.ledger.observers[o];
                sets.local.extend(ids.iter().copied());
                sets.all.extend(ids.iter().copied());
            }
            self.visibility[slot] = ids;
        }
        seen
    }

    fn behaviour_phase(&mut self, tick: u64, seen: &[Vec<usize>]) -> Result<Vec<(usize, Arc<CpmMessage>)>, WorldError> {
        struct Snapshot {
            gt: u32,
            pseudonym: Option<u32>,
            pose: Option<Pose>,
            velocity: Vec2,
        }
        let snap: Vec<Snapshot> = self
            .agents
            .iter()
            .map(|a| Snapshot {
                gt: a.ground_truth_id,
                pseudonym: a.kind.has_radio().then_some(a.pseudonym),
                pose: a.pose,
                velocity: a.velocity,
            })
            .collect();
        let plates: Vec<Vec<u8>> = self.agents.iter().map(|a| a.plate.clone()).collect();

        // Honest stacks, independent per vehicle.
        let built: Vec<Option<TaggedCpm>> = map_agents(self.parallel, &mut self.agents, |slot, agent| {
            let pose = agent.pose?;
            let station = agent.station.as_mut()?;
            let observations: Vec<Observation> = seen[slot]
                .iter()
                .map(|&t| {
                    let target = &snap[t];
                    let tp = target.pose.expect("visible targets have poses");
                    Observation {
                        pseudonym: target.pseudonym,
                        plate: plates[t].clone(),
                        offset: (tp.x - pose.x, tp.y - pose.y),
                        velocity: (target.velocity.x, target.velocity.y),
                    }
                })
                .collect();
            let ids = station.ingest_local_perception(&observations, tick);
            let msg = station.build_cpm(tick);
            if agent.kind == VehicleKind::SilenceAttacker {
                return None;
            }
            let tags =
                ids.into_iter().zip(seen[slot].iter()).map(|(id, &t)| (id, Identity::Vehicle(snap[t].gt))).collect();
            Some((msg, tags))
        });

        let mut out = Vec::new();
        for (slot, b) in built.into_iter().enumerate() {
            let agent = &mut self.agents[slot];
            let built = match (b, agent.kind) {
                (Some(b), _) => Some(b),
                (None, VehicleKind::SpamAttacker) if agent.pose.is_some() && self.spec.mode != Mode::LocalOnly => {
                    Some(spam_cpm(
                        agent.pseudonym,
                        tick,
                        self.spec.spam_fabrication_count,
                        self.spec.perception.range_m,
                        &mut self.rng.attacker,
                    ))
                }
                (None, VehicleKind::ReplayAttacker) if agent.pose.is_some() && self.spec.mode != Mode::LocalOnly => {
                    Some(replay_cpm(agent.pseudonym, tick, std::mem::take(&mut agent.replay_buffer)))
                }
                _ => None,
            };
            if let Some((msg, tags)) = built {
                for (id, identity) in tags {
                    self.oracle.insert((msg.sender_pseudonym, tick, id), identity);
                }
                out.push((slot, msg));
            }
        }

        // Everything crosses the air as bytes.
        let mut tx = TickTx {
            connected: self.agents.iter().filter(|a| a.pose.is_some() && a.kind.has_radio()).count() as u64,
            ..Default::default()
        };
        if self.spec.mode == Mode::LocalOnly {
            tx.connected = 0;
        }
        let mut sent = Vec::with_capacity(out.len());
        for (slot, msg) in out {
            let bytes = encode_cpm(&msg)?;
            debug_assert_eq!(bytes.len(), cpm_size_bytes(&msg));
            tx.messages += 1;
            tx.objects += msg.objects.len() as u64;
            tx.proofs += msg.proofs.len() as u64;
            tx.bytes += bytes.len() as u64;
            sent.push((slot, Arc::new(decode_cpm(&bytes)?)));
        }
        self.ledger.tx.push(tx);
        Ok(sent)
    }

    fn delivery_phase(&mut self, messages: &[(usize, Arc<CpmMessage>)]) -> Vec<Vec<usize>> {
        let position = |slot: usize| self.agents[slot].pose.map(|p| p.position());
        let senders: Vec<(usize, Vec2)> =
            messages.iter().filter_map(|(slot, _)| position(*slot).map(|p| (*slot, p))).collect();
        let receivers: Vec<(usize, Vec2)> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind.has_radio())
            .filter_map(|(i, a)| a.pose.map(|p| (i, p.position())))
            .collect();
        let delivered = deliver_broadcasts(&self.spec.channel, &senders, &receivers, &mut self.rng.channel);
        let mut inboxes = vec![Vec::new(); self.agents.len()];
        for (msg_index, receivers) in delivered.into_iter().enumerate() {
            for r in receivers {
                inboxes[r].push(msg_index);
            }
        }
        inboxes
    }

    fn receive_phase(&mut self, tick: u64, messages: &[(usize, Arc<CpmMessage>)], inboxes: &[Vec<usize>]) {
        let oracle = &self.oracle;
        let outcomes: Vec<Option<ReceiveOutcome>> = map_agents(self.parallel, &mut self.agents, |slot, agent| {
            let inbox = &inboxes[slot];
            if agent.kind == VehicleKind::ReplayAttacker {
                agent.replay_buffer.clear();
                for &m in inbox {
                    let msg = &messages[m].1;
                    for entry in &msg.proofs {
                        let Some(object) = msg.objects.iter().find(|o| o.object_id == entry.object_id) else {
                            continue;
                        };
                        let identity = oracle
                            .get(&(msg.sender_pseudonym, tick, entry.object_id))
                            .copied()
                            .unwrap_or(Identity::Fabricated);
                        agent.replay_buffer.push(ReplayItem { entry: *entry, object: *object, identity });
                    }
                }
                return None;
            }
            let station = agent.station.as_mut()?;
            let mut out = ReceiveOutcome {
                received: Vec::new(),
                released: Vec::new(),
                ttvs: Vec::new(),
                provers: Vec::new(),
                max_pending: None,
                conserved: true,
            };
            for &m in inbox {
                let msg = &messages[m].1;
                for o in &msg.objects {
                    if let Some(&id) = oracle.get(&(msg.sender_pseudonym, tick, o.object_id)) {
                        out.received.push(id);
                    }
                }
                for event in station.handle_cpm(msg, tick) {
                    out.ttvs.extend(event.ttv);
                    out.provers.extend(event.provers);
                }
            }
            station.expire_state(tick);
            for input in station.drain_planner() {
                if let PlannerSource::Remote { sender, received_tick } = input.source {
                    out.released.push(oracle.get(&(sender, received_tick, input.object.object_id)).copied());
                }
            }
            if station.mode() == StationMode::ProofOfTraffic {
                out.max_pending = station.database().max_pending_per_prover();
            }
            let d = station.diagnostics();
            out.conserved = d.received_objects
                == d.released_objects + d.rejected_objects + d.expired_objects + station.stashed_count() as u64;
            Some(out)
        });

        for (slot, outcome) in outcomes.into_iter().enumerate() {
            let Some(o) = outcome else { continue };
            let Some(obs) = self.observer_slot[slot] else { continue };
            let ego = self.agents[slot].ground_truth_id;
            let sets = &mut self.ledger.observers[obs];
            sets.received.extend(o.received.iter().filter_map(|i| i.vehicle()).filter(|&v| v != ego));
            for r in o.released {
                match r {
                    Some(Identity::Vehicle(v)) => {
                        if v != ego {
                            sets.all.insert(v);
                        }
                    }
                    Some(Identity::Fabricated) => self.invariants.fabricated_accepted += 1,
                    Some(Identity::Replayed(_)) => self.invariants.replayed_accepted += 1,
                    None => self.invariants.unattributed_releases += 1,
                }
            }
            self.ledger.ttv_samples.extend(o.ttvs.iter().map(|&seconds| TtvSample { tick, seconds }));
            self.invariants.replay_verifications +=
                o.provers.iter().filter(|p| self.replay_pseudonyms.contains(p)).count() as u64;
            if let Some((prover, count)) = o.max_pending {
                let inv = &mut self.invariants;
                inv.max_pending_per_prover = inv.max_pending_per_prover.max(count);
                if self.attacker_pseudonyms.contains(&prover) {
                    inv.max_pending_per_attacker = inv.max_pending_per_attacker.max(count);
                }
            }
            if !o.conserved {
                self.invariants.conservation_violations += 1;
            }
        }
    }

    fn pseudonym_phase(&mut self, _tick: u64) {
        let p = self.spec.pseudonym_change_probability;
        for slot in 0..self.agents.len() {
            if !self.agents[slot].kind.has_radio() || self.agents[slot].pose.is_none() {
                continue;
            }
            if self.rng.pseudonym.gen_bool(p) {
                self.change_pseudonym(slot);
            }
        }
    }

    /// Diagnostics summed over scored observers.
    pub fn diagnostics(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        for a in self.agents.iter().filter(|a| a.observer) {
            if let Some(s) = &a.station {
                d += s.diagnostics();
            }
        }
        d
    }

    pub fn summary(&self) -> Summary {
        let steady = self.spec.steady_state_first_tick();
        let l = &self.ledger;
        Summary {
            mode: self.spec.mode.to_string(),
            seed: self.spec.seed,
            vehicles: self.agents.len(),
            observers: l.observers.len(),
            mean_verification_ratio: l.mean_verification_ratio(),
            ttv_samples_steady: l.ttv_from(steady).count(),
            ttv_le_1s: l.ttv_share_within(steady, 1),
            ttv_le_2s: l.ttv_share_within(steady, 2),
            ttv_le_5s: l.ttv_share_within(steady, 5),
            steady_bandwidth_bps: l.mean_bandwidth_from(steady),
            ticks_to_95: l.ticks_to_coverage(0.95),
            final_coverage: l.coverage.last().copied().unwrap_or(0.0),
        }
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            spec: self.spec.clone(),
            ledger: self.ledger.clone(),
            invariants: self.invariants,
            diagnostics: self.diagnostics(),
            summary: self.summary(),
            observer_kinds: self.agents.iter().filter(|a| a.observer).map(|a| (a.ground_truth_id, a.kind)).collect(),
        }
    }
}

/// Fabricated objects at random positions within perception range, each
/// with a proof entry of random bytes.
fn spam_cpm<R: Rng>(
    pseudonym: u32,
    tick: u64,
    count: usize,
    range_m: f64,
    rng: &mut R,
) -> (CpmMessage, Vec<(u16, Identity)>) {
    let mut ids = HashSet::new();
    let mut objects = Vec::with_capacity(count);
    let mut proofs = Vec::with_capacity(count);
    while objects.len() < count {
        let id: u16 = rng.gen();
        if !ids.insert(id) {
            continue;
        }
        let r = range_m * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = (rng.gen_range(-14.0..14.0), rng.gen_range(-14.0..14.0));
        objects.push(PerceivedObject::from_metric(id, (r * a.cos(), r * a.sin()), v));
        proofs.push(ProofEntry { object_id: id, pid_prefix: rng.gen(), v: rng.gen(), r: rng.gen(), s: rng.gen() });
    }
    let tags = objects.iter().map(|o| (o.object_id, Identity::Fabricated)).collect();
    (CpmMessage { sender_pseudonym: pseudonym, tick, objects, proofs }, tags)
}

/// Up to eight entries heard last tick, verbatim under the attacker's own
/// header, with the objects they refer to.
fn replay_cpm(pseudonym: u32, tick: u64, buffer: Vec<ReplayItem>) -> (CpmMessage, Vec<(u16, Identity)>) {
    let mut ids = HashSet::new();
    let mut objects = Vec::new();
    let mut proofs = Vec::new();
    let mut tags = Vec::new();
    for item in buffer {
        if proofs.len() == crate::wire::MAX_PROOFS_PER_CPM {
            break;
        }
        if !ids.insert(item.entry.object_id) {
            continue;
        }
        objects.push(item.object);
        proofs.push(item.entry);
        let identity = match item.identity {
            Identity::Vehicle(v) | Identity::Replayed(v) => Identity::Replayed(v),
            Identity::Fabricated => Identity::Fabricated,
        };
        tags.push((item.object.object_id, identity));
    }
    (CpmMessage { sender_pseudonym: pseudonym, tick, objects, proofs }, tags)
}
