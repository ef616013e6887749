//! Recorded mobility: `tick,vehicle_id,x,y,heading_deg` CSV playback.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::geometry::{Pose, Vec2};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace gap: vehicle {vehicle} has no row for tick {tick}")]
    Gap { vehicle: u32, tick: u64 },
    #[error("trace I/O: {0}")]
    Io(#[from] std::io::Error),
}

pub const TRACE_HEADER: [&str; 5] = ["tick", "vehicle_id", "x", "y", "heading_deg"];

#[derive(Debug, Clone, PartialEq)]
struct Span {
    first_tick: u64,
    poses: Vec<Pose>,
}

/// Per-vehicle pose sequences. A vehicle exists exactly for the ticks it has
/// rows for.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    ids: Vec<u32>,
    spans: Vec<Span>,
}

impl Trace {
    /// Builds a trace from per-vehicle rows; ticks must be contiguous.
    pub fn from_rows(rows: BTreeMap<u32, BTreeMap<u64, Pose>>) -> Result<Self, TraceError> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut spans = Vec::with_capacity(rows.len());
        for (vehicle, ticks) in rows {
            let Some(&first_tick) = ticks.keys().next() else { continue };
            for (expected, (&tick, _)) in (first_tick..).zip(&ticks) {
                if tick != expected {
                    return Err(TraceError::Gap { vehicle, tick: expected });
                }
            }
            ids.push(vehicle);
            spans.push(Span { first_tick, poses: ticks.into_values().collect() });
        }
        Ok(Self { ids, spans })
    }

    pub fn vehicle_ids(&self) -> &[u32] {
        &self.ids
    }

    /// Last tick with any row, if the trace is non-empty.
    pub fn last_tick(&self) -> Option<u64> {
        self.spans.iter().map(|s| s.first_tick + s.poses.len() as u64 - 1).max()
    }

    pub fn pose(&self, slot: usize, tick: u64) -> Option<Pose> {
        let span = &self.spans[slot];
        let i = tick.checked_sub(span.first_tick)?;
        span.poses.get(i as usize).copied()
    }

    /// Pose per slot at `tick`; velocity is the backward difference (zero on
    /// a vehicle's first tick).
    pub fn frame(&self, tick: u64) -> Vec<Option<(Pose, Vec2)>> {
        (0..self.spans.len())
            .map(|slot| {
                let pose = self.pose(slot, tick)?;
                let vel = tick
                    .checked_sub(1)
                    .and_then(|t| self.pose(slot, t))
                    .map_or(Vec2::default(), |prev| pose.position() - prev.position());
                Some((pose, vel))
            })
            .collect()
    }
}

pub fn parse_trace<R: Read>(reader: R) -> Result<Trace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let parse_err = |line: u64, message: String| TraceError::Parse { line, message };

    match records.next() {
        Some(Ok(h)) if h.iter().eq(TRACE_HEADER) => {}
        Some(Ok(h)) => {
            return Err(parse_err(
                1,
                format!(
                    "expected header {:?}, got {:?}",
                    TRACE_HEADER.join(","),
                    h.iter().collect::<Vec<_>>().join(",")
                ),
            ))
        }
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "missing header".into())),
    }

    let mut rows: BTreeMap<u32, BTreeMap<u64, Pose>> = BTreeMap::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(parse_err(line, format!("expected 5 fields, got {}", rec.len())));
        }
        let field = |i: usize| &rec[i];
        let tick: u64 = field(0).parse().map_err(|e| parse_err(line, format!("tick: {e}")))?;
        let vehicle: u32 = field(1).parse().map_err(|e| parse_err(line, format!("vehicle_id: {e}")))?;
        let num = |i: usize, name: &str| -> Result<f64, TraceError> {
            let v: f64 = field(i).parse().map_err(|e| parse_err(line, format!("{name}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{name}: not finite")))
            }
        };
        let pose = Pose { x: num(2, "x")?, y: num(3, "y")?, heading_deg: num(4, "heading_deg")? };
        if rows.entry(vehicle).or_default().insert(tick, pose).is_some() {
            return Err(parse_err(line, format!("duplicate row for vehicle {vehicle} at tick {tick}")));
        }
    }
    Trace::from_rows(rows)
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    parse_trace(std::fs::File::open(path)?)
}

/// Writes poses as trace CSV. `frames[t]` holds the poses at tick `t`.
pub fn write_trace<W: Write>(writer: W, ids: &[u32], frames: &[Vec<Option<Pose>>]) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| TraceError::Io(std::io::Error::other(e));
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for (tick, frame) in frames.iter().enumerate() {
        for (slot, pose) in frame.iter().enumerate() {
            if let Some(p) = pose {
                w.write_record([
                    tick.to_string(),
                    ids[slot].to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                    p.heading_deg.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
