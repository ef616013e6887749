//! Metric artifacts for one run: four CSV files and a JSON manifest.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use super::world::{Invariants, RunReport, Summary};
use crate::station::Diagnostics;

pub const VERIFICATION_RATIO_CSV: &str = "verification_ratio.csv";
pub const TTV_HIST_CSV: &str = "ttv_hist.csv";
pub const BANDWIDTH_CSV: &str = "bandwidth.csv";
pub const COVERAGE_CSV: &str = "coverage.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

pub const VERSION: &str = concat!("trafficproof ", env!("CARGO_PKG_VERSION"));

fn csv_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn verification_ratio_csv(report: &RunReport) -> Result<Vec<u8>, io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["vehicle_id", "kind", "n_l", "n_r", "n_a", "ratio"]).map_err(csv_io)?;
    for (sets, (_, kind)) in report.ledger.observers.iter().zip(&report.observer_kinds) {
        let kind = serde_json::to_value(kind).map_err(io::Error::other)?;
        w.write_record([
            sets.vehicle_id.to_string(),
            kind.as_str().unwrap_or_default().to_string(),
            sets.local.len().to_string(),
            sets.received.len().to_string(),
            sets.all.len().to_string(),
            opt(sets.verification_ratio()),
        ])
        .map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn ttv_hist_csv(report: &RunReport) -> Result<Vec<u8>, io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["hour", "bucket_start_s", "bucket_end_s", "count", "fraction"]).map_err(csv_io)?;
    let width = report.spec.ttv_bucket_s;
    for b in report.ledger.ttv_histogram(width) {
        w.write_record([
            b.hour.to_string(),
            b.start_s.to_string(),
            (b.start_s + width).to_string(),
            b.count.to_string(),
            b.fraction.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn bandwidth_csv(report: &RunReport) -> Result<Vec<u8>, io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "messages", "objects", "proofs", "bytes", "connected", "mean_bps"]).map_err(csv_io)?;
    for (tick, t) in report.ledger.tx.iter().enumerate() {
        w.write_record([
            tick.to_string(),
            t.messages.to_string(),
            t.objects.to_string(),
            t.proofs.to_string(),
            t.bytes.to_string(),
            t.connected.to_string(),
            t.mean_bps().to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn coverage_csv(report: &RunReport) -> Result<Vec<u8>, io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "mean_coverage"]).map_err(csv_io)?;
    for (tick, c) in report.ledger.coverage.iter().enumerate() {
        w.write_record([tick.to_string(), c.to_string()]).map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    seed: u64,
    wall_time_s: f64,
    spec: &'a super::scenario::ScenarioSpec,
    summary: &'a Summary,
    invariants: &'a Invariants,
    diagnostics: &'a Diagnostics,
}

pub fn manifest_json(report: &RunReport, wall_time_s: f64) -> Result<Vec<u8>, io::Error> {
    let m = Manifest {
        version: VERSION,
        seed: report.spec.seed,
        wall_time_s,
        spec: &report.spec,
        summary: &report.summary,
        invariants: &report.invariants,
        diagnostics: &report.diagnostics,
    };
    let mut out = serde_json::to_vec_pretty(&m).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes every artifact into `dir`, creating it if needed. Everything except
/// the manifest's `wall_time_s` is a pure function of the report.
pub fn write_run(report: &RunReport, dir: &Path, wall_time_s: f64) -> Result<(), io::Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(VERIFICATION_RATIO_CSV), verification_ratio_csv(report)?)?;
    fs::write(dir.join(TTV_HIST_CSV), ttv_hist_csv(report)?)?;
    fs::write(dir.join(BANDWIDTH_CSV), bandwidth_csv(report)?)?;
    fs::write(dir.join(COVERAGE_CSV), coverage_csv(report)?)?;
    fs::write(dir.join(MANIFEST_JSON), manifest_json(report, wall_time_s)?)?;
    Ok(())
}
