use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use trafficproof::sim::{output, Mode, Summary, World, WorldError};
use trafficproof::RecoveryCache;

use crate::config::RunConfig;

pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] WorldError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// One row of `summary.csv`: per-mode means over repeats. A column is empty
/// when no repeat defines it; `ticks_to_95` is empty unless every repeat
/// reached 95 % coverage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: String,
    pub repeats: usize,
    pub mean_verification_ratio: Option<f64>,
    pub ttv_samples: usize,
    pub ttv_le_1s: Option<f64>,
    pub ttv_le_2s: Option<f64>,
    pub ttv_le_5s: Option<f64>,
    pub steady_bandwidth_bps: f64,
    pub ticks_to_95: Option<f64>,
    pub final_coverage: f64,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(mode: Mode, runs: &[Summary]) -> SummaryRow {
    let n = runs.len() as f64;
    let ticks: Option<Vec<u64>> = runs.iter().map(|s| s.ticks_to_95).collect();
    SummaryRow {
        mode: mode.to_string(),
        repeats: runs.len(),
        mean_verification_ratio: mean_defined(runs.iter().map(|s| s.mean_verification_ratio)),
        ttv_samples: runs.iter().map(|s| s.ttv_samples_steady).sum(),
        ttv_le_1s: mean_defined(runs.iter().map(|s| s.ttv_le_1s)),
        ttv_le_2s: mean_defined(runs.iter().map(|s| s.ttv_le_2s)),
        ttv_le_5s: mean_defined(runs.iter().map(|s| s.ttv_le_5s)),
        steady_bandwidth_bps: runs.iter().map(|s| s.steady_bandwidth_bps).sum::<f64>() / n,
        ticks_to_95: ticks.map(|t| t.iter().sum::<u64>() as f64 / n),
        final_coverage: runs.iter().map(|s| s.final_coverage).sum::<f64>() / n,
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

pub fn run_dir(root: &Path, mode: Mode, repeat: u64) -> PathBuf {
    root.join(mode.to_string()).join(repeat.to_string())
}

/// Executes every mode × repeat, writing per-run artifacts and the summary.
/// Progress goes to stderr.
pub fn execute(config: &RunConfig) -> Result<Vec<SummaryRow>, RunError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;
    let mut by_mode: BTreeMap<Mode, Vec<Summary>> = BTreeMap::new();
    let mut cache: Option<(u64, RecoveryCache)> = None;
    for (mode, repeat, spec) in config.runs() {
        // Runs with the same seed see the same pseudonyms and proofs.
        let shared = match &cache {
            Some((seed, c)) if *seed == spec.seed => c.clone(),
            _ => {
                let c = RecoveryCache::new();
                cache = Some((spec.seed, c.clone()));
                c
            }
        };
        let started = Instant::now();
        let report = World::with_cache(spec, shared)?.run()?;
        let wall = started.elapsed().as_secs_f64();
        let dir = run_dir(&config.output_dir, mode, repeat);
        output::write_run(&report, &dir, wall).map_err(io_err(&dir))?;
        eprintln!("{mode} repeat {repeat} (seed {}): {wall:.1} s -> {}", report.summary.seed, dir.display());
        by_mode.entry(mode).or_default().push(report.summary);
    }
    let rows: Vec<SummaryRow> = config.modes.iter().map(|m| summarize(*m, &by_mode[m])).collect();
    let path = config.output_dir.join(SUMMARY_CSV);
    std::fs::write(&path, summary_csv(&rows)).map_err(io_err(&path))?;
    Ok(rows)
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |v| format!("{v:.digits$}"))
}

/// Fixed-width table for the terminal.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<18} {:>7} {:>8} {:>7} {:>7} {:>7} {:>10} {:>9}\n",
        "mode", "R_veri", "ttv_n", "<=1s", "<=2s", "<=5s", "bps", "t95"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>7} {:>8} {:>7} {:>7} {:>7} {:>10.1} {:>9}\n",
            r.mode,
            cell(r.mean_verification_ratio, 3),
            r.ttv_samples,
            cell(r.ttv_le_1s, 3),
            cell(r.ttv_le_2s, 3),
            cell(r.ttv_le_5s, 3),
            r.steady_bandwidth_bps,
            cell(r.ticks_to_95, 0),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(ratio: Option<f64>, t95: Option<u64>, bps: f64) -> Summary {
        Summary {
            mode: "pot_1s".into(),
            seed: 1,
            vehicles: 10,
            observers: 10,
            mean_verification_ratio: ratio,
            ttv_samples_steady: 4,
            ttv_le_1s: Some(0.5),
            ttv_le_2s: None,
            ttv_le_5s: Some(1.0),
            steady_bandwidth_bps: bps,
            ticks_to_95: t95,
            final_coverage: 0.9,
        }
    }

    #[test]
    fn means_skip_undefined_values() {
        let row =
            summarize(Mode::ProofOfTraffic(1), &[summary(Some(0.8), Some(100), 10.0), summary(None, Some(200), 20.0)]);
        assert_eq!(row.mean_verification_ratio, Some(0.8));
        assert_eq!(row.ticks_to_95, Some(150.0));
        assert_eq!(row.steady_bandwidth_bps, 15.0);
        assert_eq!(row.ttv_samples, 8);
        assert_eq!(row.ttv_le_2s, None);
    }

    #[test]
    fn unreached_coverage_blanks_the_mean() {
        let row = summarize(Mode::LocalOnly, &[summary(None, Some(100), 0.0), summary(None, None, 0.0)]);
        assert_eq!(row.ticks_to_95, None);
    }

    #[test]
    fn csv_has_header_and_empty_cells() {
        let row = summarize(Mode::LocalOnly, &[summary(None, None, 0.0)]);
        let text = String::from_utf8(summary_csv(&[row])).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mode,repeats,mean_verification_ratio,ttv_samples,ttv_le_1s,ttv_le_2s,ttv_le_5s,steady_bandwidth_bps,ticks_to_95,final_coverage"
        );
        assert_eq!(lines.next().unwrap(), "local_only,1,,4,0.5,,1.0,0.0,,0.9");
    }
}
