use std::path::Path;
use std::process::{Command, Output};

fn trafficproof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trafficproof")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
modes = ["conventional_cps", "pot_1s"]
repeats = 2

[scenario]
duration_ticks = 80
seed = 11

[scenario.mobility]
kind = "manhattan_grid"
n_vehicles = 30
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_writes_per_mode_repeat_directories_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = trafficproof(&["run", &config, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for mode in ["conventional_cps", "pot_1s"] {
        for repeat in ["0", "1"] {
            let dir = out.join(mode).join(repeat);
            for f in ["verification_ratio.csv", "ttv_hist.csv", "bandwidth.csv", "coverage.csv", "manifest.json"] {
                assert!(dir.join(f).is_file(), "{}", dir.join(f).display());
            }
        }
    }
    let manifest: String = std::fs::read_to_string(out.join("pot_1s/1/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 12"), "repeat 1 uses seed + 1");
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("conventional_cps,2,"));
    assert!(rows[2].starts_with("pot_1s,2,"));

    // Re-running overwrites with identical CSVs.
    let first = read_csvs(&out);
    assert_eq!(first.len(), 4 * 4 + 1);
    let o = trafficproof(&["run", &config, "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_csvs(&out), first);
}

#[test]
fn flags_override_file_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("flags");
    let o = trafficproof(&[
        "run",
        &config,
        "--output",
        out.to_str().unwrap(),
        "--mode",
        "local_only",
        "--seed",
        "5",
        "--repeats",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("local_only/0/coverage.csv").is_file());
    assert!(!out.join("pot_1s").exists());
    let manifest = std::fs::read_to_string(out.join("local_only/0/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"));
}

#[test]
fn output_dir_is_relative_to_working_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &format!("output_dir = \"res\"\n{SMALL}"));
    let o = Command::new(env!("CARGO_BIN_EXE_trafficproof"))
        .args(["run", &config, "--mode", "local_only", "--repeats", "1"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("res/summary.csv").is_file());
}

#[test]
fn unknown_mode_in_config_is_a_config_error_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "modes = [\"pot_1s\", \"teleport\"]");
    let o = trafficproof(&["run", &config]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("modes[1]") && err.contains("teleport"), "{err}");
}

#[test]
fn schema_violation_reports_nested_path() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "[scenario.station]\nspam_limit = -3");
    let o = trafficproof(&["run", &config]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scenario.station.spam_limit"), "{}", stderr(&o));
}

#[test]
fn invalid_value_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "[scenario.channel]\npdr = 2.0");
    let o = trafficproof(&["run", &config]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scenario.channel.pdr"), "{}", stderr(&o));
}

#[test]
fn unknown_mode_flag_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let o = trafficproof(&["run", &config, "--mode", "pot_0s"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_files_are_io_errors() {
    assert_eq!(code(&trafficproof(&["run", "/nonexistent/run.toml"])), 3);
    assert_eq!(code(&trafficproof(&["vectors", "check", "/nonexistent/vectors.txt"])), 3);
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "[scenario.mobility]\nkind = \"trace_file\"\npath = \"missing.csv\"");
    let o = trafficproof(&["run", &config, "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn vectors_round_trip_and_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("v.txt");
    let f = file.to_str().unwrap();
    let o = trafficproof(&["vectors", "gen", "--count", "25", "--seed", "9", "--output", f]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = trafficproof(&["vectors", "check", f]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("25 records ok"));

    // Flip one hex digit in the public key of record 3 (line 5: comment first).
    let text = std::fs::read_to_string(&file).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let fields: Vec<&str> = lines[4].split(',').collect();
    let at = fields[0].len() + fields[1].len() + 2 + 10;
    let mut bytes = lines[4].clone().into_bytes();
    bytes[at] = if bytes[at] == b'a' { b'b' } else { b'a' };
    lines[4] = String::from_utf8(bytes).unwrap();
    std::fs::write(&file, lines.join("\n")).unwrap();
    let o = trafficproof(&["vectors", "check", f]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("record 3"), "{}", stderr(&o));
}

#[test]
fn vectors_to_stdout_are_seeded() {
    let a = trafficproof(&["vectors", "gen", "--count", "3", "--seed", "4"]);
    let b = trafficproof(&["vectors", "gen", "--count", "3", "--seed", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 4);
}

#[test]
fn iterated_kdf_vectors_need_matching_check() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("it.txt");
    let f = file.to_str().unwrap();
    assert_eq!(code(&trafficproof(&["vectors", "gen", "--count", "5", "--kdf-iterations", "3", "-o", f])), 0);
    assert_eq!(code(&trafficproof(&["vectors", "check", f, "--kdf-iterations", "3"])), 0);
    assert_eq!(code(&trafficproof(&["vectors", "check", f])), 1);
    assert_eq!(code(&trafficproof(&["vectors", "check", f, "--kdf-iterations", "0"])), 2);
}
