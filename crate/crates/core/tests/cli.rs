use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hybrid_cache::report::{parse_nested, parse_tabular, render_nested, render_tabular};
use hybrid_cache::sim::Architecture;
use hybrid_cache::trace::{emit_trace, generate_synthetic, SyntheticTraceSpec};

fn hcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcsim")).args(args).output().expect("launch hcsim")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_trace(dir: &Path, name: &str, records: u64, seed: u64) -> String {
    let spec = SyntheticTraceSpec {
        record_count: records,
        seed,
        ..Default::default()
    };
    let p = dir.join(name);
    fs::write(&p, emit_trace(&generate_synthetic(&spec))).unwrap();
    p.to_str().unwrap().to_string()
}

fn write_file(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_without_failures_has_only_exec_energy() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 5_000, 1);
    let o = hcsim(&["run", "--config", "default", "--trace", &t, "--arch", "proposed", "--failure", "none"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = parse_nested(&stdout(&o)).unwrap();
    assert_eq!(r.metrics.e_overall, r.ledger.e_exec);
    assert_eq!(r.trace, "a.trc");
    assert_eq!(r.counters.failures, 0);
}

#[test]
fn periodic_failures_count() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 20_000, 2);
    let o = hcsim(&["run", "--trace", &t, "--failure", "period:1000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = parse_nested(&stdout(&o)).unwrap();
    assert_eq!(r.counters.failures, r.counters.instructions / 1000);
    assert_eq!(r.counters.backups, r.counters.failures);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 2_000, 3);
    let out = dir.path().join("r.txt");
    let a = hcsim(&["run", "--trace", &t, "--with-theta", "--failure", "random:100:300", "--seed", "5"]);
    let b = hcsim(&["run", "--trace", &t, "--with-theta", "--failure", "random:100:300", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), stdout(&a));
    let r = parse_nested(&stdout(&a)).unwrap();
    assert!(r.metrics.theta.is_some());
    assert_eq!(render_nested(&r), stdout(&a));
}

#[test]
fn sweep_tabular_round_trips_and_maps_splits() {
    let dir = tempfile::tempdir().unwrap();
    write_trace(dir.path(), "x.trc", 3_000, 4);
    write_trace(dir.path(), "y.trc", 3_000, 5);
    let glob = dir.path().join("*.trc");
    let o = hcsim(&["sweep", "--traces", glob.to_str().unwrap(), "--splits", "0:4,2:2,4:0", "--thresholds", "3,7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = parse_tabular(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 2);
    assert_eq!(render_tabular(&rows), stdout(&o));
    let archs: Vec<Architecture> = rows.iter().filter_map(|r| r.report()).map(|r| r.architecture).collect();
    for a in [Architecture::PureSttRam, Architecture::PureSram, Architecture::Proposed] {
        assert!(archs.contains(&a), "{a} missing");
    }
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 100, 1);
    let c = write_file(dir.path(), "c.cfg", "cache.bogus = 1\n");
    let o = hcsim(&["run", "--config", &c, "--trace", &t]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cache.bogus"));
}

#[test]
fn bad_threshold_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 100, 1);
    let c = write_file(dir.path(), "c.cfg", "policy.threshold = 0\n");
    assert_eq!(code(&hcsim(&["run", "--config", &c, "--trace", &t])), 2);
}

#[test]
fn bad_geometry_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 100, 1);
    let c = write_file(dir.path(), "c.cfg", "cache.ways_sram = 3\n");
    let o = hcsim(&["run", "--config", &c, "--trace", &t]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn malformed_trace_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_file(dir.path(), "bad.trc", "R 0x40\nR 0xzz\n");
    let o = hcsim(&["run", "--trace", &t]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_trace_exits_2() {
    assert_eq!(code(&hcsim(&["run", "--trace", "/nonexistent/t.trc"])), 2);
}

#[test]
fn checkpoint_livelock_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_trace(dir.path(), "a.trc", 2_000, 1);
    let c = write_file(dir.path(), "c.cfg", "checkpoint.period = 1000000\ncheckpoint.max_retries = 3\n");
    let o = hcsim(&["run", "--config", &c, "--trace", &t, "--arch", "checkpoint", "--failure", "period:50"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn golden_and_selftest() {
    let o = hcsim(&["golden"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&hcsim(&["selftest"])), 0);
    let m = hcsim(&["golden", "--mutation", "compare-then-increment"]);
    assert_eq!(code(&m), 1);
    assert!(stderr(&m).contains("point D"), "{}", stderr(&m));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trc");
    let b = dir.path().join("b.trc");
    for p in [&a, &b] {
        let o = hcsim(&["generate", "--records", "1000", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
