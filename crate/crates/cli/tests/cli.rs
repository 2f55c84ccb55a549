use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lrdq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrdq"))
        .args(args)
        .env_remove("LRDQ_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lrdq(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn hand_trace(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("hand.csv");
    fs::write(&p, "time_s,size_bytes\n0.000000000,1000\n0.500000000,1000\n").unwrap();
    p
}

#[test]
fn generate_writes_requested_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["generate", "--packets", "500", "--seed", "9", "-o", s(&a)]);
    ok(&["generate", "--packets", "500", "--seed", "9", "-o", s(&b)]);
    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time_s,size_bytes");
    assert_eq!(lines.len(), 501);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let meta = fs::read_to_string(dir.path().join("a.csv.meta")).unwrap();
    assert!(meta.contains("seed=9"));
    assert!(meta.contains("lrdq_version="));
    assert!(meta.lines().any(|l| l.starts_with("argv=")));
}

#[test]
fn seed_flag_beats_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lrdq"));
        cmd.args(["generate", "--packets", "50"]).env_remove("LRDQ_SEED");
        if let Some(e) = env {
            cmd.env("LRDQ_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("4"), None), run(None, Some("4")));
    assert_eq!(run(Some("5"), Some("4")), run(None, Some("4")));
    assert_ne!(run(Some("5"), None), run(None, Some("4")));
}

#[test]
fn rejects_alpha_at_or_below_one() {
    let out = lrdq(&["generate", "--alpha", "0.9", "--packets", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha must exceed 1"));
    assert!(out.stdout.is_empty());
}

#[test]
fn hurst_flag_sets_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    ok(&["generate", "--hurst", "0.8", "--packets", "10", "-o", s(&out)]);
    let meta = fs::read_to_string(dir.path().join("h.csv.meta")).unwrap();
    assert!(meta.contains("alpha=1.4"), "{meta}");
}

#[test]
fn fluid_output_lists_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let fluid = dir.path().join("fluid.csv");
    ok(&["generate", "--cycles", "7", "--fluid-out", s(&fluid)]);
    let text = fs::read_to_string(&fluid).unwrap();
    assert_eq!(text.lines().next(), Some("on_s,off_s"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn simulate_hand_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = hand_trace(dir.path());
    let timeline = dir.path().join("tl.csv");
    let out = ok(&["simulate", "--trace", s(&trace), "--bandwidth", "1000", "--timeline", s(&timeline)]);
    assert_eq!(out, "mean_q,peak_q,busy_fraction,duration_s,offered_utilization\n1.25,2,1,2,4\n");
    let tl = fs::read_to_string(&timeline).unwrap();
    assert_eq!(tl.lines().next(), Some("time_s,queue_len"));
    assert_eq!(tl.lines().last().unwrap().split(',').nth(1), Some("0"));
}

#[test]
fn simulate_needs_exactly_one_rate() {
    let dir = tempfile::tempdir().unwrap();
    let trace = hand_trace(dir.path());
    assert!(!lrdq(&["simulate", "--trace", s(&trace)]).status.success());
    assert!(!lrdq(&["simulate", "--trace", s(&trace), "--bandwidth", "1", "--utilization", "0.5"]).status.success());
}

#[test]
fn calibrated_simulation_hits_target() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    ok(&["generate", "--model", "poisson", "--packets", "2000", "-o", s(&trace)]);
    let out = ok(&["simulate", "--trace", s(&trace), "--utilization", "0.62"]);
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[4] - 0.62).abs() < 1e-9, "{out}");

    let cal = ok(&["calibrate", "--trace", s(&trace), "--utilization", "0.62"]);
    assert_eq!(cal.lines().next(), Some("bandwidth_bytes_per_s,utilization"));
}

#[test]
fn missing_trace_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("never.csv");
    let out = lrdq(&["simulate", "--trace", "/definitely/not/here.csv", "--bandwidth", "1", "-o", s(&out_path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("here.csv"));
    assert!(!out_path.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn shuffle_with_one_block_rebases() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time_s,size_bytes\n5.000000000,10\n5.500000000,20\n7.000000000,30\n").unwrap();
    let plan = dir.path().join("plan.csv");
    let out = ok(&["shuffle", "--trace", s(&trace), "--blocksize", "10", "--plan-out", s(&plan)]);
    assert_eq!(out, "time_s,size_bytes\n0.000000000,10\n0.500000000,20\n2.00000000,30\n");
    assert!(fs::read_to_string(&plan).unwrap().contains("position,block\n0,0\n"));
}

#[test]
fn sweeps_emit_replication_tables() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    ok(&["generate", "--packets", "3000", "-o", s(&trace)]);

    let blocks = dir.path().join("blocks.csv");
    ok(&["sweep-blocks", "--trace", s(&trace), "--blocksizes", "1,10,100", "--reps", "3", "-o", s(&blocks)]);
    let text = fs::read_to_string(&blocks).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,mean_of_means,std_dev,n_reps,rep_1,rep_2,rep_3");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,"));
    let meta = fs::read_to_string(dir.path().join("blocks.csv.meta")).unwrap();
    assert!(meta.contains("bandwidth="));

    let samples = ok(&["sweep-samples", "--trace", s(&trace), "--sizes", "100,1000,3000", "--reps", "2"]);
    let rows: Vec<&str> = samples.lines().collect();
    assert_eq!(rows.len(), 4);
    // The full-length point has one replication and an empty second cell.
    let cells: Vec<&str> = rows[3].split(',').collect();
    assert_eq!((cells[0], cells[2], cells[3], cells[5]), ("3000", "", "1", ""), "{}", rows[3]);
    assert_eq!(cells[1], cells[4]);

    let gen = ok(&["sweep-samples", "--model", "poisson", "--sizes", "100,200", "--reps", "2", "--jobs", "1"]);
    assert_eq!(gen.lines().count(), 3);
}

#[test]
fn hurst_reports_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    ok(&["generate", "--model", "poisson", "--mean-gap", "0.01", "--packets", "200000", "-o", s(&trace)]);
    let out = ok(&["hurst", "--trace", s(&trace), "--max-level", "100"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "H,slope,base_bin_s,levels,out_of_range");
    let h: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert!((h - 0.5).abs() < 0.1, "{h}");
    assert!(lines[1].contains("1;2;5;10;20;50;100"));
}
