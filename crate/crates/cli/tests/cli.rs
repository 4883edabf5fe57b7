//! End-to-end CLI checks: exit codes, file outputs, and manifest replay.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gopsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gopsim"))
}

fn sample_trace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_trace.csv")
}

fn run(args: &[&str]) -> Output {
    gopsim().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "analyze",
        "--trace",
        "/no/such/file.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MissingInput"));
}

#[test]
fn bad_mix_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "generate",
        "--n",
        "10",
        "--mix",
        "slow:0.4,fast:0.4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BadMix"));
}

#[test]
fn unknown_operation_in_trace_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.csv");
    std::fs::write(
        &trace,
        "video_id,gop_index,operation,vm_type,content_type,gop_size_mb,frame_count,transcode_time_s\n\
         v1,0,audio,gpu,slow,2.50,250,4.10\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnknownEnum"));
}

#[test]
fn analyze_per_video_groups_by_video() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "analyze",
        "--trace",
        sample_trace().to_str().unwrap(),
        "--per-video",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let per_video = std::fs::read_to_string(out_dir.join("operation_means_per_video.csv")).unwrap();
    let mut videos: Vec<&str> =
        per_video.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    videos.sort_unstable();
    videos.dedup();
    assert_eq!(videos, ["v1", "v2"]);
}

#[test]
fn suitability_reproduces_worked_rows() {
    let dir = tempfile::tempdir().unwrap();
    let etc = dir.path().join("etc.csv");
    std::fs::write(&etc, "task_id,general,cpu_opt,mem_opt,gpu\n0,12.000000,5.000000,6.500000,4.000000\n")
        .unwrap();

    let out_dir = dir.path().join("p50");
    let out = run(&[
        "suitability",
        "--etc",
        etc.to_str().unwrap(),
        "--perf-pref",
        "0.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("delta_th=5.000000"));
    let csv = std::fs::read_to_string(out_dir.join("suitability.csv")).unwrap();
    assert_eq!(
        csv,
        "task_id,delta_th,general,cpu_opt,mem_opt,gpu\n0,5.000000,0.0000,1.0000,0.7079,0.9665\n"
    );

    let out_dir = dir.path().join("p98");
    let out = run(&[
        "suitability",
        "--etc",
        etc.to_str().unwrap(),
        "--perf-pref",
        "0.98",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let csv = std::fs::read_to_string(out_dir.join("suitability.csv")).unwrap();
    let gpu_score = csv.lines().nth(1).unwrap().split(',').next_back().unwrap();
    assert_eq!(gpu_score, "1.0000");

    let out_dir = dir.path().join("naive");
    let out = run(&[
        "suitability",
        "--etc",
        etc.to_str().unwrap(),
        "--method",
        "naive",
        "--k",
        "1.0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let csv = std::fs::read_to_string(out_dir.join("suitability.csv")).unwrap();
    assert_eq!(
        csv,
        "task_id,delta_th,general,cpu_opt,mem_opt,gpu\n0,,0.0000,0.8750,0.6875,1.0000\n"
    );
}

#[test]
fn generate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = run(&[
            "generate",
            "--n",
            "100",
            "--seed",
            "1",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_ok(&out);
    }
    for file in ["workload.csv", "etc.csv"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
}

/// The ETC baseline column is the clamped regression prediction of the
/// workload's frame counts, recomputed here from the emitted CSVs.
#[test]
fn generate_gpu_column_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "generate",
        "--n",
        "1000",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let workload = std::fs::read_to_string(out_dir.join("workload.csv")).unwrap();
    let mut frames_of = std::collections::BTreeMap::new();
    for line in workload.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let task_id: u64 = fields[0].parse().unwrap();
        let frames: f64 = fields[4].parse().unwrap();
        frames_of.insert(task_id, frames);
    }
    let etc = std::fs::read_to_string(out_dir.join("etc.csv")).unwrap();
    assert_eq!(etc.lines().next().unwrap(), "task_id,general,cpu_opt,mem_opt,gpu");
    let mut rows = 0;
    for line in etc.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let task_id: u64 = fields[0].parse().unwrap();
        let f = frames_of[&task_id];
        let expected = (0.30 + 0.012 * f + 4.0e-6 * f * f).max(0.05);
        assert_eq!(fields[4], format!("{expected:.6}"), "task {task_id}");
        rows += 1;
    }
    assert_eq!(rows, 1000);
}

#[test]
fn suitability_cost_pref_form_yields_negative_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let etc = dir.path().join("etc.csv");
    std::fs::write(&etc, "task_id,general,cpu_opt,mem_opt,gpu\n0,12.000000,5.000000,6.500000,4.000000\n")
        .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "suitability",
        "--etc",
        etc.to_str().unwrap(),
        "--cost-pref",
        "0.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    // ln(1)/alpha - beta = -5 under the published cost form
    assert!(String::from_utf8_lossy(&out.stdout).contains("delta_th=-5.000000"));
}

#[test]
fn simulate_infinite_allowance_never_misses() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert_ok(&run(&["generate", "--n", "40", "--seed", "5", "--out", gen.to_str().unwrap()]));
    let sim = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--workload",
        gen.join("workload.csv").to_str().unwrap(),
        "--etc",
        gen.join("etc.csv").to_str().unwrap(),
        "--cluster",
        "gpu=1,general=1",
        "--allowance",
        "inf",
        "--reps",
        "3",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let summary = std::fs::read_to_string(sim.join("summary.csv")).unwrap();
    let miss_line = summary.lines().find(|l| l.starts_with("miss_rate")).unwrap();
    assert_eq!(miss_line, "miss_rate,0.000000,0.000000,3");
}

#[test]
fn simulate_parallel_matches_serial() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert_ok(&run(&["generate", "--n", "60", "--seed", "11", "--out", gen.to_str().unwrap()]));
    let base: Vec<String> = [
        "simulate",
        "--workload",
        gen.join("workload.csv").to_str().unwrap(),
        "--etc",
        gen.join("etc.csv").to_str().unwrap(),
        "--cluster",
        "gpu=1,cpu_opt=2",
        "--reps",
        "6",
        "--regen-arrivals",
        "--seed",
        "9",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    let mut args = base.clone();
    args.extend(["--out".into(), serial.to_str().unwrap().into()]);
    assert_ok(&run(&args.iter().map(String::as_str).collect::<Vec<_>>()));
    let mut args = base;
    args.extend([
        "--parallel".into(),
        "4".into(),
        "--out".into(),
        parallel.to_str().unwrap().into(),
    ]);
    assert_ok(&run(&args.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(
        std::fs::read(serial.join("reps.csv")).unwrap(),
        std::fs::read(parallel.join("reps.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(serial.join("summary.csv")).unwrap(),
        std::fs::read(parallel.join("summary.csv")).unwrap()
    );
}

#[test]
fn emit_events_writes_ordered_log() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert_ok(&run(&["generate", "--n", "10", "--seed", "2", "--out", gen.to_str().unwrap()]));
    let sim = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--workload",
        gen.join("workload.csv").to_str().unwrap(),
        "--etc",
        gen.join("etc.csv").to_str().unwrap(),
        "--cluster",
        "gpu=1",
        "--allowance",
        "1",
        "--emit-events",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let events = std::fs::read_to_string(sim.join("events.csv")).unwrap();
    assert!(events.starts_with("time_s,event,task_id,vm_id\n"));
    assert_eq!(events.matches(",arrive,").count(), 10);
    assert_eq!(events.matches(",start,").count(), 10);
    assert_eq!(events.matches(",finish,").count(), 10);
    let times: Vec<f64> = events
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn config_mismatch_and_unknown_key_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "command=generate\nn=5\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CommandMismatch"));

    let cfg = dir.path().join("cfg2.txt");
    std::fs::write(&cfg, "bogus=1\n").unwrap();
    let out = run(&[
        "generate",
        "--n",
        "5",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnknownConfigKey"));
}

/// Flags override config, and the manifest records the merged result.
#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "n=5\nseed=3\nwindow=10\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let manifest = std::fs::read_to_string(out_dir.join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("n=8\n"), "{manifest}");
    assert!(manifest.contains("seed=3\n"));
    assert!(manifest.contains("window=10\n"));
    let workload = std::fs::read_to_string(out_dir.join("workload.csv")).unwrap();
    assert_eq!(workload.lines().count(), 9);
}
