use std::process::{Command, Output};

use blinkscan::linkframe::write_capture;
use blinkscan::simharness::{
    config_hash, run_script, synthesize_samples, write_trace, SynthParams, TrialSpec, UserModel,
};
use blinkscan::{Region, ScanConfig};

fn blinkscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blinkscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn metrics_on_bundled_table() {
    let o = blinkscan(&["metrics"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("aggregate: SA 87 / FAR 2.7 / SR 98.1"),
        "{text}"
    );
    assert!(text.contains("discrepant users: 1, 8, 10"), "{text}");
}

#[test]
fn metrics_on_user_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counts.csv");
    std::fs::write(
        &path,
        "user,tasks,tp,fp,fn,sa,far,sr\n1,10,9,1,0,100,10,90.9\n2,10,10,0,0,100,0,100\n",
    )
    .unwrap();
    let o = blinkscan(&["metrics", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("discrepant users: 1"));

    std::fs::write(&path, "user,tasks\n1,10\n").unwrap();
    let o = blinkscan(&["metrics", path.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = blinkscan(&[
            "simulate",
            "--scan-interval-ms",
            "500,800",
            "--depth",
            "3",
            "--screen",
            "800x600",
            "--seed",
            "7",
            "--trials",
            "40",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "interval_ms,n,sa,far,sr,avg_time_s");
    assert!(lines[1].starts_with("500,40,") && lines[2].starts_with("800,40,"));
}

#[test]
fn simulate_trace_replays() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("run.trace");
    let o = blinkscan(&[
        "simulate",
        "--scan-interval-ms",
        "700",
        "--screen",
        "640x480",
        "--trials",
        "5",
        "--trace-out",
        trace.to_str().unwrap(),
        "--trace-tasks",
        "3",
    ]);
    assert!(o.status.success());
    let o = blinkscan(&[
        "replay",
        trace.to_str().unwrap(),
        "--screen",
        "640x480",
        "--scan-interval-ms",
        "700",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"partial\": false"));
}

#[test]
fn replay_capture_and_trace_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScanConfig::new(Region::screen(800, 600), 500);
    let targets = [Region::new(100, 100, 80, 60), Region::new(600, 400, 90, 90)];
    let specs: Vec<TrialSpec> = targets
        .iter()
        .enumerate()
        .map(|(i, &t)| TrialSpec::new(i as u32 + 1, t, cfg.clone()))
        .collect();
    let (_, trace) = run_script(&specs, &UserModel::typical(5));
    let trace_path = dir.path().join("s.trace");
    write_trace(&trace_path, &trace).unwrap();
    let blk = dir.path().join("s.blk");
    write_capture(
        &blk,
        &synthesize_samples(&trace.blink_times(), 120_000, &SynthParams::default()),
    )
    .unwrap();

    let common = [
        "--screen",
        "800x600",
        "--scan-interval-ms",
        "500",
        "--target",
        "100,100,80,60",
        "--target",
        "600,400,90,90",
    ];
    let mut a = vec!["replay", trace_path.to_str().unwrap()];
    a.extend(common);
    let mut b = vec!["replay", blk.to_str().unwrap(), "--input", "capture"];
    b.extend(common);
    let (oa, ob) = (blinkscan(&a), blinkscan(&b));
    assert!(
        oa.status.success() && ob.status.success(),
        "{}",
        String::from_utf8_lossy(&ob.stderr)
    );
    assert_eq!(stdout(&oa), stdout(&ob));
    assert_eq!(trace.cfg_hash, config_hash(&cfg, 3));
}

#[test]
fn replay_corrupt_trace_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.trace");
    std::fs::write(&path, "#blinktrace v1 cfg=00\n100\tblink\n50\tblink\n").unwrap();
    let o = blinkscan(&["replay", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("malformed trace at line 3"), "{err}");
}

#[test]
fn usage_errors_exit_nonzero() {
    assert!(!blinkscan(&["simulate", "--screen", "12by4"])
        .status
        .success());
    assert!(!blinkscan(&["frobnicate"]).status.success());
    assert!(!blinkscan(&["replay", "/nonexistent/file.trace"])
        .status
        .success());
    assert!(!blinkscan(&["serve", "--input", "trace"]).status.success());
}
