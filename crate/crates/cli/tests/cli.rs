use std::path::Path;
use std::process::{Command, Output};

fn segsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segsim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn simulate(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--model", "PP", "--runs", "20", "--seed", "5", "--out", out];
    args.extend_from_slice(extra);
    segsim(&args, dir)
}

#[test]
fn models_lists_all_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = segsim(&["models"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["PP", "VI", "TS", "RP", "SWITCH"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing:\n{text}");
    }
    let pp = segsim(&["models", "PP"], dir.path());
    let source = String::from_utf8(pp.stdout).unwrap();
    assert!(source.contains("@model PP") && source.contains("@bound 10000"));
    assert_eq!(code(&segsim(&["models", "NOPE"], dir.path())), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&segsim(&["simulate", "--model", "PP", "--runs", "0"], dir.path())),
        2
    );
    assert_eq!(
        code(&segsim(
            &["simulate", "--model", "PP", "--c", "3", "--runs", "1"],
            dir.path()
        )),
        2
    );
    assert_eq!(code(&segsim(&["simulate", "--model", "missing.crn"], dir.path())), 2);
    assert_eq!(code(&segsim(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&segsim(&["--help"], dir.path())), 0);
    assert_eq!(code(&simulate(dir.path(), "a", &["--t-end", "5"])), 0);
    let unknown = segsim(
        &["transient", "a/archive.csv", "--at", "1", "--species", "Wolf"],
        dir.path(),
    );
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8(unknown.stderr).unwrap().contains("Wolf"));
}

#[test]
fn format_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "run,terminal,time,X\n0,horizon,0,1\n").unwrap();
    assert_eq!(
        code(&segsim(
            &["transient", "bad.csv", "--at", "1", "--species", "X"],
            dir.path()
        )),
        3
    );
    std::fs::write(
        dir.path().join("bad.crn"),
        "@model M\n@species X\n@reaction r: X -> @ 1\n",
    )
    .unwrap();
    assert_eq!(
        code(&segsim(&["simulate", "--model", "bad.crn", "--runs", "1"], dir.path())),
        3
    );
}

#[test]
fn archives_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["ssa", "segmental", "abstract"] {
        for out in ["x", "y"] {
            let o = simulate(
                dir.path(),
                out,
                &["--method", method, "--c", "2", "--t-end", "50", "--threads", "1"],
            );
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        let x = std::fs::read(dir.path().join("x/archive.csv")).unwrap();
        let y = std::fs::read(dir.path().join("y/archive.csv")).unwrap();
        assert!(x == y, "{method} archives differ");
    }
}

#[test]
fn transient_compares_archives() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(dir.path(), "seg", &["--t-end", "50"])), 0);
    assert_eq!(
        code(&simulate(dir.path(), "ssa", &["--method", "ssa", "--t-end", "50"])),
        0
    );
    let report = |a: &str, b: &str, out: &str| {
        let o = segsim(
            &["transient", a, b, "--at", "25", "--species", "Pred", "--out", out],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(dir.path().join(out).join("report.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()
    };
    let same = report("seg/archive.csv", "seg/archive.csv", "r0");
    assert_eq!(same["emd"].as_f64(), Some(0.0));
    let ab = report("seg/archive.csv", "ssa/archive.csv", "r1");
    let ba = report("ssa/archive.csv", "seg/archive.csv", "r2");
    assert_eq!(ab["emd"], ba["emd"]);
    assert!(ab["emd"].as_f64().unwrap() >= 0.0);
    assert!(dir.path().join("r1/hist_a.csv").exists() && dir.path().join("r1/hist_b.csv").exists());
}

#[test]
fn memory_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let first = simulate(dir.path(), "m1", &["--c", "2", "--k", "5", "--memory-out", "mem.json"]);
    assert_eq!(code(&first), 0);
    let second = simulate(dir.path(), "m2", &["--c", "2", "--memory-in", "mem.json"]);
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m2/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["k"].as_u64(), Some(5));
    let mismatch = simulate(dir.path(), "m3", &["--c", "1.5", "--memory-in", "mem.json"]);
    assert_eq!(code(&mismatch), 3);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = segsim(
        &[
            "bench", "--model", "SWITCH", "--c", "2", "--k", "5,10", "--runs", "20", "--t-end", "20", "--out", "b",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b/speedup.csv")).unwrap();
    assert!(csv.starts_with("c,k=5,k=10\n2,"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/bench.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 2);
    assert_eq!(report["cells"][0]["window_mean_time_s"].as_array().unwrap().len(), 10);
}
