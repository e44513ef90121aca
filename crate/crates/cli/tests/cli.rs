use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_composite-prox"));
    c.env("COMPOSITE_PROX_LOG", "quiet");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn read_vec(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_unregularized_identity_returns_targets() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    fs::write(
        &m,
        r#"{
            "a": {"builder": "identity", "d": 3},
            "y": [1.5, -2.0, 3e-1],
            "b": {"builder": "fused", "d": 3},
            "penalty": {"kind": "l1"},
            "reg_weight": 0
        }"#,
    )
    .unwrap();
    let o = run(&["solve", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = read_vec(&dir.path().join("solution.txt"));
    for (a, b) in x.iter().zip([1.5, -2.0, 0.3]) {
        assert!((a - b).abs() < 1e-10, "{x:?}");
    }
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn solve_missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    fs::write(
        &m,
        r#"{
            "a": {"matrix": "does_not_exist.mtx"},
            "y": "y.txt",
            "b": {"builder": "identity", "d": 2},
            "penalty": {"kind": "l1"},
            "reg_weight": 1.0
        }"#,
    )
    .unwrap();
    let o = run(&["solve", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("a.matrix"), "{}", stderr(&o));
    let o = run(&["solve", "--manifest", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn malformed_manifest_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    fs::write(
        &m,
        r#"{
            "a": {"builder": "identity", "d": 2},
            "y": [1, 2],
            "b": {"builder": "identity", "d": 2},
            "penalty": {"kind": "l1"},
            "reg_weight": 1.0,
            "solver": {"kapa": 0.3}
        }"#,
    )
    .unwrap();
    let o = run(&["solve", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("kapa"), "{}", stderr(&o));
}

#[test]
fn solve_fused_unaccelerated_trace_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("fused.json");
    fs::write(
        &m,
        r#"{
            "a": {"builder": "identity", "d": 3},
            "y": [1.0, 0.0, 2.0],
            "b": {"builder": "fused", "d": 3},
            "penalty": {"kind": "l1"},
            "reg_weight": 0.5,
            "solver": {"accelerated": false, "epsilon": 1e-12},
            "output": {"solution": "out/x.txt", "trace": "out/t.csv"}
        }"#,
    )
    .unwrap();
    let o = run(&["solve", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iter,objective,inner_iters,step_norm,time_ms");
    let objs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!objs.is_empty());
    for w in objs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{objs:?}");
    }
    assert_eq!(read_vec(&dir.path().join("out/x.txt")).len(), 3);
}

#[test]
fn solve_outer_cap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("cap.json");
    fs::write(
        &m,
        r#"{
            "a": {"builder": "identity", "d": 3},
            "y": [1.0, 0.0, 2.0],
            "b": {"builder": "fused", "d": 3},
            "penalty": {"kind": "l1"},
            "reg_weight": 0.5,
            "solver": {"outer_cap": 1, "epsilon": 1e-14}
        }"#,
    )
    .unwrap();
    let o = run(&["solve", "--manifest", m.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("run.json");
    fs::write(
        &m,
        r#"{
            "a": {"builder": "identity", "d": 4},
            "y": [1.0, 0.9, -1.0, -1.1],
            "b": {"builder": "graph", "d": 4, "edges": [[1, 2], [2, 3], [3, 4]]},
            "penalty": {"kind": "l1"},
            "reg_weight": 0.3
        }"#,
    )
    .unwrap();
    let mut outs = Vec::new();
    for sub in ["r1", "r2"] {
        let out = dir.path().join(sub);
        let o = run(&[
            "solve",
            "--manifest",
            m.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outs.push((
            fs::read(out.join("solution.txt")).unwrap(),
            fs::read(out.join("trace.csv")).unwrap(),
        ));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn prox_identity_l1() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.txt");
    fs::write(&x, "3\n-1\n0.5\n").unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "prox",
        "--penalty",
        r#"{"kind":"l1"}"#,
        "--operator",
        r#"{"builder":"identity","d":3}"#,
        "--x",
        x.to_str().unwrap(),
        "--lam",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("inner_iterations") && stdout.contains("final_step_norm"));
    let p = read_vec(&out);
    for (a, b) in p.iter().zip([2.0, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-8, "{p:?}");
    }
}

#[test]
fn prox_zero_weight_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "prox",
        "--penalty",
        r#"{"kind":"l2","weight":0}"#,
        "--operator",
        r#"{"builder":"fused","d":4}"#,
        "--x",
        "[0.3, -2, 5, 1e-3]",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = read_vec(&out);
    for (a, b) in p.iter().zip([0.3, -2.0, 5.0, 1e-3]) {
        assert!((a - b).abs() < 1e-12, "{p:?}");
    }
}

#[test]
fn prox_fused_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "prox",
        "--penalty",
        r#"{"kind":"l1","weight":0.5}"#,
        "--operator",
        r#"{"builder":"fused","d":2}"#,
        "--x",
        "[1, 0]",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = read_vec(&out);
    for (a, b) in p.iter().zip([0.5, 0.5]) {
        assert!((a - b).abs() < 1e-8, "{p:?}");
    }
}

#[test]
fn prox_inadmissible_step_reports_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "prox",
        "--penalty",
        r#"{"kind":"l1"}"#,
        "--operator",
        r#"{"builder":"fused","d":3}"#,
        "--x",
        "[1, 0, 2]",
        "--lam",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("admissible interval (0, 0.666"), "{err}");
    assert!(!out.exists());
}

#[test]
fn prox_reads_matrix_market_operator() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("b.mtx");
    fs::write(
        &mtx,
        "%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 1.0\n1 2 -1.0\n",
    )
    .unwrap();
    let out = dir.path().join("p.txt");
    let o = run(&[
        "prox",
        "--penalty",
        r#"{"kind":"l1","weight":0.5}"#,
        "--operator",
        mtx.to_str().unwrap(),
        "--x",
        "[1, 0]",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = read_vec(&out);
    assert!((p[0] - 0.5).abs() < 1e-8 && (p[1] - 0.5).abs() < 1e-8, "{p:?}");
}

#[test]
fn bench_overlap_summary_is_one_deterministic_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for (sub, jobs) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(sub);
        let o = run(&[
            "bench",
            "overlap",
            "--sizes",
            "100",
            "--repeats",
            "2",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let summary = fs::read(out.join("overlap/summary.csv")).unwrap();
        let text = String::from_utf8(summary.clone()).unwrap();
        assert_eq!(text.lines().count(), 2, "{text}");
        assert!(text.lines().nth(1).unwrap().starts_with("100,"));
        assert!(out.join("overlap/d100_seed7/trace.csv").exists());
        assert!(out.join("overlap/d100_seed8/baseline_trace.csv").exists());
        summaries.push(summary);
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn bench_fused_recovers_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "bench",
        "fused",
        "--sizes",
        "100",
        "--repeats",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fused/summary.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == "recovered").unwrap();
    assert_eq!(row[idx], "true", "{text}");
}

#[test]
fn bench_failed_runs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "bench",
        "tree",
        "--sizes",
        "50",
        "--repeats",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("tree/summary.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",1"), "{text}");
}

#[test]
fn bad_invocations_exit_one() {
    assert_eq!(code(&run(&["bench", "lasso"])), 1);
    assert_eq!(code(&run(&["solve", "--manifest", "m.json", "--bogus"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    let o = bin()
        .env("COMPOSITE_PROX_LOG", "loud")
        .args(["bench", "fused"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn help_lists_flags() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    for (sub, flags) in [
        ("solve", &["--manifest", "--out", "--seed", "--timing"][..]),
        (
            "prox",
            &[
                "--penalty",
                "--operator",
                "--x",
                "--lam",
                "--out",
                "--kappa",
                "--tol",
                "--max-iter",
            ][..],
        ),
        (
            "bench",
            &[
                "--sizes",
                "--repeats",
                "--seed",
                "--out",
                "--jobs",
                "--paper-scale",
                "--timing",
            ][..],
        ),
    ] {
        let o = run(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8_lossy(&o.stdout);
        for f in flags {
            assert!(text.contains(f), "{sub} help lacks {f}");
        }
    }
}
