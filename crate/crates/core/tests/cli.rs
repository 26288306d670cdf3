use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use magnon_sta::spectra::classify_phase;

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_magnon-sta"));
    cmd.args(args).env_remove("NHS_NUM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn simulate_preset_writes_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nhs.csv");
    ok(&[
        "simulate",
        "--preset",
        "NHS-d",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,re_a,im_a,re_m,im_m,p0r,p1r,log_scale,tracking_fidelity"
    );
    let r = rows(&out);
    assert_eq!(r.len(), 1001);
    assert_eq!((f(&r[0][5]), f(&r[0][6])), (1.0, 0.0));
    assert_eq!(r[0][1], "1.0000000000000000e0");

    let again = dir.path().join("again.csv");
    ok(&[
        "simulate",
        "--preset",
        "NHS-d",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn uncoupled_run_never_transfers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"protocol": "cd", "params": {"g_m": 0}}"#).unwrap();
    let out = dir.path().join("g0.csv");
    ok(&[
        "simulate",
        "--preset",
        "CD-a",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(rows(&out).iter().all(|r| f(&r[6]) == 0.0));
}

#[test]
fn json_trajectory() {
    let out = ok(&[
        "simulate",
        "--preset",
        "CD-a",
        "--format",
        "json",
        "--diagonal-sign",
        "gain-loss",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p1r"].as_array().unwrap().len(), 1001);
}

#[test]
fn sweep_shapes_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"sweep": {"x": {"axis": "alpha", "range": [-0.5, 0.5], "points": 3},
                      "y": {"axis": "eta", "range": [-0.5, 0.5], "points": 3}}}"#,
    )
    .unwrap();
    let out2 = dir.path().join("grid.csv");
    let c = cfg.to_str().unwrap();
    ok(&[
        "sweep",
        "--preset",
        "CD-d",
        "--config",
        c,
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    let text = fs::read_to_string(&out2).unwrap();
    assert!(text.starts_with("alpha,eta,probability\n"));
    let r = rows(&out2);
    assert_eq!(r.len(), 9);
    assert_eq!((f(&r[1][0]), f(&r[1][1])), (-0.5, 0.0));
    assert!(!dir.path().join("grid.csv.errors").exists());

    fs::write(
        &cfg,
        r#"{"sweep": {"x": {"axis": "eta", "range": [-0.5, 0.5], "points": 3}}}"#,
    )
    .unwrap();
    let out1 = dir.path().join("line.csv");
    let single = run(
        &[
            "sweep",
            "--preset",
            "CD-d",
            "--config",
            c,
            "--out",
            out1.to_str().unwrap(),
        ],
        &[("NHS_NUM_THREADS", "1")],
    );
    assert_eq!(single.status.code(), Some(0));
    let line = rows(&out1);
    assert_eq!(
        fs::read_to_string(&out1).unwrap().lines().next(),
        Some("x,probability")
    );
    // The α = 0 row of the 2D grid equals the η sweep.
    for i in 0..3 {
        assert_eq!(r[3 + i][2], line[i][1]);
    }
}

#[test]
fn sweep_failures_go_to_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"sweep": {"x": {"axis": "g_over_kc", "range": [0.5, 1.0], "points": 3}}}"#,
    )
    .unwrap();
    let out = dir.path().join("g.csv");
    ok(&[
        "sweep",
        "--preset",
        "CD-c",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    assert_eq!(r[2][1], "nan");
    let errors = fs::read_to_string(dir.path().join("g.csv.errors")).unwrap();
    assert_eq!(errors.lines().count(), 2);
    assert!(errors.contains("pole"));
}

#[test]
fn phase_diagram_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pd.csv");
    ok(&["phase-diagram", "--out", out.to_str().unwrap()]);
    let cells = rows(&out);
    assert_eq!(cells.len(), 40_000);
    let mut regions = [0usize; 5];
    for c in &cells {
        let p = classify_phase(f(&c[0]), 1.0, f(&c[1]));
        assert_eq!(c[2].parse::<i32>().unwrap(), p.symmetry.code());
        assert_eq!(c[3].parse::<i32>().unwrap(), p.stability.code());
        regions[p.region() as usize] += 1;
    }
    assert!(regions[1..].iter().all(|&n| n > 0));
    let locus = rows(&dir.path().join("pd.ep_locus.csv"));
    for l in &locus {
        assert!((f(&l[1]) - 0.5 * (1.0 + f(&l[0]))).abs() <= 1e-14);
    }
    let small = dir.path().join("small.csv");
    let cfg = dir.path().join("pd.json");
    fs::write(
        &cfg,
        r#"{"phase_diagram": {"g_points": 4, "km_points": 4, "g_max": 2.0, "km_max": 3.0}}"#,
    )
    .unwrap();
    ok(&[
        "phase-diagram",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        small.to_str().unwrap(),
    ]);
    let locus = rows(&dir.path().join("small.ep_locus.csv"));
    assert_eq!(
        locus[1],
        vec!["1.0000000000000000e0", "1.0000000000000000e0"]
    );
}

#[test]
fn calibrate_report_shape() {
    let out = ok(&["calibrate", "--jobs", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let presets = ok(&["presets", "list", "--format", "json"]);
    let n = serde_json::from_slice::<serde_json::Value>(&presets.stdout)
        .unwrap()
        .as_array()
        .unwrap()
        .len();
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), n * 2 * 3);
    for e in entries {
        if let Some(d) = e["deviation"].as_f64() {
            assert!(d >= 0.0);
        }
    }
    let nhs_a_close = entries
        .iter()
        .filter(|e| e["preset"] == "NHS-a")
        .any(|e| e["p1r"].as_f64().is_some_and(|p| (p - 0.976).abs() <= 0.05));
    let flagged = v["flags"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f.as_str().unwrap().contains("no convention match"));
    assert!(nhs_a_close || flagged);
}

#[test]
fn preset_listing_round_trips_through_the_config_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["presets", "list", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let first = &v[0];
    let cfg = dir.path().join("p.json");
    fs::write(&cfg, serde_json::to_string(&first["config"]).unwrap()).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    ok(&[
        "simulate",
        "--preset",
        first["name"].as_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let csv = ok(&["presets", "list"]);
    assert!(String::from_utf8_lossy(&csv.stdout).contains("CD-d,cd,1,2,2,0,2,0.999"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"params": {"g_mm": 1}}"#).unwrap();
    assert_eq!(
        run(&["simulate", "--config", bad.to_str().unwrap()], &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--preset", "nope"], &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--time-convention", "both"], &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(
        run(&["sweep", "--preset", "CD-a"], &[]).status.code(),
        Some(2)
    );
    let env = run(&["calibrate"], &[("NHS_NUM_THREADS", "lots")]);
    assert_eq!(env.status.code(), Some(2));

    let pole = run(&["simulate", "--preset", "CD-c"], &[]);
    assert_eq!(pole.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&pole.stderr).contains("t = 0"));

    let missing = dir.path().join("no/such/dir/out.csv");
    let io = run(
        &[
            "simulate",
            "--preset",
            "NHS-a",
            "--out",
            missing.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(io.status.code(), Some(4));
    let absent = run(&["simulate", "--config", "/nonexistent/cfg.json"], &[]);
    assert_eq!(absent.status.code(), Some(4));
}
