use adaprep::table::Cell;
use adaprep_cli::{io, Format};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn adaprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaprep")).args(args).output().expect("binary runs")
}

fn meta_without_runtime(p: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(io::sidecar_path(p)).unwrap()).unwrap();
    v["metadata"].as_object_mut().unwrap().remove(io::RUNTIME_KEY);
    v
}

#[test]
fn list_names_every_experiment() {
    let out = adaprep(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1b", "fig2b", "fig2c", "fig2d", "fig3", "figS2", "figS5", "figS6", "figS7", "custom"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn fermion_gap_column_is_flat_without_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    let out = adaprep(&[
        "run", "--experiment", "fig1b", "--seed", "1", "--out", p.to_str().unwrap(),
        "--set", "n=2", "--set", "models=fermion", "--set", "delta=0", "--set", "v2=0.0,0.2,0.4,0.49",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = io::read(&p, Format::Csv).unwrap();
    assert_eq!(t.n_rows(), 4);
    let gaps = t.column("gap").unwrap();
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    assert!(hi / lo <= 1.5, "{gaps:?}");
    let s = t.column("S_vN").unwrap();
    assert_eq!(s[0], 0.0);
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(t.metadata["seed"], "1");
    assert_eq!(t.metadata["config_hash"].len(), 64);
    assert_eq!(t.metadata["experiment"], "fig1b");
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let out = adaprep(&[
            "run", "--experiment", "fig2b", "--seed", seed, "--out", p.to_str().unwrap(),
            "--set", "n=2", "--set", "traj=20", "--set", "cycles=6", "--set", "v2=0.3", "--set", "eps=0.1",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        p
    };
    let a = run("a.csv", "5");
    let b = run("b.csv", "5");
    let c = run("c.csv", "6");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(meta_without_runtime(&a), meta_without_runtime(&b));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    assert_ne!(meta_without_runtime(&a), meta_without_runtime(&c));
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let out = adaprep(&[
        "run", "--experiment", "fig3", "--seed", "2", "--out", p.to_str().unwrap(),
        "--set", "spins=4", "--set", "r=0,1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = io::read(&p, Format::Json).unwrap();
    assert_eq!(t.n_rows(), 4);
    assert_eq!(t.rows[0][0], Cell::Text("standard".into()));
    // ξ² at r = 0 is 1, i.e. (N + 2)/2 in units of the minimum
    assert!((t.column("xi2_over_min").unwrap()[0] - 3.0).abs() < 1e-10);
    let q = dir.path().join("again.json");
    io::emit(&t, &q, Format::Json).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "custom", "seed": 9, "n": 1, "v2": [0.1, 0.2]}"#).unwrap();
    let out = adaprep(&["run", "--config", cfg.to_str().unwrap(), "--set", "v2=0.3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "model,delta (J),v2,S_vN (nats),gap (Γ),status");
    let row = lines.next().unwrap();
    assert!(row.starts_with("spin,0,0.3,"), "{row}");
    assert!(row.ends_with(",ok"));
    assert!(lines.next().is_none());
}

#[test]
fn zero_rates_are_flagged_not_fatal() {
    let out = adaprep(&["run", "--experiment", "custom", "--seed", "1", "--set", "n=1", "--set", "gamma=0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(",0,no relaxing mode (gap = 0)"), "{row}");
}

#[test]
fn config_errors_exit_with_2() {
    let cases: [&[&str]; 6] = [
        &["run", "--experiment", "fig2b"],
        &["run", "--experiment", "fig9", "--seed", "1"],
        &["run", "--experiment", "fig2b", "--seed", "1", "--set", "bogus=1"],
        &["run", "--experiment", "fig2b", "--seed", "1", "--set", "n=7"],
        &["run", "--experiment", "fig1b", "--seed", "1", "--set", "n=6"],
        &["run", "--experiment", "fig3", "--seed", "1", "--set", "spins=5"],
    ];
    for args in cases {
        let out = adaprep(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numeric_failures_exit_with_3() {
    // a purely unitary model has no gap, which the gap sweep treats as an error
    let out = adaprep(&["run", "--experiment", "fig1b", "--seed", "1", "--set", "n=1", "--set", "gamma=0", "--set", "models=spin"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
