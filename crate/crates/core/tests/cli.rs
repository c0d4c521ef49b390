//! End-to-end runs of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn vhetnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vhetnet"))
        .current_dir(dir)
        .env_remove("VHETNET_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&fs::read(dir.join(format!("{name}.manifest.json"))).unwrap()).unwrap()
}

#[test]
fn missing_config_field_is_named() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), r#"{"r_C": 1000.0, "H": 320.0}"#).unwrap();
    let o = vhetnet(
        d.path(),
        &["--config", "c.json", "simulate", "--trials", "1000"],
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("missing field `h`"), "{}", stderr(&o));
}

#[test]
fn invalid_values_and_flags_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = vhetnet(d.path(), &["--set", "m_TBS_N=0.3", "simulate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("m_TBS_N"), "{}", stderr(&o));
    let o = vhetnet(d.path(), &["simulate", "--no-such-flag"]);
    assert!(!o.status.success());
    let o = vhetnet(d.path(), &["--set", "nope=1", "simulate"]);
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn help_lists_every_flag() {
    let d = tempfile::tempdir().unwrap();
    let o = vhetnet(d.path(), &["simulate", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--policy",
        "--gamma-db",
        "--trials",
        "--seed",
        "--threads",
        "--config",
        "--preset",
        "--set",
        "--out",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    let o = vhetnet(d.path(), &["coverage-sweep", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--gamma-db-min",
        "--gamma-db-max",
        "--steps",
        "--vary",
        "--values",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn simulate_is_reproducible_and_manifested() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--policy",
        "strongest-three",
        "--gamma-db",
        "-4",
        "--trials",
        "4000",
        "--seed",
        "7",
    ];
    let run = |out: &str| {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        let o = vhetnet(d.path(), &a);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(d.path().join(out).join("simulate.json")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let m = manifest(&d.path().join("a"), "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["subcommand"], "simulate");
    let outs = m["outputs"].as_array().unwrap();
    assert_eq!(outs.len(), 1);
    assert_eq!(outs[0]["path"], "simulate.json");
    assert_eq!(outs[0]["sha256"], hex::encode(Sha256::digest(&a)));
    assert_eq!(
        m["parameters"]["command"]["simulate"]["policy"],
        "strongest-three"
    );
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["trials"], 4000);
}

#[test]
fn manifest_matches_published_schema_fields() {
    let d = tempfile::tempdir().unwrap();
    let o = vhetnet(
        d.path(),
        &["validate-dists", "--draws", "2000", "--points", "5"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&d.path().join("out"), "validate-dists");
    let schema: Value =
        serde_json::from_str(include_str!("../schemas/manifest.schema.json")).unwrap();
    let mut want: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let mut got: Vec<&str> = m.as_object().unwrap().keys().map(String::as_str).collect();
    want.sort();
    got.sort();
    assert_eq!(want, got);
    let cfg_schema: Value =
        serde_json::from_str(include_str!("../schemas/config.schema.json")).unwrap();
    let mut want: Vec<&str> = cfg_schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let mut got: Vec<&str> = m["config"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    want.sort();
    got.sort();
    assert_eq!(want, got);
    let names: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["distance_table.csv", "distance_ks.csv", "reductions.json"]
    );
    let table = fs::read_to_string(d.path().join("out").join("distance_table.csv")).unwrap();
    assert!(table.lines().count() > 1);
}

#[test]
fn thread_count_from_env_and_flag() {
    let d = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_vhetnet"));
        c.current_dir(d.path()).env_remove("VHETNET_THREADS");
        if let Some(e) = env {
            c.env("VHETNET_THREADS", e);
        }
        c.args(["simulate", "--trials", "2000", "--out", out]);
        if let Some(f) = flag {
            c.args(["--threads", f]);
        }
        assert!(c.output().unwrap().status.success());
        let m = manifest(&d.path().join(out), "simulate");
        (
            m["threads"].as_u64().unwrap(),
            fs::read(d.path().join(out).join("simulate.json")).unwrap(),
        )
    };
    let (t_env, a) = run(Some("2"), None, "e");
    let (t_flag, b) = run(Some("2"), Some("3"), "f");
    assert_eq!((t_env, t_flag), (2, 3));
    assert_eq!(a, b);
}

#[test]
fn coverage_sweep_over_n() {
    let d = tempfile::tempdir().unwrap();
    let o = vhetnet(
        d.path(),
        &[
            "coverage-sweep",
            "--gamma-db-min",
            "-4",
            "--gamma-db-max",
            "0",
            "--steps",
            "2",
            "--vary",
            "N",
            "--values",
            "5,10",
            "--mc-trials",
            "2000",
            "--triples",
            "2000",
            "--assoc-trials",
            "2000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(d.path().join("out").join("coverage_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "param,x,gamma_db,p_total_analytic,p_total_mc,mc_std_error,p_abs_cond,p_tbs_cond,assoc"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("N,5.0,-4.0,"));
    assert!(lines[4].starts_with("N,10.0,0.0,"));
}

#[test]
fn deploy_opt_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,y,w\n");
    for i in 0..20 {
        let (cx, cy) = if i < 10 { (0.0, 0.0) } else { (10.0, 10.0) };
        csv += &format!(
            "{},{},1\n",
            cx + 0.1 * (i % 3) as f64,
            cy + 0.1 * (i % 5) as f64
        );
    }
    fs::write(d.path().join("s.csv"), csv).unwrap();
    for strategy in ["fading-aware", "classical-kmeans", "random"] {
        let o = vhetnet(
            d.path(),
            &[
                "deploy-opt",
                "--input",
                "s.csv",
                "--k",
                "2",
                "--strategy",
                strategy,
            ],
        );
        assert!(o.status.success(), "{strategy}: {}", stderr(&o));
        let centers = fs::read_to_string(d.path().join("out").join("centers.csv")).unwrap();
        assert_eq!(centers.lines().count(), 3);
        let state: Value = serde_json::from_slice(
            &fs::read(d.path().join("out").join("cluster_state.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(state["state"]["assignment"].as_array().unwrap().len(), 20);
    }
    fs::write(d.path().join("bad.csv"), "x,y,w\n0,0,-1\n").unwrap();
    let o = vhetnet(d.path(), &["deploy-opt", "--input", "bad.csv", "--k", "1"]);
    assert!(!o.status.success());
}

#[test]
fn heatmap_writes_pgm_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let mut study: Value =
        serde_json::from_str(include_str!("../scenarios/deployment_comparison.json")).unwrap();
    study["scenario"]["grid_n"] = 4.into();
    study["scenario"]["trials_per_cell"] = 20.into();
    study["scenario"]["weight_trials"] = 20.into();
    study["scenario"]["k"] = 3.into();
    fs::write(d.path().join("study.json"), study.to_string()).unwrap();
    let o = vhetnet(
        d.path(),
        &[
            "heatmap",
            "--scenario",
            "study.json",
            "--strategy",
            "classical-kmeans",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let pgm = fs::read(d.path().join("out").join("heatmap_classical-kmeans.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n4 4\n255\n"));
    assert_eq!(pgm.len(), b"P5\n4 4\n255\n".len() + 16);
    let side: Value = serde_json::from_slice(
        &fs::read(d.path().join("out").join("heatmap_classical-kmeans.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(side["extents"]["cols"], 4);
    assert_eq!(
        manifest(&d.path().join("out"), "heatmap")["outputs"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}
