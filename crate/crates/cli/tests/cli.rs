use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn febench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_febench"))
        .args(args)
        .env_remove("FEBENCH_CONFIG")
        .env_remove("FEBENCH_OUT")
        .env_remove("FEBENCH_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, value: &Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn fm_sweep_writes_a_carrier_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fm");
    let o = febench(&["run", "fm-fig3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(out.join("fm_sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "carrier_hz,offset_hz,v_s_v,v_s_lower_v,above_noise");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 121);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let (best, _) = rows.iter().enumerate().fold((0, 0.0), |b, (i, r)| if r[2] > b.1 { (i, r[2]) } else { b });
    // The signal vanishes at the distribution peak and is largest on a flank.
    let summary = read_json(&out.join("fm_summary.json"));
    let peak = summary["distribution_peak_hz"].as_f64().unwrap();
    assert!((rows[60][0] - peak).abs() < 1.0);
    assert!(rows[best][2] > 10.0 * rows[60][2]);
    assert!(rows[best][0] > 150e9 && rows[best][0] < 170e9);
}

#[test]
fn sensitivity_json_reports_s_c() {
    let tmp = tempfile::tempdir().unwrap();
    let o = febench(&["run", "sensitivity", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&tmp.path().join("sensitivity.json"));
    let s_c = v["s_c_f_per_rthz"].as_f64().unwrap();
    assert!((s_c / 0.34e-18 - 1.0).abs() < 0.02, "{s_c}");

    let m = read_json(&tmp.path().join("manifest.json"));
    assert_eq!(m["scenario"], "sensitivity");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|f| f["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["config.resolved.json", "sensitivity.json"]);
}

#[test]
fn missing_field_exits_2_with_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let t = febench(&["list", "--template", "lz-rate"]);
    let mut cfg: Value = serde_json::from_slice(&t.stdout).unwrap();
    cfg["params"].as_object_mut().unwrap().remove("f_mf_hz");
    let path = write_config(tmp.path(), &cfg);

    for cmd in ["validate", "run"] {
        let o = febench(&[cmd, "--config", &path, "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("params.f_mf_hz"), "{}", stderr(&o));
    }
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn unknown_keys_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let t = febench(&["list", "--template", "tdo"]);
    let mut cfg: Value = serde_json::from_slice(&t.stdout).unwrap();
    cfg["params"]["tone_freq"] = 1.0.into();
    let o = febench(&["validate", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field `tone_freq`"), "{}", stderr(&o));

    let o = febench(&["validate", "--config", &write_config(tmp.path(), &serde_json::json!({"scenario": "tdo", "seeds": 1}))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_of_range_value_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let t = febench(&["list", "--template", "sensitivity"]);
    let mut cfg: Value = serde_json::from_slice(&t.stdout).unwrap();
    cfg["params"]["bandwidth_hz"] = (-1.0).into();
    let o = febench(&["run", "--config", &write_config(tmp.path(), &cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.bandwidth_hz"));
}

fn output_digests(dir: &Path) -> Vec<(String, String)> {
    let m = read_json(&dir.join("manifest.json"));
    m["outputs"].as_array().unwrap().iter().map(|f| (f["file"].to_string(), f["sha256"].to_string())).collect()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for scenario in ["fits", "lz-rate", "tdo"] {
        let a = tmp.path().join(format!("{scenario}-a"));
        let b = tmp.path().join(format!("{scenario}-b"));
        for d in [&a, &b] {
            let o = febench(&["run", scenario, "--seed", "11", "--out", d.to_str().unwrap()]);
            assert!(o.status.success(), "{}", stderr(&o));
        }
        assert_eq!(output_digests(&a), output_digests(&b), "{scenario}");
        for (file, _) in output_digests(&a) {
            let file = file.trim_matches('"');
            assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
        }
    }
}

#[test]
fn seed_changes_synthetic_data() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["1", "2"].iter().map(|s| tmp.path().join(s)).collect();
    for (seed, d) in ["1", "2"].iter().zip(&dirs) {
        assert!(febench(&["run", "fits", "--seed", seed, "--out", d.to_str().unwrap()]).status.success());
    }
    let a = std::fs::read(dirs[0].join("resonance_data.csv")).unwrap();
    let b = std::fs::read(dirs[1].join("resonance_data.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn environment_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_febench"))
        .args(["run", "qcap"])
        .env("FEBENCH_OUT", tmp.path())
        .env("FEBENCH_SEED", "5")
        .env_remove("FEBENCH_CONFIG")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_json(&tmp.path().join("manifest.json"))["seed"], 5);
}

#[test]
fn list_and_filters() {
    let o = febench(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() >= 12);
    // Every row carries a reproduced-artifact column.
    assert!(rows.iter().all(|r| r.split_whitespace().count() >= 4));

    let o = febench(&["list", "no-such-scenario"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);

    let o = febench(&["list", "--template", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = febench(&["run", "sensitivity", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn scenario_name_must_match_config() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &serde_json::json!({"scenario": "tdo"}));
    assert_eq!(febench(&["validate", "magnet", "--config", &path]).status.code(), Some(2));
    assert!(febench(&["validate", "tdo", "--config", &path]).status.success());
    assert_eq!(febench(&["run"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    // A numeric failure surfaces from the library as exit code 3.
    let tmp = tempfile::tempdir().unwrap();
    let t = febench(&["list", "--template", "neon-em"]);
    let mut cfg: Value = serde_json::from_slice(&t.stdout).unwrap();
    cfg["params"]["target_shift"] = (-0.9).into();
    let o = febench(&["run", "--config", &write_config(tmp.path(), &cfg), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
