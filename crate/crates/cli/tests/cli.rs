use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"{
    "grid_width": 32,
    "grid_height": 32,
    "lo_waist": 6.0,
    "mask_hi": [16, 16],
    "radii": [1, 3],
    "clusters": 20,
    "sweep_clusters": 10,
    "sweep_repeats": 2,
    "photon_budgets": [0.8, 8.0],
    "classical_photons_per_frame": [250.0],
    "cross_section_span": 24
}"#;

fn qshadow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qshadow"))
        .args(args)
        .env("QSHADOW_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn every_command_succeeds_and_lists_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    for cmd in ["theory", "simulate", "classical", "sweep"] {
        let out = tmp.path().join(cmd);
        let o = qshadow(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&out);
        assert_eq!(m["command"], cmd);
        assert_eq!(m["seeds"]["master"], 5);
        let files = m["files"].as_array().unwrap();
        assert!(!files.is_empty());
        for f in files {
            assert!(out.join(f.as_str().unwrap()).is_file(), "{cmd}: missing {f}");
        }
    }
}

#[test]
fn bit_exact_sweeps_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = qshadow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--bit-exact", "--workers", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["sweep.csv", "sweep_quantum.csv", "sweep_classical.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |seed: &str| {
        let out = tmp.path().join(seed);
        assert!(qshadow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]).status.success());
        std::fs::read(out.join("vprobe_R3.csv")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    for bad in [
        r#"{"grid_widht": 32}"#,
        r#"{"radii": []}"#,
        r#"{"lo_waist": -1.0}"#,
        "not json",
    ] {
        let cfg = write_config(tmp.path(), bad);
        let o = qshadow(&["theory", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(2), "{bad}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = qshadow(&["render", "--config", "x", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let o = qshadow(&["theory", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.json");
    let o = qshadow(&["theory", "--config", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = qshadow(&["theory", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
