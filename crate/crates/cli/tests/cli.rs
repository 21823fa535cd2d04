use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;

use elastic_monotonicity::farfield::{Backend, DirectionGrid, FarFieldOperator};
use elastic_monotonicity::medium::MaterialField;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastic-mono"))
}

fn background() -> Value {
    json!({ "lambda0": 2.0, "mu0": 1.0, "rho0": 1.0, "omega": 2.0 })
}

fn disk_scene(center: [f64; 2]) -> Value {
    json!({
        "background": background(),
        "inclusions": [{ "shape": { "disk": { "center": center, "radius": 1.0 } }, "psi_lambda": 1.0 }]
    })
}

fn base(scene: Value) -> Value {
    json!({ "schema_version": 1, "scene": scene, "ladder": [16, 32] })
}

fn recon_section(alpha: [f64; 3]) -> Value {
    json!({
        "centers": { "lo": [-1.0, -1.5], "hi": [2.0, 1.5], "nx": 9, "ny": 9 },
        "radius": 0.2,
        "alpha": alpha,
        "thresholds": { "c_in": 0 }
    })
}

struct Run {
    code: i32,
    out: PathBuf,
    stdout: String,
}

fn run(dir: &TempDir, name: &str, cmd: &str, cfg: &Value, extra: &[&str]) -> Run {
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    let out = dir.path().join(name);
    let o = bin()
        .args([cmd, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        out,
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
    }
}

fn read_operator(path: &Path) -> FarFieldOperator {
    FarFieldOperator::read_csv(BufReader::new(File::open(path).unwrap())).unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn forward_empty_scene_writes_zero_matrices() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "empty", "forward", &base(json!({ "background": background() })), &[]);
    assert_eq!(r.code, 0);
    for n in [16, 32] {
        let f = read_operator(&r.out.join(format!("far_field_N{n}.csv")));
        assert_eq!(f.n(), n);
        assert!(f.matrix.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }
    let m = manifest(&r.out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["calibration"][1]["sigma"], 1.0);
}

#[test]
fn forward_disk_is_circulant_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = base(disk_scene([0.0, 0.0]));
    let r = run(&dir, "disk", "forward", &cfg, &["--n-ladder", "32"]);
    assert_eq!(r.code, 0);
    let f = read_operator(&r.out.join("far_field_N32.csv"));
    assert!(f.circulant_defect() <= 1e-10, "{}", f.circulant_defect());
    let scene: MaterialField = serde_json::from_value(cfg["scene"].clone()).unwrap();
    let direct = FarFieldOperator::assemble(&scene, DirectionGrid::new(32).unwrap(), Backend::Series { order: None }).unwrap();
    assert_eq!(f, direct);
    assert_eq!(manifest(&r.out)["ladder"], json!([32]));
}

#[test]
fn recon_is_byte_identical_across_reruns_and_threads() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["recon"] = recon_section([0.5, 0.0, 0.0]);
    let a = run(&dir, "a", "recon", &cfg, &["--threads", "1"]);
    let b = run(&dir, "b", "recon", &cfg, &["--threads", "3"]);
    assert_eq!((a.code, b.code), (0, 0));
    for file in ["indicator.csv", "indicator.pgm"] {
        assert_eq!(std::fs::read(a.out.join(file)).unwrap(), std::fs::read(b.out.join(file)).unwrap());
    }
    assert_eq!(manifest(&a.out)["config_sha256"], manifest(&b.out)["config_sha256"]);
}

#[test]
fn recon_inside_region_lies_within_inflated_disk() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["recon"] = recon_section([0.5, 0.0, 0.0]);
    let r = run(&dir, "recon", "recon", &cfg, &[]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("81 centres"));
    let inside: Vec<[f64; 2]> = csv_rows(&r.out.join("indicator.csv"))
        .into_iter()
        .filter(|row| row.last().unwrap() == "INSIDE")
        .map(|row| [row[0].parse().unwrap(), row[1].parse().unwrap()])
        .collect();
    assert!(!inside.is_empty());
    for c in inside {
        assert!(((c[0] - 0.5).powi(2) + c[1] * c[1]).sqrt() <= 1.5, "{c:?}");
    }
    let m = manifest(&r.out);
    assert_eq!(m["tolerances"]["c_in"], 0);
    assert_eq!(m["tolerances"]["c_out"], 8);
    assert!(m["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn recon_from_data_files_matches_synthesized() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.5, 0.0]));
    let f = run(&dir, "fwd", "forward", &cfg, &[]);
    assert_eq!(f.code, 0);
    cfg["recon"] = recon_section([0.5, 0.0, 0.0]);
    let synth = run(&dir, "synth", "recon", &cfg, &[]);
    cfg["data"] = json!(["fwd/far_field_N16.csv", "fwd/far_field_N32.csv"]);
    let loaded = run(&dir, "loaded", "recon", &cfg, &[]);
    assert_eq!((synth.code, loaded.code), (0, 0));
    assert_eq!(
        std::fs::read(synth.out.join("indicator.csv")).unwrap(),
        std::fs::read(loaded.out.join("indicator.csv")).unwrap()
    );
}

#[test]
fn recon_warns_when_alpha_exceeds_scene_contrast() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["recon"] = recon_section([2.0, 0.0, 0.0]);
    let r = run(&dir, "warn", "recon", &cfg, &["--n-ladder", "16"]);
    assert_eq!(r.code, 0);
    assert_eq!(manifest(&r.out)["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["recon"] = recon_section([0.0, 0.0, 0.0]);
    assert_eq!(run(&dir, "alpha0", "recon", &cfg, &[]).code, 2);

    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["unexpected"] = json!(1);
    assert_eq!(run(&dir, "unknown", "forward", &cfg, &[]).code, 2);

    let mut cfg = base(disk_scene([0.5, 0.0]));
    cfg["schema_version"] = json!(2);
    assert_eq!(run(&dir, "schema", "forward", &cfg, &[]).code, 2);

    let cfg = base(disk_scene([0.5, 0.0]));
    assert_eq!(run(&dir, "odd", "forward", &cfg, &["--n-ladder", "15"]).code, 2);
    assert_eq!(run(&dir, "norecon", "recon", &cfg, &[]).code, 2);
}

#[test]
fn validate_background_scene_is_trivial() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "bg", "validate", &base(json!({ "background": background() })), &[]);
    assert_eq!(r.code, 0);
    for row in csv_rows(&r.out.join("validation.csv")) {
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0, "{row:?}");
        assert_eq!(row[4], "true");
    }
}

#[test]
fn validate_disk_scene_passes() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.0, 0.0]));
    cfg["scene"]["inclusions"][0]["psi_rho"] = json!(0.5);
    cfg["validate"] = json!({ "volume_cells": [100, 100] });
    let r = run(&dir, "disk", "validate", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let rows = csv_rows(&r.out.join("validation.csv"));
    let checks: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(checks, ["unitarity", "unitarity", "energy", "main_identity", "spectra"]);
    assert!(rows.iter().all(|r| r[4] == "true"));
    let m = manifest(&r.out);
    assert_eq!(m["tolerances"]["checks"]["energy"], 1e-6);
    assert_eq!(m["tolerances"]["sigma_injection"], 1.0);
}

#[test]
fn validate_detects_injected_normalization_fault() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base(disk_scene([0.0, 0.0]));
    cfg["validate"] = json!({ "sigma_injection": 1.1, "volume_cells": [50, 50] });
    let r = run(&dir, "sigma", "validate", &cfg, &[]);
    assert_eq!(r.code, 4);
    for row in csv_rows(&r.out.join("validation.csv")) {
        assert_eq!(row[4] == "true", row[0] != "unitarity", "{row:?}");
    }
    assert_eq!(manifest(&r.out)["status"], "validation_failed");
}

#[test]
fn validate_rejects_off_centre_scene() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&dir, "off", "validate", &base(disk_scene([0.5, 0.0])), &[]).code, 2);
}

fn localize_cfg(b: [f64; 2], d: [f64; 2]) -> Value {
    let mut cfg = base(json!({ "background": background() }));
    cfg["localize"] = json!({
        "b": { "disk": { "center": b, "radius": 0.5 } },
        "d": { "disk": { "center": d, "radius": 0.5 } },
        "h": 0.05
    });
    cfg
}

#[test]
fn localize_disjoint_disks_give_increasing_curve() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "loc", "localize", &localize_cfg([-1.5, 0.0], [1.5, 0.0]), &[]);
    assert_eq!(r.code, 0);
    let rows: Vec<Vec<f64>> = csv_rows(&r.out.join("curve.csv"))
        .iter()
        .map(|r| r.iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1][1] > w[0][1] && w[1][3] < w[0][3]);
    }
    assert!(rows[2][1] > 1e2);
}

#[test]
fn localize_identical_regions_are_flat() {
    let dir = TempDir::new().unwrap();
    let r = run(&dir, "same", "localize", &localize_cfg([1.0, 0.0], [1.0, 0.0]), &[]);
    assert_eq!(r.code, 0);
    for row in csv_rows(&r.out.join("curve.csv")) {
        assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn localize_missing_region_exits_two() {
    let dir = TempDir::new().unwrap();
    let mut cfg = localize_cfg([-1.5, 0.0], [1.5, 0.0]);
    cfg["localize"].as_object_mut().unwrap().remove("d");
    assert_eq!(run(&dir, "missing", "localize", &cfg, &[]).code, 2);
}
