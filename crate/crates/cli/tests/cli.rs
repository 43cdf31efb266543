//! End-to-end runs of the `mixlab` binary on small configs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mixlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixlab")).args(args).output().expect("spawn mixlab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_DISK: &str = r#"
name = "small_disk"
backend = "both"
seed = 7
eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4]
family = { kind = "shear_pullback", rate = 1.0, cutoff = { inner = 1.0, outer = 1.6 } }
region = { kind = "disk", center = [0.0, 0.0], radius = 0.6 }

[grid]
half_width = 2.4
nx = 64

[mc]
paths = 4000
steps = 32
"#;

fn averaging_config(min_slope: f64, dt: f64) -> String {
    format!(
        r#"
name = "tiny_averaging"
eps = [1e-2, 5e-3, 2.5e-3]
family = {{ kind = "shear_pullback", rate = 1.0, cutoff = {{ inner = 0.0, outer = 3.0 }} }}
region = {{ kind = "disk", center = [0.6, 0.0], radius = 0.5 }}

[grid]
half_width = 3.0
nx = 48

[averaging]
bump_center = [0.6, 0.0]
bump_width = 0.5
dt = {dt}
min_slope = {min_slope}
"#
    )
}

/// Every file in `dir` except the metadata, as (name, bytes).
fn reports(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "meta.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn area_of_the_unit_disk_is_its_perimeter() {
    let tmp = TempDir::new().unwrap();
    let out = mixlab(&["area", "--config", "disk_euclidean", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6.2831853"));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("area.json")).unwrap()).unwrap();
    let area = json["mixing_area"].as_f64().expect("mixing_area field");
    assert!((area - std::f64::consts::TAU).abs() < 1e-9);
}

#[test]
fn every_preset_is_accepted_by_area() {
    let tmp = TempDir::new().unwrap();
    for preset in ["disk_euclidean", "disk_eps1e-3", "shear_disk", "gyre_disk", "coherence_disk", "averaging_shear"] {
        let out = mixlab(&["area", "--config", preset, "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{preset}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn configuration_problems_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let unknown_key = write_config(tmp.path(), "a.toml", &SMALL_DISK.replace("seed = 7", "seed = 7\ncolour = \"red\""));
    let no_seed = write_config(tmp.path(), "b.toml", &SMALL_DISK.replace("seed = 7", ""));
    let broken = write_config(tmp.path(), "c.toml", "name = [");
    let bad_radius = write_config(tmp.path(), "d.toml", &SMALL_DISK.replace("radius = 0.6", "radius = -1.0"));
    let cases: Vec<Vec<&str>> = vec![
        vec!["area", "--config", "no_such_preset", "--out", dir],
        vec!["area", "--config", &unknown_key, "--out", dir],
        vec!["heat-content", "--config", &no_seed, "--out", dir],
        vec!["area", "--config", &broken, "--out", dir],
        vec!["area", "--config", &bad_radius, "--out", dir],
        vec!["area", "--out", dir],
        vec!["area", "--config", "disk_euclidean", "--threads", "0", "--out", dir],
        vec!["area", "--no-such-flag"],
        vec!["verify", "--scale", "huge", "--out", dir],
        vec!["verify", "--suite", "nonsense", "--out", dir],
    ];
    for args in cases {
        let out = mixlab(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failed_assertion_exits_with_one_and_numerical_failure_with_three() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let strict = write_config(tmp.path(), "strict.toml", &averaging_config(10.0, 0.01));
    let out = mixlab(&["averaging-order", "--config", &strict, "--out", dir]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let unstable = write_config(tmp.path(), "unstable.toml", &averaging_config(1.0, 0.5));
    let out = mixlab(&["averaging-order", "--config", &unstable, "--out", dir]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reruns_reproduce_reports_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL_DISK);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        for cmd in ["heat-content", "asymptotics", "coherence"] {
            let out = mixlab(&[cmd, "--config", &config, "--out", dir.to_str().unwrap()]);
            assert!(code(&out) <= 1, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let (ra, rb) = (reports(&a), reports(&b));
    let names: Vec<&str> = ra.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["heat_content.csv", "heat_content.json", "asymptotics_pde.csv", "asymptotics_mc.csv", "coherence.json"] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
    assert_eq!(ra, rb);
}

#[test]
fn metadata_is_kept_apart_from_results() {
    let tmp = TempDir::new().unwrap();
    let out = mixlab(&["area", "--config", "disk_euclidean", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "area");
    assert!(meta["started"].is_string());
    assert!(meta["elapsed_seconds"].is_number());
    let area = fs::read_to_string(tmp.path().join("area.json")).unwrap();
    assert!(!area.contains("started") && !area.contains("elapsed"));
}

#[test]
fn fit_table_has_the_documented_columns() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL_DISK);
    let out = mixlab(&["asymptotics", "--config", &config, "--backend", "pde", "--out", tmp.path().to_str().unwrap()]);
    assert!(code(&out) <= 1, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("asymptotics_pde.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,T,sigma_t,prediction,gap"));
    let eps: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(eps, vec![1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4]);
}

#[test]
fn coherence_fractions_lie_in_the_unit_interval() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "small.toml", SMALL_DISK);
    let out = mixlab(&["coherence", "--config", &config, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("coherence.json")).unwrap()).unwrap();
    let reports = json.as_array().expect("one report per diffusivity and route");
    assert_eq!(reports.len(), 10);
    for r in reports {
        for key in ["retained_inside", "retained_outside"] {
            let f = r[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {r}"));
            assert!((0.0..=1.0 + 1e-9).contains(&f), "{key} = {f}");
        }
        let ratio = r["ratio"].as_f64().unwrap();
        assert!(ratio > 0.0 && ratio < 2.0);
    }
}
