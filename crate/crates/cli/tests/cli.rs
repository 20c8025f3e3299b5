use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DISK: &str = r#"{
  "gauge": {"family": "euclidean"},
  "curve": {"family": "circle", "R": 1.0},
  "source": {"family": "constant", "c": 1.0},
  "grid": {"nx": 32, "ny": 32, "bbox": "auto"},
  "seed": 11
}"#;

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn mkt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkt")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mkt(&args)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_writes_field_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disk.json", DISK);
    let out = dir.path().join("run");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("field.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,d,v,singular"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let [x, y, d, v]: [f64; 4] = std::array::from_fn(|i| f[i].parse().unwrap());
        // 17 significant digits
        assert_eq!(f[0].split('e').next().unwrap().trim_start_matches('-').len(), 18);
        let r = x.hypot(y);
        assert!((d - (1.0 - r)).abs() < 1e-12);
        if f[4] == "0" {
            assert!((v - r / 2.0).abs() < 1e-6);
        }
        rows += 1;
    }
    let header = read_json(&out.join("field.json"));
    assert_eq!(header["grid"]["inside_cells"].as_u64().unwrap() as usize, rows);
    assert_eq!(header["solver"]["table_size"], 4096);
    let manifest = read_json(&out.join("manifest.json"));
    for key in ["cluster", "cut", "quadrature", "foot_track", "table_validation", "boundary_band"] {
        assert!(manifest["tolerances"][key].is_number(), "manifest lacks {key}");
    }
    assert!(out.join("run_timings.json").exists());
    assert!(out.join("field_v.svg").exists());
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disk.json", DISK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run("solve", &cfg, out, &["--nx", "24", "--ny", "20"]).status.code(), Some(0));
        assert_eq!(run("cutlocus", &cfg, out, &[]).status.code(), Some(0));
        assert_eq!(run("verify", &cfg, &out.join("v"), &[]).status.code(), Some(0));
    }
    for f in ["field.csv", "field.json", "cutlocus.csv", "field_v.svg", "v/report.json", "v/manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let header = read_json(&a.join("field.json"));
    assert_eq!((header["grid"]["nx"].as_u64(), header["grid"]["ny"].as_u64()), (Some(24), Some(20)));
}

#[test]
fn verify_passes_exact_and_fails_perturbed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disk.json", DISK);
    let ok = run("verify", &cfg, &dir.path().join("ok"), &["--no-svg"]);
    assert_eq!(ok.status.code(), Some(0));
    let report = read_json(&dir.path().join("ok/report.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["entries"].as_array().unwrap().len(), 8);

    let bad = run("verify", &cfg, &dir.path().join("bad"), &["--perturb-v", "1.1"]);
    assert_eq!(bad.status.code(), Some(1));
    let report = read_json(&dir.path().join("bad/report.json"));
    assert_eq!(report["pass"], false);
    let weak = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == "weak_form")
        .unwrap();
    assert_eq!(weak["pass"], false);
    assert!((weak["max_error"].as_f64().unwrap() - 0.1).abs() < 0.01);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let malformed = write_config(&dir, "bad.json", "{\n  \"gauge\": {\"family\": \"euclidean\"},\n  \"curve\": ");
    let o = run("solve", &malformed, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let negative = write_config(&dir, "neg.json", &DISK.replace("\"R\": 1.0", "\"R\": -1.0"));
    let o = run("distance", &negative, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("curve"));

    let cfg = write_config(&dir, "disk.json", DISK);
    assert_eq!(run("solve", &cfg, &out, &["--nx", "8"]).status.code(), Some(2));
    assert_eq!(run("verify", &cfg, &out, &["--perturb-v", "-1"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run("solve", &missing, &out, &[]).status.code(), Some(2));
}

#[test]
fn distance_cutlocus_and_constants() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "ellipse.json",
        r#"{"gauge": {"family": "euclidean"}, "curve": {"family": "ellipse", "a": 2.0, "b": 1.0},
            "grid": {"nx": 40, "ny": 21}, "n_theta": 64}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(run("distance", &cfg, &out, &["--no-svg"]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("distance.csv")).unwrap();
    assert!(csv.starts_with("x,y,d,singular\n"));
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",1")), "no singular cell on the major axis");
    assert!(!out.join("distance.svg").exists());

    assert_eq!(run("cutlocus", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("cutlocus.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 64);
    assert!((rows[0][3] - 0.5).abs() < 1e-6 && (rows[16][3] - 1.0).abs() < 1e-6);
    assert!(rows.iter().all(|r| r[2].abs() < 1e-6 && r[1].abs() <= 1.5 + 1e-6));
    assert!(out.join("cutlocus.svg").exists());

    assert_eq!(run("constants", &cfg, &out, &[]).status.code(), Some(0));
    let c = read_json(&out.join("constants.json"));
    assert!((c["constants"]["c6"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn seed_flag_changes_only_random_batteries() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "disk.json", DISK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("verify", &cfg, &a, &["--seed", "1"]).status.code(), Some(0));
    assert_eq!(run("verify", &cfg, &b, &["--seed", "2"]).status.code(), Some(0));
    let (ra, rb) = (read_json(&a.join("report.json")), read_json(&b.join("report.json")));
    assert_ne!(ra["entries"][1], rb["entries"][1]);
    assert_eq!(read_json(&a.join("manifest.json"))["config"]["seed"], 1);
}
