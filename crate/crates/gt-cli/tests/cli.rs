//! End-to-end tests of the `gt` binary: output schemas, byte stability,
//! config/flag precedence, and error-code mapping.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gt")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gt-cli-test-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("failed to spawn gt")
}

#[test]
fn gbz_output_schema_and_magnitude() {
    let dir = workdir("gbz");
    let out = dir.join("run");
    let o = run(&["gbz", "--t3", "2", "--t4", "0.5", "--cells", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("gbz.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("beta_re,beta_im,energy_re,energy_im,source_mode"));
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5, "row: {line}");
        let re: f64 = f[0].parse().unwrap();
        let im: f64 = f[1].parse().unwrap();
        assert!(re.hypot(im) < 1.0, "left NHSE point has |beta| >= 1: {line}");
        n += 1;
    }
    assert!(n > 100, "only {n} GBZ rows");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["command"], "gbz");
    assert!(manifest["version"].as_str().unwrap().contains('.'));
    assert!(manifest["timestamp_unix"].as_u64().unwrap() > 0);
}

#[test]
fn identical_configs_give_byte_identical_csv() {
    let dir = workdir("stable");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&["gbz", "--t3", "4", "--t4", "2", "--cells", "20", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = fs::read(a.join("gbz.csv")).unwrap();
    let fb = fs::read(b.join("gbz.csv")).unwrap();
    assert_eq!(fa, fb, "gbz.csv differs between identical runs");
}

#[test]
fn flag_overrides_config_file_and_manifest_records_both() {
    let dir = workdir("precedence");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "t3 = 5\nt4 = 0.5\ncells = 8\n").unwrap();
    let out = dir.join("run");
    let o = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--t3",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_file_values"]["t3"], "5");
    assert_eq!(manifest["flag_values"]["t3"], "2");
    assert_eq!(manifest["resolved"]["t3"], 2.0);
    assert_eq!(manifest["resolved"]["t4"], 0.5);
    assert_eq!(manifest["resolved"]["cells"], 8);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = workdir("badkey");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "t3 = 2\nt4 = 0.5\nbogus = 1\n").unwrap();
    let o = run(&["gbz", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus"), "stderr does not name the key: {err}");
    assert!(err.contains("invalid-argument"), "no machine-readable record: {err}");
}

#[test]
fn malformed_value_names_the_offending_key() {
    let dir = workdir("badval");
    let o = run(&["bands", "--t3", "abc", "--t4", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("t3"), "stderr does not name t3: {err}");
}

#[test]
fn missing_required_key_is_a_usage_error() {
    let dir = workdir("missing");
    let o = run(&["gbz", "--t4", "2", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t3"));
}

#[test]
fn evolve_profile_is_normalized_per_instant() {
    let dir = workdir("evolve");
    let out = dir.join("run");
    let o = run(&[
        "evolve", "--t3", "4", "--t4", "2", "--cells", "8", "--tmax", "2", "--times", "lin:4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    let mut totals: std::collections::BTreeMap<String, f64> = Default::default();
    for line in csv.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        *totals.entry(f[0].to_string()).or_insert(0.0) += f[2].parse::<f64>().unwrap();
    }
    assert_eq!(totals.len(), 4);
    for (t, total) in totals {
        assert!((total - 1.0).abs() < 1e-12, "time {t}: profile total {total}");
    }
    assert!(out.join("weights_obc.csv").exists());
}

#[test]
fn log_time_grid_is_accepted() {
    let dir = workdir("logtimes");
    let out = dir.join("run");
    let o = run(&[
        "evolve", "--t3", "4", "--t4", "2", "--cells", "4", "--tmax", "10", "--times", "log:6",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    let times: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap())
        .collect();
    let t0 = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t1 = times.iter().cloned().fold(0.0f64, f64::max);
    assert!((t0 - 0.01).abs() < 1e-12, "log grid starts at {t0}");
    assert!((t1 - 10.0).abs() < 1e-12, "log grid ends at {t1}");
}

#[test]
fn json_format_mirrors_csv_schema() {
    let dir = workdir("json");
    let out = dir.join("run");
    let o = run(&[
        "spectrum", "--t3", "2", "--t4", "9", "--cells", "6", "--format", "json", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("spectrum.csv").exists());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(doc["schema"], 1);
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 2 * 24); // obc + pbc rows at 6 cells
    for r in records {
        assert!(r["energy_re"].is_f64() || r["energy_re"].is_number());
        assert!(r["energy_im"].is_number());
        assert!(r["boundary"].is_string());
    }
}

#[test]
fn phase_diagram_grid_schema() {
    let dir = workdir("phasegrid");
    let out = dir.join("run");
    let o = run(&[
        "phase-diagram", "--kind", "eigenmode", "--t3", "0.5:6", "--t4", "0.55:6.05", "--res",
        "16", "--cells", "40", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("phase_grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("t3,t4,class,direction,freq"));
    assert_eq!(lines.count(), 256);
    assert!(out.join("boundaries.csv").exists());
}

#[test]
fn green_out_of_range_site_is_invalid_argument() {
    let dir = workdir("greenerr");
    let o = run(&[
        "green", "--t3", "4", "--t4", "2", "--cells", "10", "--omega-re", "1", "--omega-im", "2",
        "--row", "400", "--col", "40", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid-argument"));
}

#[test]
fn flagged_gbz_curve_is_a_numerical_failure() {
    let dir = workdir("greennum");
    // At (2, 0.5) with only 20 cells the GBZ construction flags itself and
    // the contour integrator refuses to run on it.
    let o = run(&[
        "green", "--t3", "2", "--t4", "0.5", "--cells", "20", "--omega-re", "0", "--row", "40",
        "--col", "40", "--method", "contour", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical-failure"));
}
