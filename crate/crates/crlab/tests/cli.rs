use std::path::Path;
use std::process::Command;

fn crlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crlab")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn mesh_reports_area_and_writes_mesh() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let (code, stdout, _) = crlab(&["mesh", "--genus", "2", "--refine", "3", "--out", out, "--plots"]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d.path(), "mesh");
    let area = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "area").unwrap();
    assert!(area["pass"].as_bool().unwrap());
    assert!((area["expected"].as_f64().unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(d.path().join("surface_mesh.json").exists());
    assert!(d.path().join("mesh_log_density.svg").exists());
    assert!(d.path().join("mesh.timing.json").exists());
}

#[test]
fn genus_one_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, err) = crlab(&["mesh", "--genus", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("genus"));
}

#[test]
fn model_needs_divisibility() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, err) = crlab(&["verify-model", "--genus", "3", "--m", "1", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("does not divide"), "{err}");
}

#[test]
fn verify_model_passes_and_perturbation_fails() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let (code, stdout, _) = crlab(&["verify-model", "--genus", "2", "--m", "1", "--out", out]);
    assert_eq!(code, 0, "{stdout}");
    let (code, stdout, _) = crlab(&["verify-model", "--genus", "2", "--m", "1", "--perturb", "0.01", "--out", out]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL curvature_identity "), "{stdout}");
}

#[test]
fn coarse_mesh_is_inconclusive() {
    let d = tempfile::tempdir().unwrap();
    let (code, _, _) = crlab(&["kernel-dim", "--genus", "2", "--refine", "0", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    let csv = std::fs::read_to_string(d.path().join("spectrum_p_star.csv")).unwrap();
    assert!(csv.starts_with("index,singular_value\n"));
    let r = report(d.path(), "kernel-dim");
    let s = r["spectra"].as_array().unwrap().iter().find(|s| s["name"] == "p_star").unwrap();
    assert!(s["certificate"].is_null());
    assert!(s["inconclusive_spectrum"].as_array().unwrap().len() >= 10);
}

#[test]
fn identical_runs_give_identical_reports() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let args = ["yamabe", "--genus", "2", "--refine", "2", "--seed", "9", "--out", out];
    assert_eq!(crlab(&args).0, 0);
    let first = std::fs::read(d.path().join("yamabe.json")).unwrap();
    assert_eq!(crlab(&args).0, 0);
    assert_eq!(first, std::fs::read(d.path().join("yamabe.json")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "genus = 3\nm = 2\nrefinement = 1\nseed = 4\n\n[tolerances]\nround_trip = 1e-9\n").unwrap();
    let out = d.path().join("o");
    let (code, stdout, err) = crlab(&["sigma", "--config", cfg.to_str().unwrap(), "--genus", "2", "--cases", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{err}");
    let r = report(&out, "sigma");
    assert_eq!(r["config"]["genus"], 2);
    assert_eq!(r["config"]["m"], 2);
    assert_eq!(r["config"]["refinement"], 1);
    let rt = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "round_trip").unwrap();
    assert_eq!(rt["tolerance"].as_f64().unwrap(), 1e-9);
}

#[test]
fn unknown_config_key_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "genus = 2\nrefinment = 3\n").unwrap();
    let (code, _, _) = crlab(&["mesh", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn split_report_records() {
    let d = tempfile::tempdir().unwrap();
    let (code, stdout, _) = crlab(&["split", "--genus", "2", "--refine", "2", "--degree", "2", "--cases", "3", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d.path(), "split");
    for name in ["kernel_residual", "orthogonality", "pure_gauge"] {
        let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
        assert!(c["value"].as_f64().unwrap() < 1e-8);
    }
}
