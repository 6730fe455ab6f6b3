use std::path::{Path, PathBuf};
use std::process::Command;

fn pea() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pea"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn predict_prints_fidelity_products() {
    let dir = tempfile::tempdir().unwrap();
    let out = pea().args(["predict", "--config"]).arg(data("predict.toml")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("K      = 0.223130160148"), "{text}");
    assert!(text.contains("K~     = 0.606530659713"));
    assert!(text.contains("kappa  = 2.718281828459"));
    assert!(text.contains("ZY       INJECT"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("predict.json")).unwrap()).unwrap();
    assert!((json["at_hardware"].as_f64().unwrap() - (-1.7f64).exp()).abs() < 1e-12);
}

#[test]
fn design_reports_optimal_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = pea().args(["design", "--config"]).arg(data("design.toml")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3882/6118"), "{text}");
    assert!(text.contains("2.2784645428"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [&["--set", "budgets=[]"][..], &["--set", "gains=[1.0]"], &["--set", "budgets=[10, 5]"]] {
        let status = pea()
            .args(["scaling", "--config"])
            .arg(data("scaling.toml"))
            .arg("--out")
            .arg(dir.path())
            .args(extra)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(2), "{extra:?}");
    }
    let status = pea().args(["scaling", "--config", "/nonexistent.toml"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let bad_model = dir.path().join("bad.toml");
    std::fs::write(
        &bad_model,
        std::fs::read_to_string(data("scaling.toml")).unwrap().replace("hardware.model", "missing.model"),
    )
    .unwrap();
    let status = pea().args(["scaling", "--config"]).arg(&bad_model).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn non_clifford_predict_exits_3() {
    let out = pea().args(["predict", "--config"]).arg(data("tfim.toml")).args(["--out", "/tmp/pea-unused"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Clifford"));
}

#[test]
fn tfim_csv_schema_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let status = pea()
            .args(["tfim", "--config"])
            .arg(data("tfim.toml"))
            .args(["--seed", seed, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(out.join("tfim.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut lines = a.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["artifact_version", "config_hash", "seed"]);
    assert!(header.contains(&"stderr_3"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("5")));
    let reference = std::fs::read_to_string(dir.path().join("a/reference.csv")).unwrap();
    assert_eq!(reference.lines().count(), 6);
}
