//! End-to-end runs of the `locp` binary: exit codes, reproducibility, file
//! output and tolerance plumbing.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn locp(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_locp"));
    cmd.args(args);
    for var in ["LOCP_TOL_EQ", "LOCP_TOL_PSD", "LOCP_TOL_RANK", "LOCP_SEED"] {
        cmd.env_remove(var);
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    locp(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = run(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// A JSON matrix of `[re, im]` pairs as rows of complex entries.
fn matrix(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())).collect())
        .collect()
}

fn frob_diff(a: &[Vec<(f64, f64)>], b: &[Vec<(f64, f64)>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn bundled_schur_fixture_validates() {
    let out = run(&["validate", fixture("schur_2x2.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn transpose_fixture_fails_validation() {
    let out = run(&["validate", fixture("transpose_2x2.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"flags\": [1, 2").unwrap();
    assert_eq!(code(&run(&["validate", bad.to_str().unwrap()])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["validate", missing.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["validate"])), 2);
    assert_eq!(code(&run(&["gen", "no-such-kind"])), 2);
}

#[test]
fn generation_is_reproducible() {
    for kind in ["schur", "random-cp", "dominated-pair", "module-pair"] {
        let a = run(&["gen", kind, "--seed", "11"]);
        let b = run(&["gen", kind, "--seed", "11"]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{kind}");
        let c = run(&["gen", kind, "--seed", "12"]);
        if kind != "schur" {
            assert_ne!(a.stdout, c.stdout, "{kind}");
        }
    }
}

#[test]
fn generated_fixtures_validate() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("schur3.json", vec!["schur", "--n", "3"]),
        ("cp.json", vec!["random-cp", "--seed", "5"]),
        ("pair.json", vec!["dominated-pair", "--seed", "5"]),
        ("module.json", vec!["module-pair", "--seed", "5"]),
    ] {
        let path = gen_to(dir.path(), name, &args);
        let out = run(&["validate", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn dilate_reports_a_certificate() {
    let out = run(&["dilate", fixture("schur_2x2.json").to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json_stdout(&out);
    assert!(v.to_string().contains("reconstruction"));
}

#[test]
fn rn_recovers_the_recorded_derivative() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_to(dir.path(), "pair.json", &["dominated-pair", "--seed", "7"]);
    let instance: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let out = run(&["rn", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json_stdout(&out);
    let t = matrix(&v["certificate"]["t_matrix"]);
    let t0 = matrix(&instance["ground_truth"]["T"]);
    assert!(frob_diff(&t, &t0) <= 1e-7);

    // The dominated map does not dominate back.
    let out = run(&["rn", path.to_str().unwrap(), "--phi", "psi", "--psi", "phi"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn half_map_has_derivative_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_to(dir.path(), "cp.json", &["random-cp", "--seed", "3"]);
    let mut instance: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let mut psi = instance["maps"]["phi"].clone();
    for image in psi["images"].as_array_mut().unwrap() {
        for z in image.as_array_mut().unwrap().iter_mut().flat_map(|row| row.as_array_mut().unwrap()) {
            for part in z.as_array_mut().unwrap() {
                *part = Value::from(part.as_f64().unwrap() * 0.5);
            }
        }
    }
    instance["maps"]["psi"] = psi;
    std::fs::write(&path, instance.to_string()).unwrap();

    let out = run(&["rn", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let t = matrix(&json_stdout(&out)["certificate"]["t_matrix"]);
    let half: Vec<Vec<(f64, f64)>> =
        (0..t.len()).map(|i| (0..t.len()).map(|j| (if i == j { 0.5 } else { 0.0 }, 0.0)).collect()).collect();
    assert!(frob_diff(&t, &half) <= 1e-7);
}

/// Copy every named object of `other` into `base` under a `b_` prefix.
fn merge_prefixed(base: &mut Value, other: &Value) {
    let rename = |v: &Value| match v {
        Value::String(s) => Value::String(format!("b_{s}")),
        inline => inline.clone(),
    };
    for (section, refs) in [
        ("flags", &[][..]),
        ("algebras", &["domain"][..]),
        ("maps", &["source", "target"][..]),
        ("modules", &["algebra", "carrier"][..]),
        ("inducing_maps", &["module", "phi", "target"][..]),
    ] {
        for (name, obj) in other[section].as_object().unwrap() {
            let mut obj = obj.clone();
            for key in refs {
                obj[*key] = rename(&obj[*key]);
            }
            base[section][format!("b_{name}")] = obj;
        }
    }
}

#[test]
fn module_rn_checks_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_to(dir.path(), "module.json", &["module-pair", "--seed", "4"]);
    let out = run(&["module-rn", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let other_path = gen_to(dir.path(), "other.json", &["module-pair", "--seed", "9"]);
    let mut base: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let other: Value = serde_json::from_str(&std::fs::read_to_string(&other_path).unwrap()).unwrap();
    merge_prefixed(&mut base, &other);
    std::fs::write(&path, base.to_string()).unwrap();
    let out = run(&["module-rn", path.to_str().unwrap(), "--sub", "b_Psi"]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tolerances_come_from_flags_then_environment() {
    let path = fixture("transpose_2x2.json");
    let path = path.to_str().unwrap();
    let out = locp(&["validate", path]).env("LOCP_TOL_PSD", "10").output().unwrap();
    assert_eq!(code(&out), 0);
    let out = locp(&["validate", path, "--tol-psd", "1e-10"]).env("LOCP_TOL_PSD", "10").output().unwrap();
    assert_eq!(code(&out), 1);
    let out = locp(&["validate", path]).env("LOCP_TOL_PSD", "not-a-number").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn seed_can_come_from_the_environment() {
    let a = run(&["gen", "random-cp", "--seed", "21"]);
    let b = locp(&["gen", "random-cp"]).env("LOCP_SEED", "21").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_files_are_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("result.json");
    std::fs::write(&target, "stale").unwrap();
    let out = run(&["validate", fixture("schur_2x2.json").to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!(written.is_object());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");

    let nowhere = dir.path().join("no-such-dir").join("result.json");
    let out = run(&["validate", fixture("schur_2x2.json").to_str().unwrap(), "--out", nowhere.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!nowhere.exists());
}
