use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tamef(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tamef")).current_dir(dir).args(args).output().unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certify_gradings_writes_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let out = tamef(dir.path(), &["certify-gradings", "--probes", "200", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    let fwd = json(o.join("forward.json"));
    assert_eq!(fwd["generator"], "chacha8");
    assert_eq!(fwd["seed"], 0);
    assert_eq!(fwd["outcome"], "certified");
    assert_eq!(fwd["r"], 1);
    let csv = std::fs::read_to_string(o.join("forward.csv")).unwrap();
    assert!(csv.starts_with("# generator=chacha8 seed=0\n"));
    assert!(o.join("run_certify-gradings.json").exists());
    assert!(!o.join("forward_witness.json").exists());
}

#[test]
fn non_equivalent_gradings_exit_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = tamef(dir.path(), &["certify-gradings", "--b", "decreasing", "--probes", "200", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let witnesses: Vec<_> = std::fs::read_dir(dir.path().join("o"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with("_witness.json"))
        .collect();
    assert!(!witnesses.is_empty());
}

#[test]
fn certify_map_shift_up() {
    let dir = tempfile::tempdir().unwrap();
    let out = tamef(dir.path(), &["certify-map", "--map", "shift_up", "--nmax", "4", "--probes", "100", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = json(dir.path().join("o/certificate.json"));
    let c = &cert;
    assert_eq!((c["r"].as_u64(), c["b"].as_u64()), (Some(0), Some(0)));
    for lc in c["constants"].as_array().unwrap() {
        let n = lc["n"].as_f64().unwrap();
        let v = lc["c"].as_f64().unwrap();
        assert!((v - n.exp()).abs() <= 1e-9 * n.exp(), "C({n}) = {v}");
    }
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tamef(dir.path(), &["certify-map", "--map", "bogus", "--out", "o"]).status.code(), Some(64));
    assert_eq!(tamef(dir.path(), &["atlas", "--bogus"]).status.code(), Some(64));
    assert_eq!(tamef(dir.path(), &["atlas", "--constraint", "sphere:9", "--out", "o"]).status.code(), Some(64));
    assert_eq!(tamef(dir.path(), &["certify-gradings", "--k", "64", "--nmax", "8", "--out", "o"]).status.code(), Some(64));
    assert_eq!(tamef(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn solve_sphere_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = tamef(dir.path(), &["solve", "--constraint", "sphere:0", "--k", "4", "--x", "0.6", "--y0", "0.5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(dir.path().join("o/solution.json"));
    assert_eq!(s["status"], "converged");
    assert!((s["y"][0].as_f64().unwrap() - 0.8).abs() < 1e-12);
    let history = std::fs::read_to_string(dir.path().join("o/history.csv")).unwrap();
    assert_eq!(history.lines().nth(1), Some("iter,residual"));
}

#[test]
fn solve_singular_start_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("q.json");
    std::fs::write(&poly, r#"{"domain_dim": 1, "outputs": [[{"coef": 1.0, "powers": [[0, 2]]}, {"coef": -1.0}]]}"#)
        .unwrap();
    let c = format!("custom:{}", poly.display());
    let out = tamef(dir.path(), &["solve", "--constraint", &c, "--y0", "0", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(dir.path().join("o/solution.json"))["status"], "singular_block");
}

#[test]
fn atlas_sphere_and_intersection() {
    let dir = tempfile::tempdir().unwrap();
    let out = tamef(dir.path(), &["atlas", "--k", "16", "--nmax", "4", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let atlas = json(dir.path().join("a/atlas.json"));
    assert_eq!(atlas["charts"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("a/transitions.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("0,1,passed,"));

    let out = tamef(dir.path(), &["atlas", "--constraint", "spheres:0,1", "--k", "16", "--nmax", "4", "--out", "b"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("failing the Kantorovich check"));
    let evidence = json(dir.path().join("b/evidence.json"));
    assert!(!evidence["evidence"]["points"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("b/atlas.json").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"seed": 5, "probes": 50, "map": "derivative", "nmax": 4}"#).unwrap();
    let out = tamef(dir.path(), &["--config", "c.json", "certify-map", "--seed", "6", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let run = json(dir.path().join("o/run_certify-map.json"));
    assert_eq!((run["seed"].as_u64(), run["probes"].as_u64()), (Some(6), Some(50)));
    assert_eq!(run["map"], "derivative");
    assert_eq!(json(dir.path().join("o/certificate.json"))["seed"], 6);
    std::fs::write(dir.path().join("bad.json"), r#"{"sede": 5}"#).unwrap();
    assert_eq!(tamef(dir.path(), &["--config", "bad.json", "atlas"]).status.code(), Some(64));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, out: &str| {
        let st = Command::new(env!("CARGO_BIN_EXE_tamef"))
            .current_dir(dir.path())
            .env("TAMEF_THREADS", threads)
            .args(["certify-map", "--map", "coeff_square", "--probes", "150", "--out", out])
            .output()
            .unwrap();
        assert_eq!(st.status.code(), Some(0));
        std::fs::read(dir.path().join(out).join("certificate.json")).unwrap()
    };
    assert_eq!(run("1", "one"), run("4", "four"));
}
