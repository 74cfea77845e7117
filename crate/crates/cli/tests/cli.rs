use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mtails(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtails"))
        .args(args)
        .env_remove("MTAILS_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bernstein_bound_example() {
    let v = json_of(&mtails(&[
        "bound", "--kind", "bernstein", "--n", "100", "--b", "3", "--sigma2", "3", "--k", "4", "--t", "8",
    ]));
    assert!((v["deviation"].as_f64().unwrap() - 0.77282).abs() < 1e-5);
    assert!((v["probability"].as_f64().unwrap() - 0.0107673).abs() < 1e-7);
    assert_eq!(v["source"], "bernstein");
    assert_eq!(v["inputs"]["n"], 100);
    assert_eq!(v["inputs"]["sigma2"].as_f64(), Some(3.0));
}

#[test]
fn bound_at_confidence_and_generic() {
    let v = json_of(&mtails(&[
        "bound", "--kind", "subgaussian", "--n", "10", "--sigma2", "1", "--k", "2", "--delta", "0.05",
    ]));
    let t = v["t"].as_f64().unwrap();
    assert!((2.0 * (t / (t.exp() - t - 1.0)) - 0.05).abs() < 1e-10);

    let v = json_of(&mtails(&["bound", "--kind", "generic", "--trace", "2", "--t", "3"]));
    let expected = 2.0 / (3f64.exp() - 4.0);
    assert!((v["probability"].as_f64().unwrap() - expected).abs() < 1e-15);
}

#[test]
fn sample_size_example() {
    let v = json_of(&mtails(&["rmm-size", "--ra", "1", "--rb", "1", "--eps", "0.5", "--delta", "0.1"]));
    assert_eq!(v["n"], 155);
}

#[test]
fn exit_codes() {
    let out = mtails(&["bound", "--kind", "bernstein", "--n", "100", "--b", "3", "--sigma2", "3", "--k", "4", "--t", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain error"));

    assert_eq!(mtails(&["bound", "--kind", "bernstein", "--frobnicate", "1", "--t", "1"]).status.code(), Some(1));
    assert_eq!(mtails(&["sup", "--sigma2", "4,1,1,1,1", "--tau", "1"]).status.code(), Some(1));
    assert_eq!(mtails(&["rmm-plan", "--a", "/no/such/a.csv", "--b", "/no/such/b.csv"]).status.code(), Some(2));
    assert_eq!(mtails(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_matrix_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1,2\n3\n");
    let b = write(dir.path(), "b.csv", "1,2\n");
    assert_eq!(mtails(&["rmm-plan", "--a", &a, "--b", &b]).status.code(), Some(1));
}

#[test]
fn calculators_roundtrip() {
    let v = json_of(&mtails(&["invert", "--p", "0.05"]));
    assert!((v["t"].as_f64().unwrap() - 4.575617434896311).abs() < 1e-9);

    let v = json_of(&mtails(&["rayleigh", "--gamma", "1", "--n", "100", "--delta", "0.05"]));
    assert!((v["upper"].as_f64().unwrap() - 2.03901).abs() < 1e-5);
    assert!((v["lower"].as_f64().unwrap() - 0.02090).abs() < 1e-5);

    let v = json_of(&mtails(&["sup", "--sigma2", "1,1,1,1,1,1,1,1", "--tau", "3"]));
    assert!((v["deviation"].as_f64().unwrap() - 2.0 * (8f64.ln() + 3.0).sqrt()).abs() < 1e-12);

    let v = json_of(&mtails(&["gauss", "--lam-max", "1", "--tr", "1", "--n", "1000000", "--t", "1"]));
    assert!(v["deviation"].as_f64().unwrap() > 1.0);

    let v = json_of(&mtails(&[
        "cov", "--lam-k", "3", "--tr-k", "12", "--ell2", "4", "--lam-min", "1", "--lam-max", "1", "--n", "100", "--t", "8",
        "--side", "upper",
    ]));
    assert!((v["deviation"].as_f64().unwrap() - 0.7728203230275509).abs() < 1e-12);

    let v = json_of(&mtails(&["eigbound", "--gamma", "1", "--d", "5", "--n", "10000", "--delta", "0.1"]));
    assert!(v["lower"].as_f64().unwrap() < 1.0 && v["upper"].as_f64().unwrap() > 1.0);
}

#[test]
fn covariance_from_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    // Rademacher vectors in R^2: Sigma = I, K = 2 I
    let sigma = write(dir.path(), "sigma.csv", "1,0\n0,1\n");
    let k = write(dir.path(), "k.csv", "2,0\n0,2\n");
    let v = json_of(&mtails(&[
        "cov", "--sigma", &sigma, "--k", &k, "--ell2", "2", "--n", "50", "--t", "3",
    ]));
    assert_eq!(v["params"]["lam_k"].as_f64(), Some(1.0));
    assert_eq!(v["params"]["tr_k"].as_f64(), Some(2.0));
    assert_eq!(v["sides"], "two");
}

#[test]
fn rmm_mul_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1,2,0,3\n0,1,1,1\n");
    let b = write(dir.path(), "b.csv", "2,0,1,1\n1,1,1,0\n1,0,0,2\n");
    let run = |tag: &str, seed: &str| {
        let out = dir.path().join(format!("m_{tag}.csv"));
        let cert = dir.path().join(format!("c_{tag}.json"));
        let o = mtails(&[
            "rmm-mul", "--a", &a, "--b", &b, "--n", "64", "--seed", seed,
            "--out", out.to_str().unwrap(), "--cert", cert.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        // the echoed output path is the only field allowed to differ
        let mut cert: Value = serde_json::from_slice(&fs::read(cert).unwrap()).unwrap();
        cert["inputs"]["out"] = Value::Null;
        (fs::read(out).unwrap(), cert)
    };
    let first = run("x", "9");
    assert_eq!(first, run("y", "9"));
    assert_ne!(first.0, run("z", "10").0);

    let csv = String::from_utf8(first.0).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 3);
    let cert = first.1;
    assert_eq!(cert["inputs"]["a"], a.as_str());
    assert_eq!(cert["inputs"]["seed"], 9);
    assert_eq!(cert["variant"], "precise");
    assert!(cert["observed"]["error"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "1,2,3,4,5\n");
    let b = write(dir.path(), "b.csv", "5,4,3,2,1\n");
    let go = |env_seed: Option<&str>, flag: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtails"));
        cmd.env_remove("MTAILS_SEED");
        if let Some(s) = env_seed {
            cmd.env("MTAILS_SEED", s);
        }
        cmd.args(["rmm-mul", "--a", &a, "--b", &b, "--n", "7", "--out", out.to_str().unwrap()]);
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(go(Some("21"), None, "e.csv"), go(None, Some("21"), "f.csv"));
    assert_eq!(go(Some("21"), Some("3"), "g.csv"), go(None, Some("3"), "h.csv"));
}

#[test]
fn verify_suites_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "b.csv", "1,0\n0,1\n");
    let config = write(
        dir.path(),
        "suites.toml",
        r#"
seed = 5
trials = 2000

[[suite]]
name = "rademacher"
n = 50
ensemble = { kind = "rademacher", d = 4 }
certificate = { kind = "bernstein", t = 4.0 }

[[suite]]
name = "product"
n = 40
ensemble = { kind = "rmm", a = [[1.0, 0.0], [0.0, 1.0]], b = "b.csv" }
certificate = { kind = "rmm-precise", t = 4.0 }

[[suite]]
name = "gaussian"
n = 30
trials = 500
ensemble = { kind = "gaussian-vectors", sigma = [[1.0, 0.2], [0.2, 0.5]] }
certificate = { kind = "gaussian-covariance", t = 3.0 }
"#,
    );
    let run = |threads: &str, tag: &str| {
        let csv = dir.path().join(format!("r_{tag}.csv"));
        let json = dir.path().join(format!("r_{tag}.json"));
        let o = mtails(&[
            "verify", "--config", &config, "--threads", threads, "--strict",
            "--csv", csv.to_str().unwrap(), "--json", json.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read_to_string(csv).unwrap(), fs::read_to_string(json).unwrap())
    };
    let one = run("1", "one");
    assert_eq!(one, run("3", "three"));
    assert_eq!(one.0.lines().count(), 4);
    let reports: Value = serde_json::from_str(&one.1).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
    assert_eq!(reports[2]["trials"], 500);
    assert!(reports.as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn verify_rejects_unknown_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.toml",
        "[[suite]]\nn = 3\nensemble = { kind = \"rademacher\", d = 2 }\ncertificate = { kind = \"chernoff\", t = 1.0 }\n",
    );
    assert_eq!(mtails(&["verify", "--config", &config]).status.code(), Some(1));
}
