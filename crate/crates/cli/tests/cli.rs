use std::path::Path;
use std::process::{Command, Output};

fn hpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpl")).args(args).output().expect("hpl runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn classify_prints_the_regime() {
    let o = hpl(&["classify", "--l", "3,5", "--k", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "F-dominated, t=1");
    let o = hpl(&["classify", "--l", "8,8", "--k", "12"]);
    assert_eq!(stdout(&o).trim(), "balanced, s=1");
}

#[test]
fn inert_identity_suite_passes() {
    let o = hpl(&["verify", "gz-inert", "--D", "5", "--p", "7", "--l", "8,8", "--s", "1", "--N", "12", "--B", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("[ok] s = 1, l = (8,8), k = 12: agreement 12 of 12"), "{out}");
    assert!(out.contains("gamma_0:12"));
}

#[test]
fn wrong_prime_is_a_configuration_error() {
    let o = hpl(&["verify", "gz-split", "--p", "7"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stage verify gz-split"));
    let o = hpl(&["aj", "--split", "--p", "7"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hpl(&["classify", "--l", "3", "--k", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = hpl(&["lvalue", "--balanced", "--l", "8,8", "--s", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn deplete_at_one_split_prime() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let g1 = dir.path().join("g1.json");
    let o = hpl(&["gen", "random", "--p", "11", "--N", "6", "--B", "16", "--seed", "4", "--out", p(&g)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = hpl(&["apply", "deplete", "--in", p(&g), "--primes", "p1", "--out", p(&g1)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let text = std::fs::read_to_string(&g1).unwrap();
    let hpl_core::io::FormData::Hilbert(h) = hpl_core::io::read_form(&text, None).unwrap() else { panic!() };
    let sp = h.space().clone();
    let mut seen = 0;
    for (k, c) in h.coeffs().iter().enumerate() {
        if sp.splitting.in_prime(hpl_core::field::PrimeSel::P1, &sp.index.get(k)) {
            assert!(c.is_zero());
            seen += 1;
        }
    }
    assert!(seen > 0);
    let before: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&g).unwrap()).unwrap();
    let after: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(after["coeffs"].as_array().unwrap().len() < before["coeffs"].as_array().unwrap().len());
}

#[test]
fn operator_pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let (g, gp, n, z, h) = (f("g.json"), f("gp.json"), f("n.json"), f("z.json"), f("h.json"));
    let steps: [&[&str]; 5] = [
        &["gen", "hilbert-eisenstein", "--k", "8", "--p", "7", "--B", "30", "--out", &g],
        &["apply", "deplete", "--in", &g, "--out", &gp],
        &["apply", "nabla", "--in", &gp, "--r", "-2", "--weight", "8,8", "--out", &n],
        &["apply", "diag", "--in", &n, "--out", &z],
        &["apply", "ocproj", "--in", &z, "--scaled", "--out", &h],
    ];
    for s in steps {
        let o = hpl(s);
        assert_eq!(o.status.code(), Some(0), "{s:?}: {}", stderr(&o));
    }
    let o = hpl(&["apply", "ocproj", "--in", &z]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = hpl(&["apply", "dpow", "--in", &gp, "--i", "2", "--n", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = hpl(&["apply", "dpow", "--in", &g, "--n", "-1"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": 1, "prime": 7, "precision": "x", "coeffs": []}"#).unwrap();
    let o = hpl(&["apply", "diag", "--in", p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/precision"), "{}", stderr(&o));
    std::fs::write(&bad, r#"{"version": 9}"#).unwrap();
    let o = hpl(&["apply", "diag", "--in", p(&bad)]);
    assert!(stderr(&o).contains("regenerate"));
}

#[test]
fn reports_are_byte_stable_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let o = hpl(&["aj", "--inert", "--report", p(path)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = hpl(&["report", "--in", p(&a)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("aj --inert (hpl "));
    assert!(text.contains("E_p = 7^"));
    assert!(text.contains("main theorem relation"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["config"]["p"], 7);
    assert_eq!(v["config"]["l"], serde_json::json!([8, 8]));
}

#[test]
fn lvalue_and_euler_run_on_the_split_demo() {
    let o = hpl(&["lvalue", "--balanced", "--p", "11", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"]["p"], 11);
    let o = hpl(&["euler", "--p", "11"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("E_0p = 11^0"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_hpl"))
        .args(["classify", "--l", "2,2", "--k", "2"])
        .env("HPL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_hpl"))
        .args(["verify", "vanishing", "--count", "3"])
        .env("HPL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
