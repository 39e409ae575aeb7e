//! The `nishida` binary: documented examples, exit codes, determinism and
//! JSON round trips.

use std::path::Path;
use std::process::{Command, Output};

use nishida::opcalc::{Ambient, CohExpr, FormalClass, HomExpr, HomologyExpression, OpExpression};
use nishida::phi::make_phi_range;
use nishida::realize::{thm_nneq_certificate, Certificate};
use nishida::ssq::assumption_threshold;
use nishida::unstable::GradedFpModule;
use nishida::Prime;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nishida")).args(args).env_remove("NISHIDA_WINDOW_CAP").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn documented_examples() {
    let o = run(&["adem", "--p", "3", "--word", "P1 P1"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "2 P^2\n"));
    let o = run(&["coeff", "--p", "3", "--nu", "1"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "2\n"));
}

#[test]
fn certify_exit_code_follows_the_verdict() {
    let p = Prime::new(3).unwrap();
    for (l, m) in [(2, 2), (2, 6)] {
        let k = assumption_threshold(p, l, m, 0).unwrap();
        let (ls, ms, ks) = (l.to_string(), m.to_string(), k.to_string());
        let o = run(&[
            "certify", "--p", "3", "--l", &ls, "--m", &ms, "--i", "1", "--n", "0", "--k", &ks, "--format", "json",
        ]);
        let cert: Certificate = serde_json::from_slice(&o.stdout).unwrap();
        let lib = thm_nneq_certificate(p, k, l, m, 1, 0).unwrap();
        assert_eq!(cert, lib);
        assert_eq!(o.status.code(), Some(if lib.is_green() { 0 } else { 1 }), "l={l} m={m}");
    }
    // (2, 6) at its threshold is green
    let o = run(&["certify", "--p", "3", "--l", "2", "--m", "6", "--i", "1", "--n", "0", "--k", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("verdict: contradiction certified\n"));
    // one below the threshold the gate refuses cleanly
    let o =
        run(&["certify", "--p", "3", "--l", "2", "--m", "2", "--i", "1", "--n", "0", "--k", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"]["status"], "refused");
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    assert_eq!(run(&["adem", "--p", "4", "--word", "P1"]).status.code(), Some(2));
    assert_eq!(run(&["adem", "--p", "3", "--word", "Q1"]).status.code(), Some(2));
    assert_eq!(run(&["coeff", "--p", "3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"p\": 3, \"basis\": [\n");
    let o = run(&["module", "--input", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn window_cap_comes_from_the_environment() {
    let bin = env!("CARGO_BIN_EXE_nishida");
    let o = Command::new(bin)
        .args(["basis", "--p", "3", "--degree", "12"])
        .env("NISHIDA_WINDOW_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(bin)
        .args(["basis", "--p", "3", "--degree", "12"])
        .env("NISHIDA_WINDOW_CAP", "12")
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "P^3\n");
    assert_eq!(run(&["basis", "--p", "3", "--degree", "12", "--window-cap", "0"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["certify", "--p", "3", "--l", "2", "--m", "6", "--i", "1", "--n", "0", "--k", "4", "--format", "json"],
        vec!["ssq-page", "--p", "3", "--l", "2", "--m", "6", "--i", "1", "--n", "0", "--k", "4", "--format", "json"],
        vec!["nishida", "--p", "3", "--s", "3", "--r", "0", "--degree", "2", "--format", "json"],
        vec!["basis", "--p", "5", "--degree", "80"],
    ] {
        let (a, b) = (run(&args), run(&args));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn emitted_json_reads_back() {
    let p = Prime::new(3).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let o = run(&["phi", "--p", "3", "--k", "1", "--l", "3", "--format", "json"]);
    let text = stdout(&o);
    let m = GradedFpModule::from_json(&text).unwrap();
    assert_eq!(m, make_phi_range(1, 3, p).unwrap());
    let path = write(dir.path(), "phi.json", &text);
    let o = run(&["module", "--input", &path, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    assert_eq!(GradedFpModule::from_json(&report["module"].to_string()).unwrap(), m);
    // P^3 t^3 = t^9 is a top power, so no desuspension is possible
    assert_eq!(report["desuspension_index"], 0);

    // P^3 Q^0(x), |x| = 2, from flags and from an expression file
    let o = run(&["nishida", "--p", "3", "--s", "3", "--r", "0", "--degree", "2", "--n", "5", "--format", "json"]);
    let from_flags: OpExpression = serde_json::from_value(json(&o)["expansion"].clone()).unwrap();
    let n = Ambient::new(5).unwrap();
    let input = OpExpression { p, n, root: CohExpr::q(0, CohExpr::leaf(FormalClass::cohomology("x", 2, 1))) };
    let path = write(dir.path(), "q.json", &serde_json::to_string(&input).unwrap());
    let o = run(&["nishida", "--p", "3", "--s", "3", "--input", &path, "--format", "json"]);
    let from_file: OpExpression = serde_json::from_value(json(&o)["expansion"].clone()).unwrap();
    assert_eq!(from_flags, from_file);
    assert_eq!(from_file.n, n);
}

#[test]
fn pairing_and_verification() {
    let p = Prime::new(3).unwrap();
    let n = Ambient::new(3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let coh = OpExpression { p, n, root: CohExpr::leaf(FormalClass::cohomology("x", 4, 1)) };
    let hom = HomologyExpression { p, n, root: HomExpr::leaf(FormalClass::homology("x", 4, 1)) };
    let c = write(dir.path(), "c.json", &serde_json::to_string(&coh).unwrap());
    let h = write(dir.path(), "h.json", &serde_json::to_string(&hom).unwrap());
    let o = run(&["pair", "--coh", &c, "--hom", &h]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "<x, x>\n");
    let shifted = HomologyExpression { p, n, root: HomExpr::leaf(FormalClass::homology("x", 6, 1)) };
    let h6 = write(dir.path(), "h6.json", &serde_json::to_string(&shifted).unwrap());
    let o = run(&["pair", "--coh", &c, "--hom", &h6, "--format", "json"]);
    assert_eq!(json(&o)["value"], "0");
    assert_eq!(json(&o)["mismatch"], "degree 4 vs 6, weight 1 vs 1");

    let o = run(&["nishida", "--p", "3", "--s", "2", "--r", "1", "--degree", "2", "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pairing check: pass"));
}

#[test]
fn module_checks_fail_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // P^1 on a class of degree 0 violates instability
    let body = r#"{"p": 3, "basis": [{"name": "x", "deg": 0}, {"name": "y", "deg": 4}], "beta": [], "powers": {"1": [[1, 0, 1]]}}"#;
    let path = write(dir.path(), "m.json", body);
    let o = run(&["module", "--input", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("unstable: P^1"));
}

#[test]
fn output_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.txt");
    let o = run(&["adem", "--p", "3", "--word", "P1 P1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "2 P^2\n");
}
