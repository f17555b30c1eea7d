use std::path::PathBuf;
use std::process::{Command, Output};

use chanres::channel::{load_channel, save_channel};
use chanres::free_sets::{self, FreeSetSpec};
use chanres::{linalg, Channel, DensityMatrix};
use serde_json::Value;

struct Fixtures {
    dir: tempfile::TempDir,
}

impl Fixtures {
    fn new() -> Self {
        let f = Self { dir: tempfile::tempdir().unwrap() };
        f.save("id2.chan", &Channel::identity(2));
        f.save("dep2.chan", &Channel::depolarizing(2, 1.0));
        f.save("hadamard.chan", &Channel::unitary(&linalg::hadamard()).unwrap());
        f.save("zero.chan", &Channel::constant(2, &DensityMatrix::basis(2, 0)));
        f.save("mixed.chan", &Channel::constant(2, &DensityMatrix::maximally_mixed(2)));
        f.save("plus-cq.chan", &Channel::cq(&[DensityMatrix::plus(), DensityMatrix::basis(2, 0)]).unwrap());
        f.save("ad.chan", &Channel::amplitude_damping(0.3));
        f
    }

    fn save(&self, name: &str, ch: &Channel) {
        save_channel(self.path(name), ch).unwrap();
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

fn chanres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanres")).args(args).env_remove("CHANRES_TOLERANCE").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = chanres(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn dmax_of_identity_against_full_depolarizer() {
    let f = Fixtures::new();
    let o = chanres(&["dmax", "--lhs", &f.arg("id2.chan"), "--rhs", &f.arg("dep2.chan")]);
    assert_eq!(o.status.code(), Some(0));
    let first = stdout(&o).lines().next().unwrap().to_owned();
    assert_eq!(first.split_whitespace().last(), Some("2.0"), "{first}");
}

#[test]
fn robustness_of_hadamard_as_json() {
    let f = Fixtures::new();
    let witness = f.path("witness.chan");
    let doc = json(&["robust", "--free", "mio", "--eps", "0", &f.arg("hadamard.chan"), "--witness-out", witness.to_str().unwrap()]);
    for key in ["verb", "inputs", "params", "results", "provenance"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["verb"], "robust");
    assert!((doc["results"]["log_robustness"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((doc["results"]["robustness"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(doc["results"]["witness"], witness.to_str().unwrap());
    assert_eq!(doc["provenance"]["solves"][0]["status"], "Optimal");
    let w = load_channel(&witness).unwrap();
    assert!(free_sets::is_free(&w, &FreeSetSpec::mio(2, 2), 1e-6).unwrap());
}

#[test]
fn majorization_verb() {
    let o = chanres(&["majorize", "--p", "1,0", "--q", "0.5,0.5"]);
    assert!(stdout(&o).trim_end().ends_with("true"));
    let o = chanres(&["majorize", "--p", "0.5,0.5", "--q", "1,0"]);
    assert!(stdout(&o).trim_end().ends_with("false"));
    let o = chanres(&["majorize", "--p", "0.7,0.7", "--q", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convex_split_csv_row() {
    let f = Fixtures::new();
    let o = chanres(&["convex-split", "--alpha", &f.arg("zero.chan"), "--beta", &f.arg("mixed.chan"), "--n", "8", "--format", "csv"]);
    assert_eq!(stdout(&o), "n,lambda,half-diamond distance,bound,shortcut,dim\n8,2.0,0.13671875,0.5,true,65536\n");
}

#[test]
fn distances_are_labelled_as_half_diamond() {
    let f = Fixtures::new();
    let o = chanres(&["diamond", "--lhs", &f.arg("id2.chan"), "--rhs", &f.arg("dep2.chan")]);
    let text = stdout(&o);
    assert!(text.starts_with("half-diamond distance"), "{text}");
    // ½‖id − replacement by I/2‖_⋄ = 3/4
    assert!(text.trim_end().ends_with("0.75"), "{text}");
}

#[test]
fn cq_cost_and_its_precondition() {
    let f = Fixtures::new();
    let doc = json(&["cq-cost", &f.arg("plus-cq.chan")]);
    assert!((doc["results"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    let o = chanres(&["cq-cost", &f.arg("hadamard.chan")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hadamard.chan"));
}

#[test]
fn validation_errors_exit_with_2_and_name_the_culprit() {
    let f = Fixtures::new();
    let missing = f.arg("missing.chan");
    let o = chanres(&["dmax", "--lhs", &missing, "--rhs", &f.arg("id2.chan")]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--lhs") && err.contains("missing.chan"), "{err}");

    let o = chanres(&["robust", &f.arg("id2.chan")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--free"));

    let o = chanres(&["erasure", &f.arg("zero.chan"), "--free", "mio", "--eps", "0.1", "--eta", "0.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--eps/--eta"));

    let o = chanres(&["dmax", "--lhs", &f.arg("id2.chan"), "--rhs", &f.arg("id2.chan"), "--eps", "1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = chanres(&["robust", &f.arg("id2.chan"), "--free", "mio", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failures_exit_with_3() {
    let f = Fixtures::new();
    let o = Command::new(env!("CARGO_BIN_EXE_chanres"))
        .args(["robust", "--free", "mio", &f.arg("hadamard.chan")])
        .env("CHANRES_TOLERANCE", "1e-300")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("status"));
}

#[test]
fn tolerance_comes_from_the_environment() {
    let f = Fixtures::new();
    let o = Command::new(env!("CARGO_BIN_EXE_chanres"))
        .args(["imax", &f.arg("id2.chan"), "--format", "json"])
        .env("CHANRES_TOLERANCE", "1e-6")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["provenance"]["gap_tolerance"].as_f64(), Some(1e-6));
    assert!((doc["results"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-4);

    let o =
        Command::new(env!("CARGO_BIN_EXE_chanres")).args(["imax", &f.arg("id2.chan")]).env("CHANRES_TOLERANCE", "lots").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CHANRES_TOLERANCE"));
}

fn run_all_formats(args: &[&str]) -> [Vec<u8>; 3] {
    ["table", "json", "csv"].map(|fmt| {
        let mut all = args.to_vec();
        all.extend(["--format", fmt]);
        let o = chanres(&all);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    })
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let f = Fixtures::new();
    let (ad, zero) = (f.arg("ad.chan"), f.arg("zero.chan"));
    let cases: Vec<Vec<&str>> = vec![
        vec!["power", &ad, "--kind", "increasing", "--starts", "3", "--seed", "7"],
        vec!["axioms", "--free", "mio", "--trials", "3", "--seed", "1"],
        vec!["erasure", &zero, "--free", "mio", "--eps", "0.6", "--eta", "0.1"],
    ];
    for args in cases {
        assert_eq!(run_all_formats(&args), run_all_formats(&args), "{args:?}");
    }
}

#[test]
fn simulation_check_reports_both_verdicts() {
    let f = Fixtures::new();
    let doc = json(&[
        "simulate-check",
        "--channel",
        &f.arg("hadamard.chan"),
        "--target",
        &f.arg("hadamard.chan"),
        "--pre",
        &f.arg("id2.chan"),
        "--post",
        &f.arg("id2.chan"),
        "--free",
        "mio",
    ]);
    let r = &doc["results"];
    assert_eq!(r["pre_free"], true);
    assert_eq!(r["post_free"], true);
    assert_eq!(r["passes"], true);
    assert!(r["distance"].as_f64().unwrap() < 1e-6);
}

#[test]
fn free_sets_load_from_files() {
    let f = Fixtures::new();
    let spec = FreeSetSpec::gibbs(linalg::from_real_diag(&[0.0, 1.0]), 1.0).unwrap();
    let spec_path = f.path("gibbs.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let doc = json(&["dist-free", &f.arg("ad.chan"), "--free", spec_path.to_str().unwrap()]);
    assert_eq!(doc["results"]["cone"], spec.name());
    let d = doc["results"]["distance"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&d));
    let doc = json(&["power", &f.arg("ad.chan"), "--monotone", "free-energy", "--free", spec_path.to_str().unwrap(), "--starts", "2"]);
    assert_eq!(doc["results"]["unit"], "nats");
    let bad = chanres(&["dist-free", &f.arg("ad.chan"), "--free", &f.arg("nope.json")]);
    assert_eq!(bad.status.code(), Some(2));
}
