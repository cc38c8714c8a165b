use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/v1").join(name)
}

fn distlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distlab")).args(args).env_remove("DISTLAB_SEED").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?} stderr {:?}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn point_mass_samples_give_their_own_parameter() {
    let fam = fixture("identity3.family.json");
    let samples = fixture("identity3_101.samples");
    let out = distlab(&["learn", "--mode", "sd", "--family", path(&fam), "--samples", path(&samples)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["report"]["h"], "101");
    assert_eq!(r["result"]["report"]["within_bound"], true);
    assert_eq!(r["tool"], "distlab");
    assert_eq!(r["config"]["seed"], distlab::fixtures::DEFAULT_SEED);

    let out = distlab(&["learn", "--mode", "mle", "--family", path(&fam), "--samples", path(&samples)]);
    assert_eq!(report(&out)["result"]["argmax_z"], "101");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"param_bits": 1, "gates": "#).unwrap();
    let out = distlab(&["compile", "--family", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));

    let out = distlab(&["learn", "--mode", "kl", "--family", path(&fixture("identity3.family.json")), "--samples",
        path(&fixture("identity3_101.samples"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("support"));

    assert_eq!(distlab(&["verify", "--claim", "no_such_claim"]).status.code(), Some(2));
    assert_eq!(distlab(&["learn", "--mode", "nope"]).status.code(), Some(2));
    assert_eq!(distlab(&["owpuzz", "--instance", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn kl_mode_on_a_fully_supported_family() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("s.txt");
    let fam = fixture("biased4.family.json");
    let out = distlab(&["sample", "--family", path(&fam), "--param", "0110", "--t", "40", "--out", path(&samples)]);
    assert_eq!(out.status.code(), Some(0));
    let out = distlab(&["learn", "--mode", "kl", "--family", path(&fam), "--samples", path(&samples)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["h"], "0110");
}

#[test]
fn puzzle_experiments() {
    let r = report(&distlab(&["owpuzz", "--instance", path(&fixture("owp_identity3.instance.json")), "--trials", "50"]));
    assert_eq!(r["result"]["completeness"]["rate"], 1.0);
    assert_eq!(r["result"]["best_attack"]["success"]["rate"], 1.0);

    let r = report(&distlab(&["owpuzz", "--instance", path(&fixture("owp_degenerate.instance.json")), "--trials", "20"]));
    assert_eq!(r["result"]["best_attack"]["success"]["exact"], "1");

    let r = report(&distlab(&["owpuzz", "--instance", path(&fixture("owp_biased4.instance.json"))]));
    assert_eq!(r["result"]["t"], 64);
    assert!(r["result"]["completeness"]["rate"].as_f64().unwrap() >= 0.99);
}

#[test]
fn reports_are_byte_identical_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixture("agnostic_identity3.instance.json");
    let out = dir.path().join("report.json");
    let mut files = Vec::new();
    for _ in 0..2 {
        let status = distlab(&["learn", "--mode", "sd", "--instance", path(&inst), "--seed", "5", "--out", path(&out)]);
        assert_eq!(status.status.code(), Some(0));
        files.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let v: Value = serde_json::from_str(&files[0]).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_distlab"))
        .args(["verify", "--claim", "sd_axioms", "--format", "csv"])
        .env("DISTLAB_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,value\n"));
    assert!(text.contains("\nconfig.seed,77\n"));
}

#[test]
fn verify_filters_claims() {
    let out = distlab(&["verify", "--claim", "probabilistic_argument"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let claims = r["result"]["claims"].as_array().unwrap();
    assert_eq!(claims.len(), 1);
    assert_eq!(claims[0]["claim"], "probabilistic_argument");
    assert_eq!(claims[0]["holds"], true);
}

#[test]
fn broken_distinguisher_fails_the_suite() {
    let out = distlab(&["verify", "--claim", "NP_distinguish,postselect_decision", "--inject-fault", "broken-dis"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["failed"], serde_json::json!(["NP_distinguish"]));
}

#[test]
fn default_suite_passes() {
    let out = distlab(&["verify"]);
    let r = report(&out);
    assert_eq!(out.status.code(), Some(0), "{}", r["result"]["failed"]);
    assert_eq!(r["result"]["claims"].as_array().unwrap().len(), distlab::verify::CLAIMS.len());
}
