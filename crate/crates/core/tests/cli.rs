use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

const COLLINEAR: &str = r#"{"name":"C","points":["0","1","2"],"basepoint":"0","metric":[["0","1","2"],["1","0","1"],["2","1","0"]]}"#;
const EQUILATERAL: &str = r#"{"name":"E","points":["e","a","b"],"basepoint":"e","metric":[["0","1","1"],["1","0","1"],["1","1","0"]]}"#;
const BROKEN: &str = r#"{"name":"B","points":["e","a","b"],"basepoint":"e","metric":[["0","1","5"],["1","0","1"],["5","1","0"]]}"#;
const Y: &str = r#"{"name":"Y","points":["e","u"],"basepoint":"e","metric":[["0","1"],["1","0"]]}"#;
const X_HALF: &str = r#"{"name":"X","points":["e","x"],"basepoint":"e","metric":[["0","1/2"],["1/2","0"]]}"#;
const PHI: &str = r#"{"domain":"Y","codomain":"X","map":{"e":"e","u":"x"}}"#;

struct Run {
    code: i32,
    out: Value,
    stdout: String,
    stderr: String,
}

fn lipcomp(args: &[&str]) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_lipcomp")).args(args).output().unwrap();
    let stdout = String::from_utf8(o.stdout).unwrap();
    Run {
        code: o.status.code().unwrap(),
        out: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stdout,
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn file(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_accepts_and_rejects() {
    let d = TempDir::new().unwrap();
    let good = file(&d, "c.json", COLLINEAR);
    let r = lipcomp(&["validate", "--space", s(&good)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["valid"], true);

    let bad = file(&d, "b.json", BROKEN);
    let r = lipcomp(&["validate", "--space", s(&bad)]);
    assert_eq!(r.code, 2);
    assert_eq!(r.out["violation"], "triangle");
    assert!(r.stderr.contains("triangle inequality"));
}

#[test]
fn broken_space_is_rejected_everywhere() {
    let d = TempDir::new().unwrap();
    let bad = file(&d, "b.json", BROKEN);
    for cmd in ["concave", "molecules", "peak"] {
        let r = lipcomp(&[cmd, "--space", s(&bad)]);
        assert_eq!(r.code, 2, "{cmd}");
        assert_eq!(r.out["error"], "invalid_input");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lipcomp(&["frobnicate"]).code, 2);
    assert_eq!(lipcomp(&["peak"]).code, 2);
    let r = lipcomp(&["validate", "--space", "/nonexistent/space.json"]);
    assert_eq!(r.code, 2);
    assert_eq!(lipcomp(&["--help"]).code, 0);
}

#[test]
fn peak_all_on_collinear() {
    let d = TempDir::new().unwrap();
    let c = file(&d, "c.json", COLLINEAR);
    let r = lipcomp(&["peak", "--space", s(&c), "--all"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["peak_property"], false);
    assert_eq!(r.out["witness"], json!(["2", "0"]));
}

#[test]
fn peak_certificate_round_trip() {
    let d = TempDir::new().unwrap();
    let e = file(&d, "e.json", EQUILATERAL);
    let r = lipcomp(&["peak", "--space", s(&e), "--pair", "a", "b"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["peaking"], true);
    let cert = &r.out["certificate"];
    assert_eq!(cert["margin"], "1/2");
    assert_eq!(cert["function"]["values"], json!({"e": "0", "a": "1/2", "b": "-1/2"}));

    let cf = file(&d, "cert.json", &cert.to_string());
    assert_eq!(lipcomp(&["peak", "--space", s(&e), "--verify", s(&cf)]).out["confirmed"], true);

    let mut tampered = cert.clone();
    tampered["margin"] = json!("3/4");
    let tf = file(&d, "bad.json", &tampered.to_string());
    let r = lipcomp(&["peak", "--space", s(&e), "--verify", s(&tf)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["confirmed"], false);

    let c = file(&d, "c.json", COLLINEAR);
    let r = lipcomp(&["peak", "--space", s(&c), "--pair", "2", "0"]);
    assert_eq!(r.out["peaking"], false);
    assert_eq!(r.out["certificate"], Value::Null);
}

#[test]
fn concave_and_molecules() {
    let d = TempDir::new().unwrap();
    let c = file(&d, "c.json", COLLINEAR);
    let r = lipcomp(&["concave", "--space", s(&c)]);
    assert_eq!(r.out["concave"], false);
    assert_eq!(r.out["witness"], json!(["0", "1", "2"]));

    let r = lipcomp(&["molecules", "--space", s(&c)]);
    let table = r.out["molecules"].as_array().unwrap();
    assert_eq!(table.len(), 6);
    for row in table {
        let long = row["pair"] == json!(["2", "0"]) || row["pair"] == json!(["0", "2"]);
        assert_eq!(row["extreme"], !long);
        assert_eq!(row["exposed"], !long);
    }

    let e = file(&d, "e.json", EQUILATERAL);
    let r = lipcomp(&["concave", "--space", s(&e)]);
    assert_eq!(r.out["concave"], true);
    assert_eq!(r.out["uniformly_concave"], true);
    assert_eq!(r.out["min_slack"], "1");
}

#[test]
fn dilation_example() {
    let d = TempDir::new().unwrap();
    let (y, x, phi) = (file(&d, "y.json", Y), file(&d, "x.json", X_HALF), file(&d, "phi.json", PHI));
    let r = lipcomp(&["dilation", "--map", s(&phi), "--spaces", s(&y), s(&x)]);
    assert_eq!(r.out, json!({"dilation": true, "k": "1/2"}));

    for method in ["oracle", "theorem", "both"] {
        let r = lipcomp(&["isometry", "--map", s(&phi), "--spaces", s(&y), s(&x), "--method", method]);
        assert_eq!(r.code, 0);
        assert_eq!(r.out["isometric"], false);
        assert_eq!(r.out["lip_phi"], "1/2");
        assert_eq!(r.out["certificate"]["kind"], "separating");
        assert_eq!(r.out["certificate"]["lip"], "1");
        assert_eq!(r.out["certificate"]["composed_lip"], "1/2");
        let v = file(&d, "v.json", &r.stdout);
        let check = lipcomp(&["isometry", "--map", s(&phi), "--spaces", s(&y), s(&x), "--verify", s(&v)]);
        assert_eq!(check.out["confirmed"], true, "{method}");
    }

    let r = lipcomp(&["property-m", "--map", s(&phi), "--spaces", s(&y), s(&x)]);
    assert_eq!(r.out["property_m"], false);
    assert_eq!(r.out["first_unmatched"], json!(["e", "x"]));
}

#[test]
fn identity_is_isometric_and_tampering_is_caught() {
    let d = TempDir::new().unwrap();
    let e = file(&d, "e.json", EQUILATERAL);
    let id = file(&d, "id.json", r#"{"domain":"E","codomain":"E","map":{"e":"e","a":"a","b":"b"}}"#);
    let r = lipcomp(&["isometry", "--map", s(&id), "--spaces", s(&e), s(&e)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["isometric"], true);
    assert_eq!(r.out["method"], "both");
    assert_eq!(r.out["theorem"]["outcome"], "decided");

    let mut v = r.out.clone();
    v["certificate"]["covers"][0]["weights"][0]["weight"] = json!("9/10");
    let vf = file(&d, "v.json", &v.to_string());
    let check = lipcomp(&["isometry", "--map", s(&id), "--spaces", s(&e), s(&e), "--verify", s(&vf)]);
    assert_eq!(check.code, 0);
    assert_eq!(check.out["confirmed"], false);
}

#[test]
fn inconclusive_theorem_route_falls_back() {
    let d = TempDir::new().unwrap();
    let c = file(&d, "c.json", COLLINEAR);
    let y = file(
        &d,
        "y.json",
        r#"{"name":"Y","points":["e","a","b","c"],"basepoint":"e","metric":[["0","1","2","3"],["1","0","1","2"],["2","1","0","1"],["3","2","1","0"]]}"#,
    );
    let phi = file(&d, "phi.json", r#"{"domain":"Y","codomain":"C","map":{"e":"0","a":"1","b":"1","c":"2"}}"#);
    let r = lipcomp(&["isometry", "--map", s(&phi), "--spaces", s(&y), s(&c), "--method", "theorem"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["theorem"]["outcome"], "inconclusive");
    assert_eq!(r.out["isometric"], true);
    assert_eq!(r.out["property_m"], false);
}

#[test]
fn map_errors() {
    let d = TempDir::new().unwrap();
    let (y, x) = (file(&d, "y.json", Y), file(&d, "x.json", X_HALF));
    let moved = file(&d, "m.json", r#"{"domain":"Y","codomain":"X","map":{"e":"x","u":"e"}}"#);
    let r = lipcomp(&["isometry", "--map", s(&moved), "--spaces", s(&y), s(&x)]);
    assert_eq!(r.code, 2);
    let phi = file(&d, "phi.json", PHI);
    let r = lipcomp(&["isometry", "--map", s(&phi), "--spaces", s(&x), s(&y)]);
    assert_eq!(r.code, 2);
}

#[test]
fn holder_output_is_a_space() {
    let d = TempDir::new().unwrap();
    let c = file(&d, "c.json", COLLINEAR);
    let r = lipcomp(&["holder", "--space", s(&c), "--alpha", "1/2", "--digits", "4"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["name"], "C^1/2@4");
    assert_eq!(r.out["metric"][0][2], "7071/5000");
    let h = file(&d, "h.json", &r.stdout);
    assert_eq!(lipcomp(&["validate", "--space", s(&h)]).code, 0);
    let r = lipcomp(&["peak", "--space", s(&h), "--all"]);
    assert_eq!(r.out["peak_property"], true);

    assert_eq!(lipcomp(&["holder", "--space", s(&c), "--alpha", "1", "--digits", "4"]).code, 2);
}

#[test]
fn corpus_is_reproducible_and_written() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("report.json");
    let args = ["corpus", "--seed", "3", "--count", "12", "--max-points", "4"];
    let a = lipcomp(&args);
    let mut with_output = args.to_vec();
    with_output.extend(["--output", s(&out)]);
    let b = lipcomp(&with_output);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), a.stdout);
    assert_eq!(a.out["instances"], 12);
    assert_eq!(a.out["anomalies"], json!([]));

    let r = lipcomp(&["corpus", "--min-points", "5", "--max-points", "3"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.out["error"], "generation");
}

#[test]
fn corpus_from_profile_file() {
    let d = TempDir::new().unwrap();
    let p = file(
        &d,
        "p.json",
        r#"{"seed":1,"min_points":2,"max_points":3,"values":{"scheme":"random-metric","max_weight":2},"maps":{"scheme":"dilation","k":"1"}}"#,
    );
    let r = lipcomp(&["corpus", "--profile", s(&p), "--count", "5"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.out["oracle_isometric"], 5);
}

#[test]
fn search_budget_zero_and_witness_replays() {
    let r = lipcomp(&["search", "--budget", "0"]);
    assert_eq!(r.out, json!({"outcome": "exhausted", "examined": 0, "inconclusive_region": 0}));

    let r = lipcomp(&[
        "search", "--seed", "5", "--budget", "400", "--values", "random", "--max-weight", "2", "--min-points", "3",
        "--max-points", "4",
    ]);
    assert_eq!(r.code, 0);
    if r.out["outcome"] == "witness" {
        let d = TempDir::new().unwrap();
        let inst = &r.out["witness"]["instance"];
        let y = file(&d, "y.json", &inst["domain"].to_string());
        let x = file(&d, "x.json", &inst["codomain"].to_string());
        let phi = file(&d, "phi.json", &inst["map"].to_string());
        let v = lipcomp(&["isometry", "--map", s(&phi), "--spaces", s(&y), s(&x), "--method", "both"]);
        assert_eq!(v.code, 0);
        assert_eq!(v.out["isometric"], true);
        assert_eq!(v.out["property_m"], false);
        assert_eq!(v.out["theorem"]["outcome"], "inconclusive");
    }
}
