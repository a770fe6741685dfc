use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ab.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpe-robust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn mpe_under_evidence() {
    let f = fixture();
    let o = run(&["mpe", f.to_str().unwrap(), "A=a", "--format", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["probability"].as_f64(), Some(0.4));
    assert_eq!(v["witness"][0]["value"], "a");
    assert_eq!(v["witness"][1]["value"], "b_bar");
}

#[test]
fn evidence_flag_and_tokens_combine() {
    let f = fixture();
    let o = run(&["mpe", f.to_str().unwrap(), "--evidence", "A=a_bar"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("A=a_bar B=b"));
    assert!(stdout(&o).contains("0.3"));
}

#[test]
fn sensitivity_report_has_fixture_interval() {
    let f = fixture();
    let o = run(&["sensitivity", f.to_str().unwrap(), "--format", "report"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["variable"] == "B" && p["value"] == "b_bar" && p["given"][0]["value"] == "a")
        .unwrap();
    assert_eq!(p["interval"]["lower"].as_f64(), Some(0.6));
    assert_eq!(p["interval"]["upper"].as_f64(), Some(1.0));
    assert_eq!(p["interval"]["lower_binding"]["kind"], "other_parents");
}

#[test]
fn report_output_is_byte_identical() {
    let f = fixture();
    let args = ["sensitivity", f.to_str().unwrap(), "B=b", "--format", "report"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let a = run(&["check", f.to_str().unwrap(), "--random", "3", "--seed", "11", "--format", "report"]);
    let b = run(&["check", f.to_str().unwrap(), "--random", "3", "--seed", "11", "--format", "report"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn check_passes_on_fixture() {
    let f = fixture();
    let o = run(&["check", f.to_str().unwrap(), "--random", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let o = run(&["check", f.to_str().unwrap(), "--random", "4", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn compile_and_retract() {
    let f = fixture();
    let o = run(&["compile", f.to_str().unwrap()]);
    assert!(stdout(&o).contains("decomposable  true"));
    let o = run(&["retract", f.to_str().unwrap(), "A=a", "--witness", "--format", "report"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["retraction"]["verdicts"][0]["verdict"], "identity-preserved-strictly");
    assert_eq!(v["multiplicity"][0]["forced"], "b_bar");
    assert_eq!(v["retraction"]["retracted_witnesses"][0]["probability"].as_f64(), Some(0.4));
}

#[test]
fn errors_have_distinct_messages() {
    let f = fixture();
    let missing = run(&["mpe", "/no/such/net.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("cannot read network file"));

    let dir = std::env::temp_dir().join(format!("mpe-robust-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let parse = run(&["mpe", bad.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(1));
    assert!(stderr(&parse).contains("cannot load network"));

    let invalid = dir.join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{"variables":[{"name":"A","values":["a","a_bar"]}],"cpts":[{"child":"A","table":[[0.2,0.7]]}]}"#,
    )
    .unwrap();
    let o = run(&["mpe", invalid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sum"), "{}", stderr(&o));

    let ev = run(&["mpe", f.to_str().unwrap(), "C=c"]);
    assert_eq!(ev.status.code(), Some(1));
    assert!(stderr(&ev).contains("invalid evidence"));

    let guard = run(&["check", f.to_str().unwrap(), "--guard", "2"]);
    assert_eq!(guard.status.code(), Some(1));
    assert!(stderr(&guard).contains("enumeration guard exceeded"));

    let usage = run(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}
