use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cdedit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdedit"))
        .arg("--dir")
        .arg(dir)
        .args(["--seed", "11"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = cdedit(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn edit_lifecycle_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("state");
    let init = ok_json(&dir, &["chain", "init", "--backend", "mock", "--target-bits", "252"]);
    assert_eq!(init["backend"], "mock");
    assert_eq!(cdedit(&dir, &["chain", "init", "--backend", "mock"]).status.code(), Some(2));

    ok_json(&dir, &["register", "owner", "alice"]);
    ok_json(&dir, &["register", "modifier", "bob", "--attrs", "A,B", "--level", "m_nB"]);
    ok_json(&dir, &["register", "keygen", "bob"]);
    let tx = ok_json(&dir, &["chain", "add-tx", "--payload", "v1", "--owner", "alice", "--policy", "A AND B"]);
    assert_eq!(tx["tx"], 1);
    ok_json(&dir, &["chain", "mine"]);
    ok_json(&dir, &["chain", "add-tx", "--payload", "plain"]);
    let blk = ok_json(&dir, &["chain", "mine", "--owner", "alice", "--policy", "A OR C"]);
    assert_eq!(blk["height"], 2);

    let tk = ok_json(&dir, &["token", "request", "--type", "bl", "--n", "2", "--index", "2", "--deposit", "20", "--modifier", "bob"]);
    assert_eq!(tk["kind"], "B_ntk");
    let file = tk["file"].as_str().unwrap().to_string();
    assert!(Path::new(&file).exists());
    assert_eq!(ok_json(&dir, &["token", "verify", &file])["valid"], true);

    let edit = ok_json(&dir, &["chain", "edit-tx", "--tx", "1", "--payload", "v2", "--token", &file, "--modifier", "bob"]);
    assert_eq!(edit["uses_remaining"], 1);
    let edit = ok_json(&dir, &["chain", "edit-block", "--height", "2", "--replace", "2=redacted", "--token", &file, "--modifier", "bob"]);
    assert_eq!(edit["entry"], 2);
    assert_eq!(ok_json(&dir, &["chain", "validate"])["valid"], true);

    let shown = ok_json(&dir, &["chain", "show", "--height", "2"]);
    assert_eq!(shown["blocks"][0]["txs"][0]["payload"], "redacted");

    let verify = cdedit(&dir, &["token", "verify", &file]);
    assert_eq!(verify.status.code(), Some(1));

    let audit = ok_json(&dir, &["audit", "report", "--edit", "2", "--reporter", "alice"]);
    assert_eq!(audit["verdict"], "clean");
    assert_eq!(audit["settlement"]["type"], "refund");
    assert!(Path::new(audit["file"].as_str().unwrap()).exists());

    let denied = cdedit(&dir, &["chain", "edit-tx", "--tx", "1", "--payload", "v3", "--token", &file, "--modifier", "bob"]);
    assert_eq!(denied.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&denied.stderr).contains("exhausted"));
}

#[test]
fn run_and_bench_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/basic_edit.json");
    let out = tmp.path().join("transcript.json");
    let status = cdedit(tmp.path(), &["run", script, "--backend", "mock", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let transcript: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(transcript["chain_valid"], true);

    let csv = tmp.path().join("r.csv");
    let svg = tmp.path().join("r.svg");
    let bench = cdedit(
        tmp.path(),
        &["bench", "--suite", "scaling", "--backend", "mock", "--reps", "2", "--points", "2,4",
          "--out", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap()],
    );
    assert!(bench.status.success(), "{}", String::from_utf8_lossy(&bench.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("axis,value,algorithm,mean_ms,std_ms,reps,backend"));
    assert_eq!(text.lines().count(), 1 + 2 + 2 * 7);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}
