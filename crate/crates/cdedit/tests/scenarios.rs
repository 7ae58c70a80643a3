use cdedit::scenario::{parse_script, run_scenario, ScenarioError, ScenarioOptions, StepRecord};
use cdedit_core::audit::{CredibilityLevel, Settlement, Verdict, ViolationKind};
use cdedit_core::bilinear::{Bls12, MockBls};
use serde_json::json;

const BASIC: &str = include_str!("../scenarios/basic_edit.json");
const OVERCOUNT: &str = include_str!("../scenarios/overcount.json");

fn options(seed: u64) -> ScenarioOptions {
    ScenarioOptions { seed, ..ScenarioOptions::default() }
}

#[test]
fn basic_flow_on_both_backends() {
    let script = parse_script(BASIC).unwrap();
    let real = run_scenario::<Bls12>(&script, &options(1)).unwrap();
    let mock = run_scenario::<MockBls>(&script, &options(1)).unwrap();
    for t in [&real, &mock] {
        assert!(t.chain_valid);
        assert_eq!(t.audits.len(), 2);
        assert!(t.audits.iter().all(|a| a.verdict == Verdict::Clean));
        let failed: Vec<_> = t.steps.iter().filter(|s| !s.ok).map(|s| s.index).collect();
        assert_eq!(failed, vec![13]);
        assert_eq!(t.steps[10].detail["uses_remaining"], json!(0));
    }
    assert_eq!(real.backend, "BLS12-381");
    assert!(mock.backend.starts_with("mock-"));
    // Clean audit of a used-up one-time token returns the deposit.
    assert_eq!(real.audits[0].settlement, Settlement::Refund { holder: "bob".into(), amount: 1 });
}

#[test]
fn rogue_second_edit_is_classified_as_over_count() {
    let script = parse_script(OVERCOUNT).unwrap();
    let t = run_scenario::<MockBls>(&script, &options(2)).unwrap();
    let record = &t.audits[0];
    assert_eq!(record.verdict, Verdict::Violation(ViolationKind::OverCount));
    assert_eq!(record.level_before, Some(CredibilityLevel::ManyTx));
    assert_eq!(record.level_after, Some(CredibilityLevel::OneTx));
    assert_eq!(record.settlement, Settlement::Slash { reporter: "alice".into(), to_reporter: 0, burned: 1 });
    let last = t.steps.last().unwrap();
    assert!(!last.ok);
    assert!(last.detail["error"].as_str().unwrap().contains("level"));
}

#[test]
fn transcripts_are_reproducible() {
    let script = parse_script(BASIC).unwrap();
    let a = run_scenario::<MockBls>(&script, &options(9)).unwrap();
    let b = run_scenario::<MockBls>(&script, &options(9)).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());
    assert_eq!(
        serde_json::to_string(&a.without_timings()).unwrap(),
        serde_json::to_string(&b.without_timings()).unwrap()
    );
    let c = run_scenario::<MockBls>(&script, &options(10)).unwrap();
    assert_eq!(c.steps.len(), a.steps.len());
}

#[test]
fn unexpected_outcomes_stop_the_run() {
    let mut script = parse_script(BASIC).unwrap();
    script[13].expect_error = false;
    let err = run_scenario::<MockBls>(&script, &options(1)).unwrap_err();
    assert!(matches!(err, ScenarioError::Step { step: 13, op: "edit_tx", .. }), "{err}");
    script[13].expect_error = true;
    script[9].expect_error = true;
    assert_eq!(
        run_scenario::<MockBls>(&script, &options(1)).unwrap_err(),
        ScenarioError::UnexpectedSuccess { step: 9, op: "verify_token" }
    );
}

#[test]
fn malformed_scripts_are_rejected() {
    assert!(matches!(parse_script(r#"[{"op": "fly"}]"#), Err(ScenarioError::Parse(_))));
    assert!(matches!(parse_script(r#"{"op": "validate"}"#), Err(ScenarioError::Parse(_))));
}

#[test]
fn thirty_two_many_use_edits() {
    let mut steps = vec![
        json!({"op": "register_owner", "name": "o"}),
        json!({"op": "register_modifier", "name": "m", "attributes": ["A"], "level": "m_nB"}),
        json!({"op": "keygen", "modifier": "m"}),
        json!({"op": "add_tx", "owner": "o", "payload": "v0", "policy": "A", "as": "t"}),
        json!({"op": "mine"}),
        json!({"op": "request_token", "modifier": "m", "type": "tx", "n": 32, "index": "t", "as": "k"}),
    ];
    for i in 1..=32 {
        steps.push(json!({"op": "edit_tx", "modifier": "m", "token": "k", "tx": "t", "payload": format!("v{i}")}));
        steps.push(json!({"op": "audit", "reporter": "o"}));
    }
    steps.push(json!({"op": "edit_tx", "modifier": "m", "token": "k", "tx": "t", "payload": "v33", "expect_error": true}));
    steps.push(json!({"op": "validate"}));
    let script: Vec<StepRecord> = serde_json::from_value(json!(steps)).unwrap();
    let t = run_scenario::<MockBls>(&script, &options(3)).unwrap();
    assert_eq!(t.audits.len(), 32);
    assert!(t.audits.iter().all(|a| a.verdict.is_clean()));
    assert!(t.audits[..31].iter().all(|a| a.settlement == Settlement::Held));
    assert_eq!(t.audits[31].settlement, Settlement::Refund { holder: "m".into(), amount: 32 });
    assert!(t.chain_valid);
}
