//! Fixture-replay tests for the chat-completion bridge. Nothing here touches
//! the network; the one transport-failure test points at a closed local port.

use std::collections::BTreeMap;
use std::sync::Arc;

use crbforge_core::pipeline::{
    analyze, run_derivation, DeterministicPatcher, ErrorKind, Injection, PlanOp, PlanStep,
    Planner, StepError, StepParams, StepStatus, TemplatePlanner,
};
use crbforge_core::scenario::{builtin, builtin_source, load_scenario, ScenarioSpec};
use crbforge_llm::{
    llm_patch, llm_plan, BridgeConfig, BridgeError, HttpTransport, LlmPlanner, ReplayTransport,
};

fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/llm")
}

fn cfg() -> BridgeConfig {
    BridgeConfig {
        endpoint: "replay://fixtures".into(),
        model: "recorded".into(),
        api_key_env: "CRBFORGE_LLM_API_KEY".into(),
        timeout_secs: 5,
        max_retries: 1,
        temperature: 0.0,
    }
}

fn renamed_builtin(new_id: &str) -> ScenarioSpec {
    let mut doc: serde_json::Value =
        serde_json::from_str(builtin_source("S01").unwrap()).unwrap();
    doc["id"] = serde_json::json!(new_id);
    load_scenario(&doc.to_string()).unwrap()
}

#[test]
fn recorded_planner_reply_reproduces_template_plan() {
    let spec = builtin("S01").unwrap();
    let ws = analyze(&spec);
    let transport = ReplayTransport::new(fixtures_dir());
    let plan = llm_plan(&spec, &ws, &cfg(), &transport).expect("replay plan");
    let template = TemplatePlanner.plan(&spec, &ws).unwrap();
    assert_eq!(plan, template);
}

#[test]
fn replayed_plan_drives_a_full_derivation() {
    let spec = builtin("S01").unwrap();
    let planner = LlmPlanner::new(cfg(), Arc::new(ReplayTransport::new(fixtures_dir())));
    let result = run_derivation(
        &spec,
        &planner,
        &DeterministicPatcher,
        &Injection::default(),
        7,
        false,
    );
    assert_eq!(result.trace.planner_id, "llm");
    assert!(result
        .trace
        .steps
        .iter()
        .all(|s| s.status == StepStatus::Ok));
    assert_eq!(result.derived.len(), spec.targets.len());
}

#[test]
fn unknown_op_is_plan_invalid() {
    let spec = renamed_builtin("BADOP");
    let ws = analyze(&spec);
    let transport = ReplayTransport::new(fixtures_dir());
    match llm_plan(&spec, &ws, &cfg(), &transport) {
        Err(BridgeError::PlanInvalid { message, .. }) => {
            assert!(
                message.contains("integrate") || message.contains("unknown variant"),
                "unexpected message: {message}"
            );
        }
        other => panic!("expected PlanInvalid, got {other:?}"),
    }
}

fn failed_simplify() -> (PlanStep, StepError) {
    (
        PlanStep {
            index: 12,
            op: PlanOp::Simplify,
            inputs: vec!["crb_theta_raw".into()],
            params: StepParams::default(),
            output: "crb_theta".into(),
        },
        StepError::new(ErrorKind::ExpansionBlowup, "cap 16 exceeded"),
    )
}

#[test]
fn recorded_patch_reply_replaces_failed_step() {
    let spec = builtin("S01").unwrap();
    let mut ws = analyze(&spec);
    ws.insert(
        "crb_theta_raw".into(),
        crbforge_core::pipeline::Value::Scalar(crbforge_core::expr::Expr::one()),
    );
    let (failed, error) = failed_simplify();
    let transport = ReplayTransport::new(fixtures_dir());
    let steps = llm_patch(&spec, &ws, &failed, &error, &cfg(), &transport).expect("patch");
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].output, "crb_theta");
    assert!(steps[0].params.strict);
}

#[test]
fn empty_patch_reply_is_rejected() {
    let spec = renamed_builtin("EMPTY");
    let mut ws = analyze(&spec);
    ws.insert(
        "crb_theta_raw".into(),
        crbforge_core::pipeline::Value::Scalar(crbforge_core::expr::Expr::one()),
    );
    let (failed, error) = failed_simplify();
    let transport = ReplayTransport::new(fixtures_dir());
    match llm_patch(&spec, &ws, &failed, &error, &cfg(), &transport) {
        Err(BridgeError::PlanInvalid { message, .. }) => {
            assert!(message.contains("empty"), "message: {message}");
        }
        other => panic!("expected PlanInvalid, got {other:?}"),
    }
}

#[test]
fn patch_reading_undefined_name_is_rejected() {
    let spec = renamed_builtin("UNDEF");
    let ws = analyze(&spec);
    let (failed, error) = failed_simplify();
    let transport = ReplayTransport::new(fixtures_dir());
    match llm_patch(&spec, &ws, &failed, &error, &cfg(), &transport) {
        Err(BridgeError::PlanInvalid { message, .. }) => {
            assert!(message.contains("ghost_value"), "message: {message}");
        }
        other => panic!("expected PlanInvalid, got {other:?}"),
    }
}

#[test]
fn unreachable_endpoint_surfaces_transport_after_retries() {
    let spec = builtin("S01").unwrap();
    let ws = analyze(&spec);
    let mut config = cfg();
    config.endpoint = "http://127.0.0.1:9/v1/chat/completions".into();
    config.api_key_env = "CRBFORGE_TEST_KEY_TRANSPORT".into();
    config.timeout_secs = 1;
    std::env::set_var("CRBFORGE_TEST_KEY_TRANSPORT", "sk-unused");
    let transport = HttpTransport::new(config.clone()).unwrap();
    match llm_plan(&spec, &ws, &config, &transport) {
        Err(BridgeError::Transport(_)) => {}
        other => panic!("expected Transport, got {other:?}"),
    }
}

#[test]
fn missing_api_key_is_auth_missing() {
    let spec = builtin("S01").unwrap();
    let ws = analyze(&spec);
    let mut config = cfg();
    config.endpoint = "http://127.0.0.1:9/v1/chat/completions".into();
    config.api_key_env = "CRBFORGE_TEST_KEY_ABSENT".into();
    std::env::remove_var("CRBFORGE_TEST_KEY_ABSENT");
    let transport = HttpTransport::new(config.clone()).unwrap();
    match llm_plan(&spec, &ws, &config, &transport) {
        Err(BridgeError::AuthMissing(var)) => assert_eq!(var, "CRBFORGE_TEST_KEY_ABSENT"),
        other => panic!("expected AuthMissing, got {other:?}"),
    }
}

#[test]
fn raw_replies_in_errors_are_scrubbed() {
    let spec = renamed_builtin("SECRET");
    let ws = analyze(&spec);
    let mut config = cfg();
    config.api_key_env = "CRBFORGE_TEST_KEY_SECRET".into();
    std::env::set_var("CRBFORGE_TEST_KEY_SECRET", "sk-test-secret-123");
    let transport = ReplayTransport::new(fixtures_dir());
    match llm_plan(&spec, &ws, &config, &transport) {
        Err(BridgeError::PlanInvalid { raw_reply, .. }) => {
            let raw = raw_reply.expect("raw reply attached");
            assert!(!raw.contains("sk-test-secret-123"), "secret leaked: {raw}");
            assert!(raw.contains("[redacted]"));
        }
        other => panic!("expected PlanInvalid, got {other:?}"),
    }
}

#[test]
fn trace_from_llm_run_serializes_without_key_material() {
    std::env::set_var("CRBFORGE_LLM_API_KEY", "sk-live-key-do-not-leak");
    let spec = builtin("S01").unwrap();
    let planner = LlmPlanner::new(cfg(), Arc::new(ReplayTransport::new(fixtures_dir())));
    let result = run_derivation(
        &spec,
        &planner,
        &DeterministicPatcher,
        &Injection::default(),
        7,
        false,
    );
    let json = result.trace.to_json();
    assert!(!json.contains("sk-live-key-do-not-leak"));
    let _ = BTreeMap::from([(0, 0)]);
}
