//! The planner/patcher roles backed by a chat transport.

use std::collections::BTreeSet;
use std::sync::Arc;

use crbforge_core::pipeline::{
    validate_plan, PatchError, Patcher, Plan, PlanInvalid, PlanStep, Planner, StepError,
    Workspace,
};
use crbforge_core::scenario::ScenarioSpec;

use crate::config::BridgeConfig;
use crate::prompt::{extract_fenced_block, render_patcher, render_planner};
use crate::protocol::{ChatMessage, ChatRequest, ChatResponse};
use crate::transport::{scrub_secrets, Transport};
use crate::BridgeError;

fn secrets(cfg: &BridgeConfig) -> Vec<String> {
    std::env::var(&cfg.api_key_env).ok().into_iter().collect()
}

/// One prompt/parse/validate round trip with re-prompting on invalid
/// replies. `accept` performs the role-specific validation.
fn converse<T>(
    cfg: &BridgeConfig,
    transport: &dyn Transport,
    initial_prompt: String,
    accept: impl Fn(&str) -> Result<T, String>,
) -> Result<T, BridgeError> {
    let mut messages = vec![ChatMessage::user(initial_prompt)];
    let scrub = secrets(cfg);
    let mut last_err: Option<BridgeError> = None;

    for _attempt in 0..=cfg.max_retries {
        let request = ChatRequest {
            model: cfg.model.clone(),
            messages: messages.clone(),
            temperature: cfg.temperature,
        };
        let raw = match transport.complete(&request) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let content = match serde_json::from_str::<ChatResponse>(&raw) {
            Ok(resp) => match resp.content() {
                Some(c) => c.to_string(),
                None => {
                    last_err = Some(BridgeError::PlanInvalid {
                        message: "response has no choices".into(),
                        raw_reply: Some(scrub_secrets(&raw, &scrub)),
                    });
                    continue;
                }
            },
            Err(e) => {
                last_err = Some(BridgeError::PlanInvalid {
                    message: format!("response is not chat-completion JSON: {e}"),
                    raw_reply: Some(scrub_secrets(&raw, &scrub)),
                });
                continue;
            }
        };
        match accept(&content) {
            Ok(v) => return Ok(v),
            Err(problem) => {
                last_err = Some(BridgeError::PlanInvalid {
                    message: problem.clone(),
                    raw_reply: Some(scrub_secrets(&content, &scrub)),
                });
                // Carry the validation error back for the next attempt.
                messages.push(ChatMessage::assistant(content));
                messages.push(ChatMessage::user(format!(
                    "That reply was rejected: {problem}. Reply again with exactly one fenced \
                     code block containing the corrected JSON array."
                )));
            }
        }
    }
    Err(last_err.unwrap_or_else(|| BridgeError::Transport("no attempts made".into())))
}

fn parse_steps(content: &str) -> Result<Vec<PlanStep>, String> {
    let block = extract_fenced_block(content)?;
    let steps: Vec<PlanStep> =
        serde_json::from_str(&block).map_err(|e| format!("steps do not parse: {e}"))?;
    Ok(steps)
}

/// Ask the model for a full derivation plan and validate it with the same
/// SSA checker deterministic plans go through.
pub fn llm_plan(
    spec: &ScenarioSpec,
    ws: &Workspace<'_>,
    cfg: &BridgeConfig,
    transport: &dyn Transport,
) -> Result<Plan, BridgeError> {
    cfg.validate()?;
    let prompt = render_planner(spec, ws);
    let seeded = ws.seeded_names();
    converse(cfg, transport, prompt, |content| {
        let steps = parse_steps(content)?;
        validate_plan(&steps, &seeded).map_err(|e| e.to_string())?;
        Ok(steps)
    })
}

/// Ask the model for replacement steps for one failed step.
pub fn llm_patch(
    spec: &ScenarioSpec,
    ws: &Workspace<'_>,
    failed: &PlanStep,
    error: &StepError,
    cfg: &BridgeConfig,
    transport: &dyn Transport,
) -> Result<Vec<PlanStep>, BridgeError> {
    cfg.validate()?;
    let prompt = render_patcher(spec, ws, failed, error);
    let defined: BTreeSet<String> = ws.seeded_names();
    let output = failed.output.clone();
    converse(cfg, transport, prompt, move |content| {
        let steps = parse_steps(content)?;
        if steps.is_empty() {
            return Err("empty replacement".to_string());
        }
        if steps.last().map(|s| s.output.as_str()) != Some(output.as_str()) {
            return Err(format!(
                "last replacement must write `{output}`, wrote `{}`",
                steps.last().map(|s| s.output.as_str()).unwrap_or("")
            ));
        }
        // SSA against the live workspace plus intermediate outputs.
        let mut known = defined.clone();
        for step in &steps {
            for input in &step.inputs {
                if !known.contains(input) {
                    return Err(format!("replacement reads undefined `{input}`"));
                }
            }
            known.insert(step.output.clone());
        }
        Ok(steps)
    })
}

/// `Planner` adapter for the pipeline.
pub struct LlmPlanner {
    cfg: BridgeConfig,
    transport: Arc<dyn Transport>,
}

impl LlmPlanner {
    pub fn new(cfg: BridgeConfig, transport: Arc<dyn Transport>) -> LlmPlanner {
        LlmPlanner { cfg, transport }
    }
}

impl Planner for LlmPlanner {
    fn id(&self) -> &str {
        "llm"
    }

    fn plan(&self, spec: &ScenarioSpec, ws: &Workspace<'_>) -> Result<Plan, PlanInvalid> {
        llm_plan(spec, ws, &self.cfg, self.transport.as_ref())
            .map_err(|e| PlanInvalid(e.to_string()))
    }
}

/// `Patcher` adapter for the pipeline.
pub struct LlmPatcher {
    cfg: BridgeConfig,
    transport: Arc<dyn Transport>,
}

impl LlmPatcher {
    pub fn new(cfg: BridgeConfig, transport: Arc<dyn Transport>) -> LlmPatcher {
        LlmPatcher { cfg, transport }
    }
}

impl Patcher for LlmPatcher {
    fn id(&self) -> &str {
        "llm"
    }

    fn patch(
        &self,
        failed: &PlanStep,
        error: &StepError,
        _attempt: u32,
        ws: &Workspace<'_>,
    ) -> Result<Vec<PlanStep>, PatchError> {
        llm_patch(ws.spec, ws, failed, error, &self.cfg, self.transport.as_ref())
            .map_err(|_| PatchError::Exhausted)
    }
}
