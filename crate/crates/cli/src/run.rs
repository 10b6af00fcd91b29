//! Shared derivation-plus-validation runner used by `derive` and `bench`.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};

use crbforge_core::pipeline::{
    run_derivation, DerivationTrace, DeterministicPatcher, Patcher, Planner, StepStatus,
    TemplatePlanner,
};
use crbforge_core::scenario::{builtin, load_scenario, ScenarioSpec};
use crbforge_core::validate::{validate_all, ValidateError};
use crbforge_llm::{BridgeConfig, HttpTransport, LlmPatcher, LlmPlanner, ReplayTransport, Transport};

use crate::settings::Settings;

/// Load a scenario from a built-in id or a file path.
pub fn load_scenario_ref(reference: &str) -> Result<ScenarioSpec> {
    if let Some(spec) = builtin(reference) {
        return Ok(spec);
    }
    let path = Path::new(reference);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("scenario `{reference}` is not a built-in id or readable file"))?;
    load_scenario(&text).with_context(|| format!("loading scenario {reference}"))
}

pub struct Roles {
    pub planner: Box<dyn Planner>,
    pub patcher: Box<dyn Patcher>,
}

pub fn build_roles(settings: &Settings) -> Result<Roles> {
    match settings.planner.as_str() {
        "template" => Ok(Roles {
            planner: Box::new(TemplatePlanner),
            patcher: Box::new(DeterministicPatcher),
        }),
        "llm" => {
            let cfg = BridgeConfig {
                endpoint: settings
                    .endpoint
                    .clone()
                    .unwrap_or_else(|| "replay://fixtures".to_string()),
                model: settings.model.clone().unwrap_or_else(|| "recorded".into()),
                api_key_env: crbforge_llm::DEFAULT_API_KEY_ENV.to_string(),
                timeout_secs: settings.timeout.unwrap_or(60),
                max_retries: 2,
                temperature: 0.0,
            };
            let transport: Arc<dyn Transport> = match &settings.fixtures {
                Some(dir) => Arc::new(ReplayTransport::new(dir.clone())),
                None => {
                    anyhow::ensure!(
                        settings.endpoint.is_some(),
                        "llm planner needs --endpoint or --fixtures"
                    );
                    Arc::new(HttpTransport::new(cfg.clone())?)
                }
            };
            Ok(Roles {
                planner: Box::new(LlmPlanner::new(cfg.clone(), transport.clone())),
                patcher: Box::new(LlmPatcher::new(cfg, transport)),
            })
        }
        other => anyhow::bail!("unknown planner `{other}`"),
    }
}

pub struct RunOutcome {
    pub trace: DerivationTrace,
    pub pass: bool,
    /// Human-readable failure summary when `pass` is false.
    pub summary: String,
}

/// Derive one scenario and validate the results.
pub fn run_scenario(spec: &ScenarioSpec, settings: &Settings, roles: &Roles) -> RunOutcome {
    let result = run_derivation(
        spec,
        roles.planner.as_ref(),
        roles.patcher.as_ref(),
        &settings.injection,
        settings.seed,
        settings.timings,
    );
    let mut trace = result.trace;

    let abandoned = trace
        .steps
        .iter()
        .any(|s| s.status == StepStatus::Abandoned);
    let complete = result.derived.len() == spec.targets.len();

    let mut pass = !abandoned && complete;
    let mut summary = String::new();
    if abandoned {
        summary = "derivation abandoned a step".to_string();
    } else if !complete {
        summary = format!(
            "derived {} of {} targets",
            result.derived.len(),
            spec.targets.len()
        );
    }

    match validate_all(
        &result.derived,
        spec,
        settings.points,
        settings.tol,
        settings.seed,
    ) {
        Ok(report) => {
            for (target, t) in &report.targets {
                if let Some(v) = t.symbolic {
                    trace.verdicts.insert(target.clone(), v.to_string());
                }
            }
            if !report.pass {
                pass = false;
                if summary.is_empty() {
                    let offenders: Vec<String> = report
                        .targets
                        .iter()
                        .filter(|(_, t)| {
                            t.max_rel_err > settings.tol
                                || t.symbolic.map(|v| !v.passes()).unwrap_or(false)
                        })
                        .map(|(name, t)| format!("{name} (max rel err {:.2e})", t.max_rel_err))
                        .collect();
                    summary = format!("validation failed: {}", offenders.join(", "));
                }
            }
            trace.validation = Some(report);
        }
        Err(e @ ValidateError::AllPointsSkipped(_)) => {
            pass = false;
            summary = e.to_string();
        }
        Err(e) => {
            pass = false;
            summary = format!("validation error: {e}");
        }
    }
    trace.failure_class = trace.compute_failure_class();
    RunOutcome {
        trace,
        pass,
        summary,
    }
}

/// Write a trace file under the output directory; returns the path.
pub fn write_trace(trace: &DerivationTrace, out_dir: &Path) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let name = format!(
        "trace_{}_{}_{}.json",
        trace.scenario_id, trace.planner_id, trace.seed
    );
    let path = out_dir.join(name);
    std::fs::write(&path, trace.to_json()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
