//! Versioned prompt templates rendered by placeholder substitution.

use crbforge_core::pipeline::{PlanStep, StepError, Workspace};
use crbforge_core::scenario::ScenarioSpec;

pub const PLANNER_TEMPLATE: &str = include_str!("../prompts/planner_v1.txt");
pub const PATCHER_TEMPLATE: &str = include_str!("../prompts/patcher_v1.txt");

const OP_VOCABULARY: &str = "define, differentiate, differentiate_poly, mul_poly, sum_index, \
                             assemble_fim, determinant, crb, simplify, substitute, assert_equal";

fn fill(template: &str, pairs: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

fn symbol_listing(spec: &ScenarioSpec) -> String {
    spec.table
        .iter()
        .map(|(_, info)| format!("- {} ({:?})", info.name, info.kind))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_planner(spec: &ScenarioSpec, ws: &Workspace<'_>) -> String {
    fill(
        PLANNER_TEMPLATE,
        &[
            ("scenario_id", spec.id.clone()),
            (
                "workspace",
                ws.names().cloned().collect::<Vec<_>>().join(", "),
            ),
            ("symbols", symbol_listing(spec)),
            ("phase", spec.phase.print(&spec.table)),
            ("targets", spec.targets.join(", ")),
            ("ops", OP_VOCABULARY.to_string()),
        ],
    )
}

pub fn render_patcher(
    spec: &ScenarioSpec,
    ws: &Workspace<'_>,
    failed: &PlanStep,
    error: &StepError,
) -> String {
    fill(
        PATCHER_TEMPLATE,
        &[
            ("scenario_id", spec.id.clone()),
            (
                "failed_step",
                serde_json::to_string_pretty(failed).unwrap_or_default(),
            ),
            ("error", format!("{:?}: {}", error.kind, error.message)),
            (
                "workspace",
                ws.names().cloned().collect::<Vec<_>>().join(", "),
            ),
            ("output", failed.output.clone()),
            ("ops", OP_VOCABULARY.to_string()),
        ],
    )
}

/// Extract the single fenced code block from a model reply.
pub fn extract_fenced_block(reply: &str) -> Result<String, String> {
    let mut blocks = Vec::new();
    let mut in_block = false;
    let mut current = String::new();
    for line in reply.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            if in_block {
                blocks.push(current.clone());
                current.clear();
                in_block = false;
            } else {
                in_block = true;
            }
            continue;
        }
        if in_block {
            current.push_str(line);
            current.push('\n');
        }
    }
    if in_block {
        return Err("unterminated fenced block".to_string());
    }
    match blocks.len() {
        0 => Err("reply contains no fenced block".to_string()),
        1 => Ok(blocks.pop().unwrap()),
        n => Err(format!("reply contains {n} fenced blocks, expected exactly one")),
    }
}
