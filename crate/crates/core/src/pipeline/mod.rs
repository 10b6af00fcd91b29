//! Four-role derivation pipeline: the analyzer seeds a workspace, a planner
//! emits a straight-line SSA plan, the executor runs steps against the
//! symbolic kernel with step-level verification, and a patcher repairs
//! failures in place. Every run yields a serializable trace.

mod executor;
mod patcher;
mod plan;
mod planner;
mod trace;
mod workspace;

pub use executor::{execute, ExecutionOutcome, Injection, RUN_REVISION_BUDGET, STEP_REVISION_BUDGET};
pub use patcher::{DeterministicPatcher, PatchError, Patcher};
pub use plan::{renumber, validate_plan, Plan, PlanInvalid, PlanOp, PlanStep, StepParams};
pub use planner::{Planner, TemplatePlanner};
pub use trace::{
    classify_failure, DerivationTrace, ErrorKind, FailureClass, StepError, StepRecord,
    StepStatus,
};
pub use workspace::{analyze, value_to_parsed, Value, Workspace};

use std::collections::BTreeMap;
use std::time::Instant;

use crate::expr::Parsed;
use crate::scenario::{value_name, ScenarioSpec, TargetKind};

/// In-memory result of one derivation run: the serializable trace plus the
/// derived values handed to validation.
pub struct RunResult {
    pub trace: DerivationTrace,
    pub derived: BTreeMap<String, Parsed>,
}

/// Collect target outputs from a finished workspace according to the target
/// naming conventions.
fn collect_outputs(
    spec: &ScenarioSpec,
    ws: &Workspace<'_>,
) -> (BTreeMap<String, String>, BTreeMap<String, Parsed>) {
    let mut printed = BTreeMap::new();
    let mut derived = BTreeMap::new();
    for target in &spec.targets {
        let kind = spec.target_kinds[target];
        let value: Option<Parsed> = match kind {
            TargetKind::FimEntry(i, j) => ws
                .get("fim")
                .and_then(Value::as_matrix)
                .map(|f| Parsed::Expr(f.entry(i, j).clone())),
            TargetKind::Determinant => ws
                .get("det_f")
                .and_then(Value::as_scalar)
                .map(|e| Parsed::Expr(e.clone())),
            TargetKind::PhaseDerivative(_) | TargetKind::Crb(_) => ws
                .get(&value_name(target))
                .and_then(value_to_parsed),
        };
        if let Some(v) = value {
            let text = match &v {
                Parsed::Expr(e) => crate::expr::print(e, &spec.table),
                Parsed::Poly(p) => p.print(&spec.table),
            };
            printed.insert(target.clone(), text);
            derived.insert(target.clone(), v);
        }
    }
    (printed, derived)
}

/// Analyze, plan, execute, and collect outputs for one scenario.
pub fn run_derivation(
    spec: &ScenarioSpec,
    planner: &dyn Planner,
    patcher: &dyn Patcher,
    injection: &Injection,
    seed: u64,
    capture_timing: bool,
) -> RunResult {
    let started = Instant::now();
    let mut ws = analyze(spec);

    let planned = planner
        .plan(spec, &ws)
        .and_then(|plan| validate_plan(&plan, &ws.seeded_names()).map(|()| plan));

    let mut trace = DerivationTrace {
        scenario_id: spec.id.clone(),
        planner_id: planner.id().to_string(),
        seed,
        steps: Vec::new(),
        outputs: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        total_revisions: 0,
        failure_class: None,
        validation: None,
        wall_micros: None,
    };

    let derived = match planned {
        Ok(plan) => {
            let outcome = execute(&plan, &mut ws, patcher, injection, seed, capture_timing);
            trace.steps = outcome.records;
            trace.total_revisions = outcome.total_revisions;
            let (printed, derived) = collect_outputs(spec, &ws);
            trace.outputs = printed;
            derived
        }
        Err(e) => {
            trace.steps = vec![StepRecord {
                index: 0,
                op: PlanOp::Define,
                output: String::new(),
                status: StepStatus::Abandoned,
                error: Some(StepError::new(ErrorKind::PlanInvalid, e.to_string())),
                failure_class: Some(FailureClass::NoValidOutput),
                revisions: 0,
                elapsed_micros: None,
            }];
            BTreeMap::new()
        }
    };

    trace.failure_class = trace.compute_failure_class();
    if capture_timing {
        trace.wall_micros = Some(started.elapsed().as_micros().min(u128::from(u64::MAX)) as u64);
    }
    RunResult { trace, derived }
}
