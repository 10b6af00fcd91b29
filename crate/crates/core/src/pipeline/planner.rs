//! Planner interface and the deterministic template planner.

use crate::scenario::{value_name, ScenarioSpec, TargetKind};

use super::plan::{Plan, PlanInvalid, PlanOp, PlanStep, StepParams};
use super::workspace::Workspace;

pub trait Planner: Send + Sync {
    fn id(&self) -> &str;
    fn plan(&self, spec: &ScenarioSpec, ws: &Workspace<'_>) -> Result<Plan, PlanInvalid>;
}

/// Emits the fixed derivation template: per-parameter differentiation,
/// pairwise products, per-index summation, FIM assembly, determinant,
/// per-parameter CRBs, and a final simplify per CRB.
#[derive(Debug, Default, Clone)]
pub struct TemplatePlanner;

impl TemplatePlanner {
    /// Workspace value name of the phase derivative for a parameter: the
    /// matching target name when one is declared, a generic name otherwise.
    fn deriv_name(spec: &ScenarioSpec, param: crate::expr::SymbolId) -> String {
        for (target, kind) in &spec.target_kinds {
            if *kind == TargetKind::PhaseDerivative(param) {
                return value_name(target);
            }
        }
        format!("d_phi_d_{}", spec.table.name(param).to_ascii_lowercase())
    }

    fn crb_name(spec: &ScenarioSpec, param: crate::expr::SymbolId) -> String {
        for (target, kind) in &spec.target_kinds {
            if *kind == TargetKind::Crb(param) {
                return value_name(target);
            }
        }
        format!("crb_{}", spec.table.name(param).to_ascii_lowercase())
    }
}

impl Planner for TemplatePlanner {
    fn id(&self) -> &str {
        "template"
    }

    fn plan(&self, spec: &ScenarioSpec, _ws: &Workspace<'_>) -> Result<Plan, PlanInvalid> {
        let p = spec.dim();
        let mut steps: Vec<PlanStep> = Vec::new();
        let mut push = |op: PlanOp, inputs: Vec<String>, params: StepParams, output: String| {
            let index = steps.len();
            steps.push(PlanStep {
                index,
                op,
                inputs,
                params,
                output,
            });
        };

        let deriv_names: Vec<String> = spec
            .params
            .iter()
            .map(|&param| Self::deriv_name(spec, param))
            .collect();
        for (i, &param) in spec.params.iter().enumerate() {
            push(
                PlanOp::DifferentiatePoly,
                vec!["phi".to_string()],
                StepParams {
                    wrt: Some(spec.table.name(param).to_string()),
                    ..Default::default()
                },
                deriv_names[i].clone(),
            );
        }

        let lc = |s: crate::expr::SymbolId| spec.table.name(s).to_ascii_lowercase();
        let mut sum_names = Vec::new();
        for i in 0..p {
            for j in i..p {
                let prod = format!("prod_{}_{}", lc(spec.params[i]), lc(spec.params[j]));
                push(
                    PlanOp::MulPoly,
                    vec![deriv_names[i].clone(), deriv_names[j].clone()],
                    StepParams::default(),
                    prod.clone(),
                );
                sum_names.push((i, j, prod));
            }
        }

        // Iterated single sums over every phase index, innermost last.
        let indices = spec.phase.indices().to_vec();
        for (i, j, prod) in &mut sum_names {
            let mut current = prod.clone();
            for (axis, idx) in indices.iter().enumerate() {
                let length = spec.index_ranges[idx];
                let is_last = axis + 1 == indices.len();
                let output = if is_last {
                    format!("s_{}_{}", lc(spec.params[*i]), lc(spec.params[*j]))
                } else {
                    format!("{current}_sum_{}", lc(*idx))
                };
                push(
                    PlanOp::SumIndex,
                    vec![current.clone()],
                    StepParams {
                        over: Some(spec.table.name(*idx).to_string()),
                        length: Some(spec.table.name(length).to_string()),
                        ..Default::default()
                    },
                    output.clone(),
                );
                current = output;
            }
            *prod = current;
        }

        let mut assemble_inputs: Vec<String> =
            sum_names.iter().map(|(_, _, name)| name.clone()).collect();
        assemble_inputs.push("gain_sq".to_string());
        assemble_inputs.push("noise".to_string());
        push(
            PlanOp::AssembleFim,
            assemble_inputs,
            StepParams {
                dim: Some(p),
                ..Default::default()
            },
            "fim".to_string(),
        );

        let wants_det = p >= 2
            || spec
                .target_kinds
                .values()
                .any(|k| *k == TargetKind::Determinant);
        if wants_det {
            push(
                PlanOp::Determinant,
                vec!["fim".to_string()],
                StepParams::default(),
                "det_f".to_string(),
            );
        }

        for (i, &param) in spec.params.iter().enumerate() {
            push(
                PlanOp::Crb,
                vec!["fim".to_string()],
                StepParams {
                    param_index: Some(i),
                    ..Default::default()
                },
                format!("crb_{}_raw", lc(param)),
            );
        }
        for &param in &spec.params {
            push(
                PlanOp::Simplify,
                vec![format!("crb_{}_raw", lc(param))],
                StepParams::default(),
                Self::crb_name(spec, param),
            );
        }

        Ok(steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::plan::validate_plan;
    use crate::pipeline::workspace::analyze;
    use crate::scenario::{builtin, load_scenario};

    #[test]
    fn s01_template_plan_has_fourteen_steps() {
        let spec = builtin("S01").unwrap();
        let ws = analyze(&spec);
        let plan = TemplatePlanner.plan(&spec, &ws).unwrap();
        assert_eq!(plan.len(), 14);
        let count = |op: PlanOp| plan.iter().filter(|s| s.op == op).count();
        assert_eq!(count(PlanOp::DifferentiatePoly), 2);
        assert_eq!(count(PlanOp::MulPoly), 3);
        assert_eq!(count(PlanOp::SumIndex), 3);
        assert_eq!(count(PlanOp::AssembleFim), 1);
        assert_eq!(count(PlanOp::Determinant), 1);
        assert_eq!(count(PlanOp::Crb), 2);
        assert_eq!(count(PlanOp::Simplify), 2);
        validate_plan(&plan, &ws.seeded_names()).unwrap();
    }

    #[test]
    fn single_parameter_plan_has_six_steps() {
        let minimal = r#"{
            "id": "MIN", "description": "",
            "symbols": [
                {"name": "theta", "kind": "parameter"},
                {"name": "k", "kind": "structural_constant", "positive": true},
                {"name": "m", "kind": "index"},
                {"name": "M", "kind": "structural_constant", "positive": true},
                {"name": "sigma_sq", "kind": "structural_constant", "positive": true}
            ],
            "phase_text": "m*k*theta",
            "params": ["theta"],
            "gain_sq_text": "1",
            "noise_text": "sigma_sq",
            "index_ranges": {"m": "M"},
            "targets": ["crb_theta"],
            "sampling": {
                "theta": [0.2, 1.2], "k": [0.5, 2.0],
                "M": {"choices": [4, 8]}, "sigma_sq": [0.5, 2.0]
            }
        }"#;
        let spec = load_scenario(minimal).unwrap();
        let ws = analyze(&spec);
        let plan = TemplatePlanner.plan(&spec, &ws).unwrap();
        assert_eq!(plan.len(), 6);
    }

    #[test]
    fn every_builtin_template_plan_validates() {
        for spec in crate::scenario::builtin_suite() {
            let ws = analyze(&spec);
            let plan = TemplatePlanner.plan(&spec, &ws).unwrap();
            validate_plan(&plan, &ws.seeded_names()).unwrap();
        }
    }

    #[test]
    fn two_index_scenario_sums_each_axis() {
        let spec = builtin("S04").unwrap();
        let ws = analyze(&spec);
        let plan = TemplatePlanner.plan(&spec, &ws).unwrap();
        let sums = plan
            .iter()
            .filter(|s| s.op == PlanOp::SumIndex)
            .count();
        // 6 entries, two axes each.
        assert_eq!(sums, 12);
        assert_eq!(plan.len(), 3 + 6 + 12 + 1 + 1 + 3 + 3);
    }
}
