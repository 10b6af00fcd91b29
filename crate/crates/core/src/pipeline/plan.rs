//! Straight-line derivation plans in SSA form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The closed operation vocabulary. Plans — template-generated or
/// model-generated — may only use these ops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOp {
    Define,
    Differentiate,
    DifferentiatePoly,
    MulPoly,
    SumIndex,
    AssembleFim,
    Determinant,
    Crb,
    Simplify,
    Substitute,
    AssertEqual,
}

impl std::fmt::Display for PlanOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PlanOp::Define => "define",
            PlanOp::Differentiate => "differentiate",
            PlanOp::DifferentiatePoly => "differentiate_poly",
            PlanOp::MulPoly => "mul_poly",
            PlanOp::SumIndex => "sum_index",
            PlanOp::AssembleFim => "assemble_fim",
            PlanOp::Determinant => "determinant",
            PlanOp::Crb => "crb",
            PlanOp::Simplify => "simplify",
            PlanOp::Substitute => "substitute",
            PlanOp::AssertEqual => "assert_equal",
        };
        f.write_str(s)
    }
}

/// Op-specific arguments. Unused fields stay `None` and are omitted from the
/// serialized form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    /// differentiate / differentiate_poly: parameter symbol name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrt: Option<String>,
    /// sum_index: index symbol name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over: Option<String>,
    /// sum_index: range-length symbol name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<String>,
    /// crb: parameter position in the model's parameter vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_index: Option<usize>,
    /// assemble_fim: matrix dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// define: expression text in the scenario grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// substitute: symbol name -> expression text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bindings: Option<std::collections::BTreeMap<String, String>>,
    /// Patched steps run strict: fault injection does not apply.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
    /// mul_poly: accumulate term-by-term against the hard table bound
    /// instead of the pessimistic degree pre-check.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub op: PlanOp,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub params: StepParams,
    pub output: String,
}

pub type Plan = Vec<PlanStep>;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid plan: {0}")]
pub struct PlanInvalid(pub String);

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Check SSA discipline: indices are positions, inputs reference seeded or
/// previously defined names, outputs are fresh well-formed names.
pub fn validate_plan(plan: &Plan, seeded: &BTreeSet<String>) -> Result<(), PlanInvalid> {
    let mut defined: BTreeSet<String> = seeded.clone();
    for (pos, step) in plan.iter().enumerate() {
        if step.index != pos {
            return Err(PlanInvalid(format!(
                "step {} carries index {}",
                pos, step.index
            )));
        }
        for input in &step.inputs {
            if !defined.contains(input) {
                return Err(PlanInvalid(format!(
                    "step {} reads undefined name `{}`",
                    pos, input
                )));
            }
        }
        if !valid_name(&step.output) {
            return Err(PlanInvalid(format!(
                "step {} output `{}` is not a valid value name",
                pos, step.output
            )));
        }
        if defined.contains(&step.output) {
            return Err(PlanInvalid(format!(
                "step {} redefines `{}`",
                pos, step.output
            )));
        }
        defined.insert(step.output.clone());
    }
    Ok(())
}

/// Renumber indices after splicing replacement steps into a plan.
pub fn renumber(plan: &mut Plan) {
    for (pos, step) in plan.iter_mut().enumerate() {
        step.index = pos;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(index: usize, inputs: &[&str], output: &str) -> PlanStep {
        PlanStep {
            index,
            op: PlanOp::Simplify,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            params: StepParams::default(),
            output: output.to_string(),
        }
    }

    #[test]
    fn accepts_straight_line_ssa() {
        let seeded: BTreeSet<String> = ["phi".to_string()].into();
        let plan = vec![step(0, &["phi"], "a"), step(1, &["a"], "b")];
        assert!(validate_plan(&plan, &seeded).is_ok());
    }

    #[test]
    fn rejects_undefined_input() {
        let seeded: BTreeSet<String> = BTreeSet::new();
        let plan = vec![step(0, &["ghost"], "a")];
        assert!(validate_plan(&plan, &seeded).is_err());
    }

    #[test]
    fn rejects_redefinition_and_bad_names() {
        let seeded: BTreeSet<String> = ["phi".to_string()].into();
        let plan = vec![step(0, &["phi"], "a"), step(1, &["a"], "a")];
        assert!(validate_plan(&plan, &seeded).is_err());
        let plan = vec![step(0, &["phi"], "BadName")];
        assert!(validate_plan(&plan, &seeded).is_err());
    }

    #[test]
    fn plan_steps_round_trip_through_json() {
        let s = PlanStep {
            index: 3,
            op: PlanOp::SumIndex,
            inputs: vec!["prod_theta_theta".into()],
            params: StepParams {
                over: Some("m".into()),
                length: Some("M".into()),
                ..Default::default()
            },
            output: "s_theta_theta".into(),
        };
        let json = serde_json::to_string(&s).unwrap();
        let back: PlanStep = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
        assert!(json.contains("sum_index"));
        assert!(!json.contains("strict"));
    }
}
