//! Step records, failure taxonomy, and the serialized derivation trace.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::KernelError;
use crate::expr::RatioDiagnostic;

use super::plan::PlanOp;

/// Root-cause categories for derivation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    SummationClosedForm,
    IncompleteDerivation,
    ConstantOrSign,
    ModelingMismatch,
    FimFormulation,
    NoValidOutput,
}

impl FailureClass {
    pub const ALL: [FailureClass; 6] = [
        FailureClass::SummationClosedForm,
        FailureClass::IncompleteDerivation,
        FailureClass::ConstantOrSign,
        FailureClass::ModelingMismatch,
        FailureClass::FimFormulation,
        FailureClass::NoValidOutput,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FailureClass::SummationClosedForm => "summation_closed_form",
            FailureClass::IncompleteDerivation => "incomplete_derivation",
            FailureClass::ConstantOrSign => "constant_or_sign",
            FailureClass::ModelingMismatch => "modeling_mismatch",
            FailureClass::FimFormulation => "fim_formulation",
            FailureClass::NoValidOutput => "no_valid_output",
        }
    }
}

/// Machine identifier of a step failure cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Syntax,
    UnknownSymbol,
    DegreeOverflow,
    ExpansionBlowup,
    UnboundSymbol,
    NonFiniteResult,
    DivisionByZero,
    ExponentOverflow,
    IndexDifferentiation,
    MissingIndex,
    ExponentOutOfTable,
    NonPolynomialIndex,
    SingularFim,
    /// A rewrite changed the value of an expression (step self-check).
    ValueMismatch,
    /// assert_equal found the two sides unequal.
    AssertNotEqual,
    PlanInvalid,
    WrongValueKind,
    MissingInput,
}

impl From<&KernelError> for ErrorKind {
    fn from(e: &KernelError) -> Self {
        match e {
            KernelError::Syntax { .. } => ErrorKind::Syntax,
            KernelError::UnknownSymbol(_) => ErrorKind::UnknownSymbol,
            KernelError::DegreeOverflow { .. } => ErrorKind::DegreeOverflow,
            KernelError::ExpansionBlowup { .. } => ErrorKind::ExpansionBlowup,
            KernelError::UnboundSymbol(_) => ErrorKind::UnboundSymbol,
            KernelError::NonFiniteResult(_) => ErrorKind::NonFiniteResult,
            KernelError::DivisionByZero => ErrorKind::DivisionByZero,
            KernelError::ExponentOverflow => ErrorKind::ExponentOverflow,
            KernelError::IndexDifferentiation(_) => ErrorKind::IndexDifferentiation,
            KernelError::MissingIndex(_) => ErrorKind::MissingIndex,
            KernelError::ExponentOutOfTable(_) => ErrorKind::ExponentOutOfTable,
            KernelError::NonPolynomialIndex(_) => ErrorKind::NonPolynomialIndex,
            KernelError::SingularFim => ErrorKind::SingularFim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioDiagnostic>,
}

impl StepError {
    pub fn from_kernel(e: &KernelError) -> StepError {
        StepError {
            kind: ErrorKind::from(e),
            message: e.to_string(),
            ratio: None,
        }
    }

    pub fn new(kind: ErrorKind, message: impl Into<String>) -> StepError {
        StepError {
            kind,
            message: message.into(),
            ratio: None,
        }
    }
}

/// Total mapping from (failure, operation) to the taxonomy.
pub fn classify_failure(error: &StepError, op: PlanOp) -> FailureClass {
    use ErrorKind::*;
    match (error.kind, op) {
        (ExponentOutOfTable | MissingIndex, PlanOp::SumIndex) => {
            FailureClass::SummationClosedForm
        }
        (_, PlanOp::AssembleFim) => FailureClass::FimFormulation,
        (SingularFim, _) => FailureClass::FimFormulation,
        (ValueMismatch | AssertNotEqual, _) if error.ratio.is_some() => {
            FailureClass::ConstantOrSign
        }
        (ExpansionBlowup | DegreeOverflow | ExponentOutOfTable | MissingIndex, _) => {
            FailureClass::SummationClosedForm
        }
        (
            UnknownSymbol | UnboundSymbol | IndexDifferentiation | NonPolynomialIndex | Syntax,
            _,
        ) => FailureClass::ModelingMismatch,
        _ => FailureClass::IncompleteDerivation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    Failed,
    PatchedOk,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub op: PlanOp,
    pub output: String,
    pub status: StepStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<StepError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_class: Option<FailureClass>,
    pub revisions: u32,
    /// Populated only when timing capture is requested; omitted by default
    /// so traces are byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_micros: Option<u64>,
}

/// Serialized record of one derivation run. The field names are the trace
/// file contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub scenario_id: String,
    pub planner_id: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    /// target name -> printed closed form.
    pub outputs: BTreeMap<String, String>,
    /// target name -> symbolic verification verdict (filled after
    /// validation).
    pub verdicts: BTreeMap<String, String>,
    pub total_revisions: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_class: Option<FailureClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<crate::validate::ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_micros: Option<u64>,
}

impl DerivationTrace {
    /// Primary failure class of the run, if any step (or the run itself)
    /// failed: empty outputs dominate, then abandonment, then the first
    /// per-step classification.
    pub fn compute_failure_class(&self) -> Option<FailureClass> {
        if self.outputs.is_empty() && !self.steps.is_empty() {
            return Some(FailureClass::NoValidOutput);
        }
        if self
            .steps
            .iter()
            .any(|s| s.status == StepStatus::Abandoned)
        {
            return Some(FailureClass::IncompleteDerivation);
        }
        self.steps.iter().find_map(|s| s.failure_class)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<DerivationTrace, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_total_over_kinds_and_ops() {
        use ErrorKind::*;
        let kinds = [
            Syntax,
            UnknownSymbol,
            DegreeOverflow,
            ExpansionBlowup,
            UnboundSymbol,
            NonFiniteResult,
            DivisionByZero,
            ExponentOverflow,
            IndexDifferentiation,
            MissingIndex,
            ExponentOutOfTable,
            NonPolynomialIndex,
            SingularFim,
            ValueMismatch,
            AssertNotEqual,
            PlanInvalid,
            WrongValueKind,
            MissingInput,
        ];
        let ops = [
            PlanOp::Define,
            PlanOp::Differentiate,
            PlanOp::DifferentiatePoly,
            PlanOp::MulPoly,
            PlanOp::SumIndex,
            PlanOp::AssembleFim,
            PlanOp::Determinant,
            PlanOp::Crb,
            PlanOp::Simplify,
            PlanOp::Substitute,
            PlanOp::AssertEqual,
        ];
        for kind in kinds {
            for op in ops {
                let e = StepError::new(kind, "x");
                let _ = classify_failure(&e, op); // must not panic
            }
        }
    }

    #[test]
    fn summation_errors_map_to_summation_class() {
        let e = StepError::new(ErrorKind::ExponentOutOfTable, "k=10");
        assert_eq!(
            classify_failure(&e, PlanOp::SumIndex),
            FailureClass::SummationClosedForm
        );
    }

    #[test]
    fn sign_flip_assert_maps_to_constant_or_sign() {
        let e = StepError {
            kind: ErrorKind::AssertNotEqual,
            message: "ratio -1".into(),
            ratio: Some(crate::expr::RatioDiagnostic {
                ratio: -1.0,
                is_sign_flip: true,
            }),
        };
        assert_eq!(
            classify_failure(&e, PlanOp::AssertEqual),
            FailureClass::ConstantOrSign
        );
    }

    #[test]
    fn assemble_failures_map_to_fim_formulation() {
        let e = StepError::new(ErrorKind::DegreeOverflow, "deg");
        assert_eq!(
            classify_failure(&e, PlanOp::AssembleFim),
            FailureClass::FimFormulation
        );
    }

    #[test]
    fn trace_round_trips() {
        let trace = DerivationTrace {
            scenario_id: "S01".into(),
            planner_id: "template".into(),
            seed: 7,
            steps: vec![StepRecord {
                index: 0,
                op: PlanOp::DifferentiatePoly,
                output: "d_phi_m_d_theta".into(),
                status: StepStatus::Ok,
                error: None,
                failure_class: None,
                revisions: 0,
                elapsed_micros: None,
            }],
            outputs: BTreeMap::from([("d_phi_m_d_theta".into(), "2*pi*d*m/lambda".into())]),
            verdicts: BTreeMap::new(),
            total_revisions: 0,
            failure_class: None,
            validation: None,
            wall_micros: None,
        };
        let json = trace.to_json();
        let back = DerivationTrace::from_json(&json).unwrap();
        assert_eq!(trace, back);
    }
}
