//! Patcher interface and the deterministic repair ladder.

use thiserror::Error;

use super::plan::{PlanOp, PlanStep};
use super::trace::{ErrorKind, StepError};
use super::workspace::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("no repair strategy applies")]
    Exhausted,
}

pub trait Patcher: Send + Sync {
    fn id(&self) -> &str;

    /// Propose replacement step(s) for a failed step. The last replacement
    /// must write the failed step's output name so downstream reads stay
    /// valid; earlier replacements may introduce fresh intermediate names.
    fn patch(
        &self,
        failed: &PlanStep,
        error: &StepError,
        attempt: u32,
        ws: &Workspace<'_>,
    ) -> Result<Vec<PlanStep>, PatchError>;
}

/// Fixed repair ladder:
///
/// 1. failed simplify (blowup or value mismatch) — retry strict with the
///    default expansion order and caps;
/// 2. simplify still failing — retry strict with trig normalization forced
///    (the multiple-angle rules re-enabled);
/// 3. mul_poly degree overflow — split the product: term-by-term
///    accumulation against the hard table bound, strict caps;
/// 4. anything else — give up.
///
/// A strict replacement ignores fault injection, so sabotaged rules and
/// lowered caps do not survive a patch.
#[derive(Debug, Default, Clone)]
pub struct DeterministicPatcher;

fn strict_copy(step: &PlanStep) -> PlanStep {
    let mut out = step.clone();
    out.params.strict = true;
    out
}

impl Patcher for DeterministicPatcher {
    fn id(&self) -> &str {
        "deterministic"
    }

    fn patch(
        &self,
        failed: &PlanStep,
        error: &StepError,
        attempt: u32,
        _ws: &Workspace<'_>,
    ) -> Result<Vec<PlanStep>, PatchError> {
        match (failed.op, error.kind) {
            (PlanOp::Simplify, ErrorKind::ExpansionBlowup | ErrorKind::ValueMismatch) => {
                // Rungs 1 and 2 are both strict re-simplifications; rung 2
                // exists for replacements that themselves got sabotaged.
                if attempt <= 2 {
                    Ok(vec![strict_copy(failed)])
                } else {
                    Err(PatchError::Exhausted)
                }
            }
            (PlanOp::MulPoly, ErrorKind::DegreeOverflow) => {
                let mut step = strict_copy(failed);
                step.params.split = true;
                Ok(vec![step])
            }
            (PlanOp::SumIndex, ErrorKind::ExpansionBlowup) => Ok(vec![strict_copy(failed)]),
            (PlanOp::AssembleFim | PlanOp::Determinant | PlanOp::Crb, ErrorKind::ExpansionBlowup) => {
                Ok(vec![strict_copy(failed)])
            }
            _ => Err(PatchError::Exhausted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::plan::StepParams;

    fn simplify_step() -> PlanStep {
        PlanStep {
            index: 3,
            op: PlanOp::Simplify,
            inputs: vec!["crb_theta_raw".into()],
            params: StepParams::default(),
            output: "crb_theta".into(),
        }
    }

    #[test]
    fn blowup_on_simplify_returns_strict_retry() {
        let step = simplify_step();
        let err = StepError::new(ErrorKind::ExpansionBlowup, "cap 16");
        let ws_spec = crate::scenario::builtin("S01").unwrap();
        let ws = crate::pipeline::workspace::analyze(&ws_spec);
        let patch = DeterministicPatcher.patch(&step, &err, 1, &ws).unwrap();
        assert_eq!(patch.len(), 1);
        assert!(patch[0].params.strict);
        assert_eq!(patch[0].output, "crb_theta");
    }

    #[test]
    fn unpatchable_errors_exhaust() {
        let mut step = simplify_step();
        step.op = PlanOp::SumIndex;
        let err = StepError::new(ErrorKind::ExponentOutOfTable, "k=10");
        let ws_spec = crate::scenario::builtin("S01").unwrap();
        let ws = crate::pipeline::workspace::analyze(&ws_spec);
        assert_eq!(
            DeterministicPatcher.patch(&step, &err, 1, &ws),
            Err(PatchError::Exhausted)
        );
    }

    #[test]
    fn degree_overflow_gets_split_retry() {
        let mut step = simplify_step();
        step.op = PlanOp::MulPoly;
        let err = StepError::new(ErrorKind::DegreeOverflow, "6 > 5");
        let ws_spec = crate::scenario::builtin("S01").unwrap();
        let ws = crate::pipeline::workspace::analyze(&ws_spec);
        let patch = DeterministicPatcher.patch(&step, &err, 1, &ws).unwrap();
        assert!(patch[0].params.split && patch[0].params.strict);
    }
}
