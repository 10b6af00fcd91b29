//! Step execution with per-step verification, fault injection, and the
//! patch-and-retry loop.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::calculus::{differentiate, differentiate_poly, mul_poly_with, sum_index_with, Summed};
use crate::error::KernelError;
use crate::expr::{
    canonicalize_with, equals_canonical, eval_numeric, Expr, IndexPoly, SimplifyOptions,
    SymbolId, Verdict, DEGREE_CAP,
};
use crate::fisher::SymMatrix;
use crate::rng::Lcg64;

use super::patcher::{PatchError, Patcher};
use super::plan::{renumber, Plan, PlanOp, PlanStep};
use super::trace::{classify_failure, ErrorKind, StepError, StepRecord, StepStatus};
use super::workspace::{Value, Workspace};

/// Fault-injection switches. Injected limits apply only to steps that do not
/// carry `strict`; the patcher's replacement steps always run strict.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Injection {
    /// Negate the result of non-strict simplify steps (a wrong-constant
    /// rewrite; caught by the step self-check as a ratio of -1).
    #[serde(default)]
    pub sign_flip_simplify: bool,
    /// Lowered canonicalization term cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_cap: Option<usize>,
    /// Lowered product degree cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_cap: Option<u32>,
}

impl Injection {
    pub fn is_active(&self) -> bool {
        self.sign_flip_simplify || self.expansion_cap.is_some() || self.degree_cap.is_some()
    }
}

/// Per-step revision budget.
pub const STEP_REVISION_BUDGET: u32 = 3;
/// Whole-derivation revision budget.
pub const RUN_REVISION_BUDGET: u32 = 10;

pub struct ExecutionOutcome {
    pub records: Vec<StepRecord>,
    pub total_revisions: u32,
    pub completed: bool,
}

fn effective_opts(step: &PlanStep, injection: &Injection) -> SimplifyOptions {
    let mut opts = SimplifyOptions::default();
    if !step.params.strict {
        if let Some(cap) = injection.expansion_cap {
            opts.term_cap = cap;
        }
    }
    opts
}

fn effective_degree_cap(step: &PlanStep, injection: &Injection) -> u32 {
    if step.params.strict {
        DEGREE_CAP
    } else {
        injection.degree_cap.unwrap_or(DEGREE_CAP)
    }
}

fn need_input<'v>(
    ws: &'v Workspace<'_>,
    step: &PlanStep,
    pos: usize,
) -> Result<&'v Value, StepError> {
    let name = step.inputs.get(pos).ok_or_else(|| {
        StepError::new(
            ErrorKind::MissingInput,
            format!("step `{}` expects input #{pos}", step.op),
        )
    })?;
    ws.get(name).ok_or_else(|| {
        StepError::new(ErrorKind::MissingInput, format!("value `{name}` not found"))
    })
}

fn scalar<'v>(v: &'v Value, what: &str) -> Result<&'v Expr, StepError> {
    v.as_scalar().ok_or_else(|| {
        StepError::new(
            ErrorKind::WrongValueKind,
            format!("{what} expects a scalar, found {}", v.kind_name()),
        )
    })
}

fn poly<'v>(v: &'v Value, what: &str) -> Result<&'v IndexPoly, StepError> {
    v.as_poly().ok_or_else(|| {
        StepError::new(
            ErrorKind::WrongValueKind,
            format!("{what} expects an index polynomial, found {}", v.kind_name()),
        )
    })
}

fn resolve_symbol(ws: &Workspace<'_>, name: &Option<String>, what: &str) -> Result<SymbolId, StepError> {
    let name = name.as_ref().ok_or_else(|| {
        StepError::new(ErrorKind::MissingInput, format!("{what} missing"))
    })?;
    ws.spec
        .table
        .resolve(name)
        .map_err(|e| StepError::from_kernel(&e))
}

fn kernel(e: KernelError) -> StepError {
    StepError::from_kernel(&e)
}

/// Spot-check that a rewrite preserved the value of an expression: evaluate
/// both sides at a few seeded bindings and compare. A constant ratio is
/// attached for the failure taxonomy.
fn value_self_check(
    before: &Value,
    after: &Value,
    ws: &Workspace<'_>,
    seed: u64,
) -> Result<(), StepError> {
    let (a, b) = match (before, after) {
        (Value::Scalar(a), Value::Scalar(b)) => (a.clone(), b.clone()),
        (Value::Poly(a), Value::Poly(b)) => (a.to_raw_expr(), b.to_raw_expr()),
        _ => return Ok(()),
    };
    let table = &ws.spec.table;
    let mut symbols = a.free_symbols();
    symbols.extend(b.free_symbols());
    symbols.remove(&table.pi());
    let mut rng = Lcg64::new(seed);
    let mut ratios = Vec::new();
    let mut mismatch = false;
    let mut checked = 0;
    for _ in 0..8 {
        let mut point = BTreeMap::new();
        for &s in &symbols {
            point.insert(s, crate::expr::sample_symbol_value(table, s, &mut rng));
        }
        let (va, vb) = match (
            eval_numeric(&a, &point, table),
            eval_numeric(&b, &point, table),
        ) {
            (Ok(x), Ok(y)) => (x, y),
            _ => continue,
        };
        checked += 1;
        if (va - vb).abs() > 1e-9 * va.abs().max(vb.abs()).max(1.0) {
            mismatch = true;
        }
        if va.abs() > 1e-12 {
            ratios.push(vb / va);
        }
    }
    if checked >= 2 && mismatch {
        let first = ratios.first().copied().unwrap_or(f64::NAN);
        let constant = first.is_finite()
            && ratios
                .iter()
                .all(|r| (r - first).abs() <= 1e-6 * first.abs().max(1.0));
        let ratio = if constant {
            Some(crate::expr::RatioDiagnostic {
                ratio: first,
                is_sign_flip: (first + 1.0).abs() <= 1e-6,
            })
        } else {
            None
        };
        return Err(StepError {
            kind: ErrorKind::ValueMismatch,
            message: "simplify self-check: rewrite changed the value".to_string(),
            ratio,
        });
    }
    Ok(())
}

/// Execute one step against the workspace.
fn run_step(
    step: &PlanStep,
    ws: &Workspace<'_>,
    injection: &Injection,
    seed: u64,
) -> Result<Value, StepError> {
    let opts = effective_opts(step, injection);
    let degree_cap = effective_degree_cap(step, injection);
    let table = &ws.spec.table;
    match step.op {
        PlanOp::Define => {
            let text = step.params.expr.as_ref().ok_or_else(|| {
                StepError::new(ErrorKind::MissingInput, "define without `expr`")
            })?;
            ws.parse_value(text).map_err(kernel)
        }
        PlanOp::Differentiate => {
            let e = scalar(need_input(ws, step, 0)?, "differentiate")?;
            let wrt = resolve_symbol(ws, &step.params.wrt, "wrt")?;
            if table.is_index(wrt) {
                return Err(kernel(KernelError::IndexDifferentiation(
                    table.name(wrt).to_string(),
                )));
            }
            differentiate(e, wrt).map(Value::Scalar).map_err(kernel)
        }
        PlanOp::DifferentiatePoly => {
            let p = poly(need_input(ws, step, 0)?, "differentiate_poly")?;
            let wrt = resolve_symbol(ws, &step.params.wrt, "wrt")?;
            differentiate_poly(p, wrt, table)
                .map(Value::Poly)
                .map_err(kernel)
        }
        PlanOp::MulPoly => {
            let a = poly(need_input(ws, step, 0)?, "mul_poly")?;
            let b = poly(need_input(ws, step, 1)?, "mul_poly")?;
            mul_poly_with(a, b, degree_cap, step.params.split, &opts)
                .map(Value::Poly)
                .map_err(kernel)
        }
        PlanOp::SumIndex => {
            let p = poly(need_input(ws, step, 0)?, "sum_index")?;
            let over = resolve_symbol(ws, &step.params.over, "over")?;
            let length = resolve_symbol(ws, &step.params.length, "length")?;
            match sum_index_with(p, over, length, table, &opts).map_err(kernel)? {
                Summed::Expr(e) => Ok(Value::Scalar(e)),
                Summed::Poly(p) => Ok(Value::Poly(p)),
            }
        }
        PlanOp::AssembleFim => {
            let dim = step.params.dim.ok_or_else(|| {
                StepError::new(ErrorKind::MissingInput, "assemble_fim without `dim`")
            })?;
            let need = dim * (dim + 1) / 2;
            if step.inputs.len() != need + 2 {
                return Err(StepError::new(
                    ErrorKind::MissingInput,
                    format!(
                        "assemble_fim dim {dim} expects {} inputs (upper triangle + gain_sq + noise), found {}",
                        need + 2,
                        step.inputs.len()
                    ),
                ));
            }
            let gain = scalar(need_input(ws, step, need)?, "assemble_fim gain")?.clone();
            let noise = scalar(need_input(ws, step, need + 1)?, "assemble_fim noise")?.clone();
            let scale = Expr::int(2) * gain * Expr::pow(noise, -1);
            let mut upper = Vec::with_capacity(need);
            for pos in 0..need {
                let s = scalar(need_input(ws, step, pos)?, "assemble_fim entry")?;
                let entry = canonicalize_with(&(scale.clone() * s.clone()), &opts)
                    .map_err(kernel)?;
                upper.push(entry);
            }
            Ok(Value::Matrix(SymMatrix::from_upper(dim, upper)))
        }
        PlanOp::Determinant => {
            let f = need_input(ws, step, 0)?
                .as_matrix()
                .ok_or_else(|| {
                    StepError::new(ErrorKind::WrongValueKind, "determinant expects a matrix")
                })?;
            crate::fisher::determinant_with(f, &opts)
                .map(Value::Scalar)
                .map_err(kernel)
        }
        PlanOp::Crb => {
            let f = need_input(ws, step, 0)?
                .as_matrix()
                .ok_or_else(|| StepError::new(ErrorKind::WrongValueKind, "crb expects a matrix"))?;
            let i = step.params.param_index.ok_or_else(|| {
                StepError::new(ErrorKind::MissingInput, "crb without `param_index`")
            })?;
            if i >= f.dim() {
                return Err(StepError::new(
                    ErrorKind::MissingInput,
                    format!("crb param_index {i} out of range for dim {}", f.dim()),
                ));
            }
            crate::fisher::crb_with(f, i, &opts)
                .map(Value::Scalar)
                .map_err(kernel)
        }
        PlanOp::Simplify => {
            let input = need_input(ws, step, 0)?;
            let mut out = match input {
                Value::Scalar(e) => Value::Scalar(canonicalize_with(e, &opts).map_err(kernel)?),
                Value::Poly(p) => {
                    let raw = p.to_raw_expr();
                    Value::Poly(
                        IndexPoly::from_expr_with(&raw, p.indices(), table, &opts, degree_cap)
                            .map_err(kernel)?,
                    )
                }
                Value::Matrix(_) => {
                    return Err(StepError::new(
                        ErrorKind::WrongValueKind,
                        "simplify expects a scalar or polynomial",
                    ))
                }
            };
            if injection.sign_flip_simplify && !step.params.strict {
                out = match out {
                    Value::Scalar(e) => Value::Scalar(
                        canonicalize_with(&-e, &opts).map_err(kernel)?,
                    ),
                    other => other,
                };
            }
            value_self_check(input, &out, ws, seed ^ step.index as u64)?;
            Ok(out)
        }
        PlanOp::Substitute => {
            let e = scalar(need_input(ws, step, 0)?, "substitute")?;
            let bindings = step.params.bindings.as_ref().ok_or_else(|| {
                StepError::new(ErrorKind::MissingInput, "substitute without `bindings`")
            })?;
            let mut map = BTreeMap::new();
            for (name, text) in bindings {
                let sym = table.resolve(name).map_err(kernel)?;
                let value = crate::expr::parse_expr_only(text, table).map_err(kernel)?;
                map.insert(sym, value);
            }
            crate::expr::substitute(e, &map)
                .map(Value::Scalar)
                .map_err(kernel)
        }
        PlanOp::AssertEqual => {
            let a = need_input(ws, step, 0)?;
            let b = need_input(ws, step, 1)?;
            let (ea, eb) = match (a, b) {
                (Value::Scalar(x), Value::Scalar(y)) => (x.clone(), y.clone()),
                (Value::Poly(x), Value::Poly(y)) => (x.to_raw_expr(), y.to_raw_expr()),
                _ => {
                    return Err(StepError::new(
                        ErrorKind::WrongValueKind,
                        "assert_equal operands have different kinds",
                    ))
                }
            };
            let cmp = equals_canonical(&ea, &eb, table, seed ^ step.index as u64);
            match cmp.verdict {
                Verdict::Equal | Verdict::UndecidedEqualNumerically => Ok(a.clone()),
                _ => Err(StepError {
                    kind: ErrorKind::AssertNotEqual,
                    message: format!("assert_equal: verdict {}", cmp.verdict),
                    ratio: cmp.diagnostic,
                }),
            }
        }
    }
}

/// Run the plan in order; on failure consult the patcher up to the revision
/// budgets, splice the replacement in place, and retry. All outcomes are
/// recorded; failures never escape as errors.
pub fn execute(
    plan: &Plan,
    ws: &mut Workspace<'_>,
    patcher: &dyn Patcher,
    injection: &Injection,
    seed: u64,
    capture_timing: bool,
) -> ExecutionOutcome {
    let mut plan: Plan = plan.clone();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut total_revisions = 0u32;
    let mut pos = 0usize;

    while pos < plan.len() {
        let started = Instant::now();
        let mut revisions = 0u32;
        let mut last_error: Option<StepError> = None;

        let (status, value) = loop {
            let step = plan[pos].clone();
            match run_step(&step, ws, injection, seed) {
                Ok(v) => {
                    let status = if revisions > 0 {
                        StepStatus::PatchedOk
                    } else {
                        StepStatus::Ok
                    };
                    break (status, Some(v));
                }
                Err(err) => {
                    last_error = Some(err.clone());
                    if revisions >= STEP_REVISION_BUDGET || total_revisions >= RUN_REVISION_BUDGET
                    {
                        break (StepStatus::Abandoned, None);
                    }
                    match patcher.patch(&step, &err, revisions + 1, ws) {
                        Ok(replacement) if !replacement.is_empty() => {
                            // The final replacement step must keep the output
                            // name so downstream reads stay valid.
                            if replacement.last().map(|s| s.output.as_str())
                                != Some(step.output.as_str())
                            {
                                break (StepStatus::Abandoned, None);
                            }
                            plan.splice(pos..=pos, replacement);
                            renumber(&mut plan);
                            revisions += 1;
                            total_revisions += 1;
                        }
                        Ok(_) | Err(PatchError::Exhausted) => {
                            break (StepStatus::Abandoned, None);
                        }
                    }
                }
            }
        };

        let step = &plan[pos];
        let failure_class = match status {
            StepStatus::Ok => None,
            _ => last_error.as_ref().map(|e| classify_failure(e, step.op)),
        };
        records.push(StepRecord {
            index: pos,
            op: step.op,
            output: step.output.clone(),
            status,
            error: match status {
                StepStatus::Ok => None,
                _ => last_error,
            },
            failure_class,
            revisions,
            elapsed_micros: capture_timing
                .then(|| started.elapsed().as_micros().min(u128::from(u64::MAX)) as u64),
        });

        match value {
            Some(v) => {
                ws.insert(step.output.clone(), v);
                pos += 1;
            }
            None => {
                // Abandoned: halt the derivation.
                return ExecutionOutcome {
                    records,
                    total_revisions,
                    completed: false,
                };
            }
        }
    }

    ExecutionOutcome {
        records,
        total_revisions,
        completed: true,
    }
}
