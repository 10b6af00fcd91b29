//! Ground-truth validation: seeded sample points, the finite-difference
//! oracle, numeric comparison of every derived target, and symbolic
//! verification against reference formulas.

mod linalg;
mod oracle;

pub use linalg::{det as numeric_det, inverse as numeric_inverse, sym_condition, sym_eigenvalues};
pub use oracle::{oracle_fim, phase_derivative_fd, FD_STEP_REL};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::error::KernelError;
use crate::expr::{
    equals_canonical, eval_numeric, Comparison, Parsed, RatioDiagnostic, SymbolId, Verdict,
};
use crate::par;
use crate::rng::{Lcg64, LCG_INCREMENT, LCG_MULTIPLIER};
use crate::scenario::{SamplingEntry, ScenarioSpec, TargetKind};

/// Identifier of the sampling generator recorded in reports.
pub const SAMPLER_ID: &str = "lcg64-mmix";

/// Oracle FIMs with a spectral condition number above this are skipped.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("sample point {0} produced a non-finite value")]
    NonFinitePoint(usize),
    #[error("all {0} sample points were skipped as ill-conditioned")]
    AllPointsSkipped(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// One numeric binding of every sampled symbol.
#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub id: usize,
    pub bindings: BTreeMap<SymbolId, f64>,
}

/// Deterministic sample points honoring the scenario's sampling intervals.
/// Symbols are drawn in declaration order, one generator per point, so point
/// `k` of seed `s` never depends on how many points are requested.
pub fn sample_points(spec: &ScenarioSpec, seed: u64, n_points: usize) -> Vec<SamplePoint> {
    (0..n_points)
        .map(|id| {
            let mut rng = Lcg64::new(seed ^ ((id as u64).wrapping_mul(0x9e3779b97f4a7c15)));
            let mut bindings = BTreeMap::new();
            for (sym, entry) in &spec.sampling {
                let v = match entry {
                    SamplingEntry::Range([lo, hi]) => rng.uniform(*lo, *hi),
                    SamplingEntry::Choices { choices } => *rng.choice(choices) as f64,
                };
                bindings.insert(*sym, v);
            }
            SamplePoint { id, bindings }
        })
        .collect()
}

/// Per-target outcome of a validation run.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TargetReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbolic: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<RatioDiagnostic>,
    pub max_rel_err: f64,
    pub points_tested: usize,
    pub points_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub scenario_id: String,
    pub seed: u64,
    pub points: usize,
    pub tolerance: f64,
    pub sampler: String,
    pub sampler_constants: (u64, u64),
    pub condition_limit: f64,
    pub targets: BTreeMap<String, TargetReport>,
    pub pass: bool,
}

/// Relative-above-one, absolute-below-one error metric.
fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Index tuples probed for phase-derivative targets.
fn probe_tuples(lengths: &[i64]) -> Vec<Vec<i64>> {
    let picks: Vec<Vec<i64>> = lengths
        .iter()
        .map(|&l| {
            let mut v = vec![0, 1.min(l - 1), l / 2, l - 1];
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut tuples = vec![vec![]];
    for axis in &picks {
        let mut next = Vec::new();
        for t in &tuples {
            for &v in axis {
                let mut t2 = t.clone();
                t2.push(v);
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples
}

struct PointOutcome {
    skipped: bool,
    /// target -> worst error at this point.
    errors: BTreeMap<String, f64>,
    failure: Option<ValidateError>,
}

/// Numeric validation of every derived target against the oracle.
///
/// Points with oracle condition number above [`CONDITION_LIMIT`] are skipped
/// and counted; passing requires max relative error within `tol` over the
/// surviving points and fewer than half the points skipped.
pub fn validate_numeric(
    derived: &BTreeMap<String, Parsed>,
    spec: &ScenarioSpec,
    n_points: usize,
    _tol: f64,
    seed: u64,
) -> Result<BTreeMap<String, TargetReport>, ValidateError> {
    let points = sample_points(spec, seed, n_points);
    let p = spec.dim();

    let outcomes: Vec<PointOutcome> = par::map_ordered(&points, |pt| {
        let fim = match oracle_fim(spec, pt) {
            Ok(f) => f,
            Err(e) => {
                return PointOutcome {
                    skipped: true,
                    errors: BTreeMap::new(),
                    failure: Some(e),
                }
            }
        };
        let cond = sym_condition(p, &fim);
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return PointOutcome {
                skipped: true,
                errors: BTreeMap::new(),
                failure: None,
            };
        }
        let inverse = match numeric_inverse(p, &fim) {
            Some(inv) => inv,
            None => {
                return PointOutcome {
                    skipped: true,
                    errors: BTreeMap::new(),
                    failure: None,
                }
            }
        };
        let oracle_det = numeric_det(p, &fim);

        let mut errors = BTreeMap::new();
        let mut failure = None;
        for (target, value) in derived {
            let Some(kind) = spec.target_kinds.get(target) else {
                continue;
            };
            let res: Result<f64, ValidateError> = (|| {
                match (kind, value) {
                    (TargetKind::FimEntry(i, j), Parsed::Expr(e)) => {
                        let got = eval_numeric(e, &pt.bindings, &spec.table)?;
                        Ok(rel_err(got, fim[i * p + j]))
                    }
                    (TargetKind::Determinant, Parsed::Expr(e)) => {
                        let got = eval_numeric(e, &pt.bindings, &spec.table)?;
                        Ok(rel_err(got, oracle_det))
                    }
                    (TargetKind::Crb(param), Parsed::Expr(e)) => {
                        let got = eval_numeric(e, &pt.bindings, &spec.table)?;
                        let idx = spec
                            .params
                            .iter()
                            .position(|s| s == param)
                            .expect("crb target parameter is in params");
                        Ok(rel_err(got, inverse[idx * p + idx]))
                    }
                    (TargetKind::PhaseDerivative(param), Parsed::Poly(poly)) => {
                        let lengths: Vec<i64> = spec
                            .phase
                            .indices()
                            .iter()
                            .map(|idx| pt.bindings[&spec.index_ranges[idx]] as i64)
                            .collect();
                        let mut worst = 0.0f64;
                        for tuple in probe_tuples(&lengths) {
                            let got = poly.eval_at(&pt.bindings, &tuple, &spec.table)?;
                            let want = phase_derivative_fd(spec, &pt.bindings, *param, &tuple)?;
                            worst = worst.max(rel_err(got, want));
                        }
                        Ok(worst)
                    }
                    // Kind/value shape mismatch: report as a full miss.
                    _ => Ok(f64::INFINITY),
                }
            })();
            match res {
                Ok(err) => {
                    errors.insert(target.clone(), err);
                }
                Err(e) => {
                    failure = Some(e);
                }
            }
        }
        PointOutcome {
            skipped: false,
            errors,
            failure,
        }
    });

    let mut skipped = 0usize;
    let mut tested = 0usize;
    let mut per_target: BTreeMap<String, f64> = BTreeMap::new();
    for outcome in outcomes {
        if let Some(e) = outcome.failure {
            if !outcome.skipped {
                return Err(e);
            }
            // A point that failed to evaluate counts as skipped.
        }
        if outcome.skipped {
            skipped += 1;
            continue;
        }
        tested += 1;
        for (t, e) in outcome.errors {
            let slot = per_target.entry(t).or_insert(0.0);
            if e > *slot {
                *slot = e;
            }
        }
    }
    if tested == 0 {
        return Err(ValidateError::AllPointsSkipped(n_points));
    }

    let mut out = BTreeMap::new();
    for target in derived.keys() {
        let max_rel_err = per_target.get(target).copied().unwrap_or(f64::INFINITY);
        out.insert(
            target.clone(),
            TargetReport {
                symbolic: None,
                diagnostic: None,
                max_rel_err,
                points_tested: tested,
                points_skipped: skipped,
            },
        );
    }
    Ok(out)
}

/// Symbolic verification of one derived value against its reference.
pub fn verify_symbolic(
    derived: &Parsed,
    reference: &Parsed,
    spec: &ScenarioSpec,
    seed: u64,
) -> Comparison {
    match (derived, reference) {
        (Parsed::Expr(a), Parsed::Expr(b)) => {
            let fa = crate::expr::canonicalize(a).map(|e| e.free_symbols());
            let fb = crate::expr::canonicalize(b).map(|e| e.free_symbols());
            if let (Ok(fa), Ok(fb)) = (fa, fb) {
                if fa != fb {
                    return Comparison {
                        verdict: Verdict::NotEqual,
                        diagnostic: None,
                    };
                }
            }
            equals_canonical(a, b, &spec.table, seed)
        }
        (Parsed::Poly(a), Parsed::Poly(b)) => {
            if a.indices() != b.indices() {
                return Comparison {
                    verdict: Verdict::NotEqual,
                    diagnostic: None,
                };
            }
            equals_canonical(&a.to_raw_expr(), &b.to_raw_expr(), &spec.table, seed)
        }
        _ => Comparison {
            verdict: Verdict::NotEqual,
            diagnostic: None,
        },
    }
}

/// Run numeric validation plus symbolic verification for every target that
/// carries a reference, and assemble the report.
pub fn validate_all(
    derived: &BTreeMap<String, Parsed>,
    spec: &ScenarioSpec,
    n_points: usize,
    tol: f64,
    seed: u64,
) -> Result<ValidationReport, ValidateError> {
    let mut targets = validate_numeric(derived, spec, n_points, tol, seed)?;
    for (name, report) in targets.iter_mut() {
        if let (Some(value), Some(reference)) = (derived.get(name), spec.references.get(name)) {
            let cmp = verify_symbolic(value, reference, spec, seed);
            report.symbolic = Some(cmp.verdict);
            report.diagnostic = cmp.diagnostic;
        }
    }
    let half = n_points.div_ceil(2);
    let pass = targets.values().all(|t| {
        t.max_rel_err <= tol
            && t.points_skipped < half
            && t.symbolic.map(|v| v.passes()).unwrap_or(true)
    }) && derived.len() == spec.targets.len();
    Ok(ValidationReport {
        scenario_id: spec.id.clone(),
        seed,
        points: n_points,
        tolerance: tol,
        sampler: SAMPLER_ID.to_string(),
        sampler_constants: (LCG_MULTIPLIER, LCG_INCREMENT),
        condition_limit: CONDITION_LIMIT,
        targets,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin, load_scenario};

    #[test]
    fn sample_points_are_deterministic_and_in_range() {
        let spec = builtin("S01").unwrap();
        let a = sample_points(&spec, 7, 20);
        let b = sample_points(&spec, 7, 20);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.bindings, y.bindings);
        }
        let theta = spec.table.lookup("theta").unwrap();
        let m = spec.table.lookup("M").unwrap();
        for pt in &a {
            let t = pt.bindings[&theta];
            assert!((0.05236..=1.13446).contains(&t));
            let mv = pt.bindings[&m];
            assert!([4.0, 8.0, 16.0, 64.0].contains(&mv));
        }
    }

    #[test]
    fn point_k_independent_of_count() {
        let spec = builtin("S01").unwrap();
        let a = sample_points(&spec, 3, 5);
        let b = sample_points(&spec, 3, 20);
        for k in 0..5 {
            assert_eq!(a[k].bindings, b[k].bindings);
        }
    }

    #[test]
    fn singular_geometry_yields_all_points_skipped() {
        // Sampling confined to theta = pi/2 collapses every column of F.
        let mut doc: serde_json::Value =
            serde_json::from_str(crate::scenario::builtin_source("S01").unwrap()).unwrap();
        doc["sampling"]["theta"] = serde_json::json!([
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2
        ]);
        let spec = load_scenario(&doc.to_string()).unwrap();
        let derived: BTreeMap<String, Parsed> = BTreeMap::new();
        match validate_numeric(&derived, &spec, 8, 1e-6, 1) {
            Err(ValidateError::AllPointsSkipped(8)) => {}
            other => panic!("expected AllPointsSkipped, got {other:?}"),
        }
    }

    #[test]
    fn verify_symbolic_flags_sign_flip() {
        let spec = builtin("S01").unwrap();
        let reference = spec.references["d_phi_m_d_R"].clone();
        let flipped = match &reference {
            Parsed::Poly(p) => {
                let raw = p.to_raw_expr();
                Parsed::Poly(
                    crate::expr::IndexPoly::from_expr(&(-raw), p.indices(), &spec.table)
                        .unwrap(),
                )
            }
            _ => unreachable!(),
        };
        let cmp = verify_symbolic(&flipped, &reference, &spec, 5);
        assert_eq!(cmp.verdict, Verdict::NotEqual);
        assert!(cmp.diagnostic.expect("diagnostic").is_sign_flip);
    }
}
