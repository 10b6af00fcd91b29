//! Symbolic equality with a seeded numeric fallback.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rng::Lcg64;

use super::{canonicalize, eval_numeric, Expr, SymbolKind, SymbolTable};

/// Verdict of a symbolic comparison. `UndecidedEqualNumerically` means
/// structural comparison failed but every sampled point agreed; it is a pass
/// with a warning, never a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equal,
    NotEqual,
    UndecidedEqualNumerically,
    /// Sampling produced too few usable points to say anything.
    Undecided,
}

impl Verdict {
    pub fn passes(self) -> bool {
        matches!(self, Verdict::Equal | Verdict::UndecidedEqualNumerically)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Equal => "equal",
            Verdict::NotEqual => "not_equal",
            Verdict::UndecidedEqualNumerically => "undecided_equal_numerically",
            Verdict::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

/// When two expressions differ by a fixed multiplicative constant at every
/// sampled point, the constant is reported; a ratio of -1 is the sign-flip
/// signature the failure taxonomy keys on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostic {
    pub ratio: f64,
    pub is_sign_flip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<RatioDiagnostic>,
}

impl Comparison {
    fn of(verdict: Verdict) -> Comparison {
        Comparison {
            verdict,
            diagnostic: None,
        }
    }
}

const SAMPLE_POINTS: usize = 64;
const MIN_VALID_POINTS: usize = 16;
const NUMERIC_RTOL: f64 = 1e-10;

/// Structural equality on canonical forms, falling back to seeded numeric
/// sampling at 64 points.
pub fn equals_canonical(a: &Expr, b: &Expr, table: &SymbolTable, seed: u64) -> Comparison {
    let ca = canonicalize(a);
    let cb = canonicalize(b);
    if let (Ok(ca), Ok(cb)) = (&ca, &cb) {
        if ca == cb {
            return Comparison::of(Verdict::Equal);
        }
    }
    // Structural route failed (different forms, or canonicalization blew the
    // expansion cap); sample numerically on the raw inputs.
    numeric_compare(a, b, table, seed)
}

fn numeric_compare(a: &Expr, b: &Expr, table: &SymbolTable, seed: u64) -> Comparison {
    let mut symbols = a.free_symbols();
    symbols.extend(b.free_symbols());
    symbols.remove(&table.pi());

    let mut rng = Lcg64::new(seed);
    let mut valid = 0usize;
    let mut all_agree = true;
    let mut ratios: Vec<f64> = Vec::new();

    for _ in 0..SAMPLE_POINTS {
        let mut point = BTreeMap::new();
        for &s in &symbols {
            point.insert(s, sample_symbol(table, s, &mut rng));
        }
        let va = match eval_numeric(a, &point, table) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let vb = match eval_numeric(b, &point, table) {
            Ok(v) => v,
            Err(_) => continue,
        };
        valid += 1;
        let scale = va.abs().max(vb.abs()).max(1.0);
        if (va - vb).abs() > NUMERIC_RTOL * scale {
            all_agree = false;
        }
        if vb.abs() > 1e-12 {
            ratios.push(va / vb);
        }
    }

    if valid < MIN_VALID_POINTS {
        return Comparison::of(Verdict::Undecided);
    }
    if all_agree {
        return Comparison::of(Verdict::UndecidedEqualNumerically);
    }
    // Constant-ratio detector for the ConstantOrSign failure class.
    let diagnostic = constant_ratio(&ratios);
    Comparison {
        verdict: Verdict::NotEqual,
        diagnostic,
    }
}

fn constant_ratio(ratios: &[f64]) -> Option<RatioDiagnostic> {
    if ratios.len() < MIN_VALID_POINTS / 2 {
        return None;
    }
    let first = ratios[0];
    if !first.is_finite() || first.abs() < 1e-12 {
        return None;
    }
    let constant = ratios
        .iter()
        .all(|r| (r - first).abs() <= 1e-6 * first.abs().max(1.0));
    if constant && (first - 1.0).abs() > 1e-8 {
        Some(RatioDiagnostic {
            ratio: first,
            is_sign_flip: (first + 1.0).abs() <= 1e-6,
        })
    } else {
        None
    }
}

/// Draw a plausible value for a symbol: its declared range when present,
/// otherwise a default band away from zero. Index lengths sample small
/// integers.
pub(crate) fn sample_symbol(table: &SymbolTable, s: super::SymbolId, rng: &mut Lcg64) -> f64 {
    let info = table.info(s);
    if let Some((lo, hi)) = info.range {
        if info.kind == SymbolKind::Index {
            return rng.uniform(lo, hi).round().max(0.0);
        }
        return rng.uniform(lo, hi);
    }
    match info.kind {
        SymbolKind::Index => (rng.next_u64() % 8) as f64,
        _ => {
            let magnitude = rng.uniform(0.3, 2.5);
            if info.positive {
                magnitude
            } else if rng.next_u64() % 2 == 0 {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (SymbolTable, super::super::SymbolId, super::super::SymbolId) {
        let mut t = SymbolTable::new();
        let x = t.add("x", SymbolKind::Parameter, false);
        let y = t.add("y", SymbolKind::Parameter, false);
        (t, x, y)
    }

    #[test]
    fn binomial_is_equal() {
        let (t, x, y) = table();
        let a = Expr::pow(Expr::sym(x) + Expr::sym(y), 2);
        let b = Expr::pow(Expr::sym(x), 2)
            + Expr::int(2) * Expr::sym(x) * Expr::sym(y)
            + Expr::pow(Expr::sym(y), 2);
        assert_eq!(equals_canonical(&a, &b, &t, 1).verdict, Verdict::Equal);
    }

    #[test]
    fn double_angle_is_equal_via_rewrite() {
        let (t, x, _) = table();
        let a = Expr::sin(Expr::int(2) * Expr::sym(x));
        let b = Expr::int(2) * Expr::sin(Expr::sym(x)) * Expr::cos(Expr::sym(x));
        assert_eq!(equals_canonical(&a, &b, &t, 1).verdict, Verdict::Equal);
    }

    #[test]
    fn sign_flip_detected() {
        let (t, x, y) = table();
        let a = Expr::sym(x) * Expr::sym(y);
        let b = -(Expr::sym(x) * Expr::sym(y));
        let cmp = equals_canonical(&a, &b, &t, 1);
        assert_eq!(cmp.verdict, Verdict::NotEqual);
        let d = cmp.diagnostic.expect("ratio diagnostic");
        assert!(d.is_sign_flip, "ratio {} should flag sign flip", d.ratio);
    }

    #[test]
    fn different_expressions_not_equal() {
        let (t, x, y) = table();
        let a = Expr::sym(x) + Expr::sym(y);
        let b = Expr::sym(x) * Expr::sym(y);
        assert_eq!(equals_canonical(&a, &b, &t, 1).verdict, Verdict::NotEqual);
    }

    #[test]
    fn reflexive_and_symmetric() {
        let (t, x, y) = table();
        let a = Expr::sym(x) * Expr::cos(Expr::sym(y));
        assert_eq!(equals_canonical(&a, &a, &t, 1).verdict, Verdict::Equal);
        let b = Expr::cos(Expr::sym(y)) * Expr::sym(x);
        assert_eq!(equals_canonical(&a, &b, &t, 1).verdict, Verdict::Equal);
        assert_eq!(equals_canonical(&b, &a, &t, 1).verdict, Verdict::Equal);
    }
}
