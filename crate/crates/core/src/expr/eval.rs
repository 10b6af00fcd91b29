use std::collections::BTreeMap;

use num::ToPrimitive;

use crate::error::KernelError;

use super::{Expr, SymbolId, SymbolTable};

/// Double-precision evaluation at a full binding of the free symbols.
///
/// Accumulation runs left to right over the canonical child order, so results
/// are bit-reproducible for a fixed expression.
pub fn eval_numeric(
    e: &Expr,
    point: &BTreeMap<SymbolId, f64>,
    table: &SymbolTable,
) -> Result<f64, KernelError> {
    let v = eval_inner(e, point, table)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::NonFiniteResult(format!("{v}")))
    }
}

fn eval_inner(
    e: &Expr,
    point: &BTreeMap<SymbolId, f64>,
    table: &SymbolTable,
) -> Result<f64, KernelError> {
    match e {
        Expr::Const(c) => c
            .to_f64()
            .ok_or_else(|| KernelError::NonFiniteResult("rational out of f64 range".into())),
        Expr::Sym(s) => {
            if let Some(v) = point.get(s) {
                Ok(*v)
            } else if *s == table.pi() {
                Ok(std::f64::consts::PI)
            } else {
                Err(KernelError::UnboundSymbol(table.name(*s).to_string()))
            }
        }
        Expr::Add(xs) => {
            let mut acc = 0.0;
            for x in xs {
                acc += eval_inner(x, point, table)?;
            }
            Ok(acc)
        }
        Expr::Mul(xs) => {
            let mut acc = 1.0;
            for x in xs {
                acc *= eval_inner(x, point, table)?;
            }
            Ok(acc)
        }
        Expr::Pow(b, k) => {
            let base = eval_inner(b, point, table)?;
            if base == 0.0 && *k < 0 {
                return Err(KernelError::NonFiniteResult(
                    "zero raised to a negative power".into(),
                ));
            }
            Ok(base.powi(*k))
        }
        Expr::Sin(a) => Ok(eval_inner(a, point, table)?.sin()),
        Expr::Cos(a) => Ok(eval_inner(a, point, table)?.cos()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{canonicalize, SymbolKind};

    #[test]
    fn two_pi_over_lambda() {
        let mut t = SymbolTable::new();
        let lam = t.add("lambda", SymbolKind::StructuralConstant, true);
        let e = canonicalize(
            &(Expr::int(2) * Expr::sym(t.pi()) * Expr::pow(Expr::sym(lam), -1)),
        )
        .unwrap();
        let mut point = BTreeMap::new();
        point.insert(lam, 1.0);
        let v = eval_numeric(&e, &point, &t).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn cos_at_zero() {
        let mut t = SymbolTable::new();
        let th = t.add("theta", SymbolKind::Parameter, false);
        let e = Expr::cos(Expr::sym(th));
        let mut point = BTreeMap::new();
        point.insert(th, 0.0);
        assert_eq!(eval_numeric(&e, &point, &t).unwrap(), 1.0);
    }

    #[test]
    fn unbound_symbol_is_an_error() {
        let mut t = SymbolTable::new();
        let x = t.add("x", SymbolKind::Parameter, false);
        let e = Expr::sym(x);
        let point = BTreeMap::new();
        match eval_numeric(&e, &point, &t) {
            Err(KernelError::UnboundSymbol(name)) => assert_eq!(name, "x"),
            other => panic!("expected UnboundSymbol, got {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_at_eval() {
        let mut t = SymbolTable::new();
        let x = t.add("x", SymbolKind::Parameter, false);
        let e = Expr::pow(Expr::sym(x), -1);
        let mut point = BTreeMap::new();
        point.insert(x, 0.0);
        assert!(matches!(
            eval_numeric(&e, &point, &t),
            Err(KernelError::NonFiniteResult(_))
        ));
    }
}
