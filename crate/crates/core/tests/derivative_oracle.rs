//! Symbolic derivatives against central finite differences on 200 seeded
//! random (expression, point) cases.

use std::collections::BTreeMap;

use crbforge_core::calculus::differentiate;
use crbforge_core::expr::{eval_numeric, Expr, SymbolId, SymbolKind, SymbolTable};
use crbforge_core::rng::Lcg64;

const CASES: usize = 200;
const FD_H: f64 = 1e-6;
const TOL: f64 = 1e-6;

/// Grammar-directed random expression: rational polynomials of the symbols
/// with sin/cos of linear arguments — the family the scenarios live in.
fn random_expr(rng: &mut Lcg64, syms: &[SymbolId], depth: u32) -> Expr {
    let pick = rng.next_u64() % if depth == 0 { 2 } else { 7 };
    match pick {
        0 => Expr::int((rng.next_u64() % 9) as i64 - 4),
        1 => Expr::sym(*rng.choice(syms)),
        2 => Expr::Add(vec![
            random_expr(rng, syms, depth - 1),
            random_expr(rng, syms, depth - 1),
        ]),
        3 => Expr::Mul(vec![
            random_expr(rng, syms, depth - 1),
            random_expr(rng, syms, depth - 1),
        ]),
        4 => {
            let k = [(-2i32), -1, 2, 3][(rng.next_u64() % 4) as usize];
            Expr::pow(random_expr(rng, syms, depth - 1), k)
        }
        5 => Expr::sin(linear_arg(rng, syms)),
        _ => Expr::cos(linear_arg(rng, syms)),
    }
}

fn linear_arg(rng: &mut Lcg64, syms: &[SymbolId]) -> Expr {
    let c = (rng.next_u64() % 3) as i64 + 1;
    Expr::int(c) * Expr::sym(*rng.choice(syms))
}

#[test]
fn two_hundred_randomized_cases_agree_with_central_differences() {
    let mut t = SymbolTable::new();
    let syms = vec![
        t.add("x", SymbolKind::Parameter, false),
        t.add("y", SymbolKind::Parameter, false),
        t.add("z", SymbolKind::Parameter, true),
    ];
    let mut rng = Lcg64::new(2024);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < CASES {
        attempts += 1;
        assert!(
            attempts < CASES * 50,
            "random generator starved: only {checked} usable cases"
        );
        let e = random_expr(&mut rng, &syms, 4);
        let wrt = *rng.choice(&syms);

        let mut point: BTreeMap<SymbolId, f64> = BTreeMap::new();
        for &s in &syms {
            let sign = if rng.next_u64() % 2 == 0 { 1.0 } else { -1.0 };
            point.insert(s, sign * rng.uniform(0.4, 2.0));
        }

        let Ok(sym_deriv) = differentiate(&e, wrt) else {
            continue;
        };
        let Ok(analytic) = eval_numeric(&sym_deriv, &point, &t) else {
            continue;
        };

        let base = point[&wrt];
        let mut plus = point.clone();
        plus.insert(wrt, base + FD_H);
        let mut minus = point.clone();
        minus.insert(wrt, base - FD_H);
        let (Ok(fp), Ok(fm)) = (eval_numeric(&e, &plus, &t), eval_numeric(&e, &minus, &t))
        else {
            continue;
        };
        let central = (fp - fm) / (2.0 * FD_H);

        // Skip numerically hostile cases (poles near the sample point make
        // the finite difference itself meaningless).
        if !central.is_finite() || central.abs() > 1e6 {
            continue;
        }
        let err = (analytic - central).abs() / central.abs().max(1.0);
        assert!(
            err <= TOL,
            "case {checked}: derivative mismatch (analytic {analytic}, central {central}, rel {err:.2e})"
        );
        checked += 1;
    }
    assert_eq!(checked, CASES);
}
