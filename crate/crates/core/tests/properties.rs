//! Property tests for the expression kernel: canonical-form idempotence,
//! value preservation, print/parse round trips, comparator symmetry,
//! derivative linearity, and SSA plan safety.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crbforge_core::calculus::differentiate;
use crbforge_core::expr::{
    canonicalize, equals_canonical, eval_numeric, parse_expr_only, print, Expr, SymbolId,
    SymbolKind, SymbolTable, Verdict,
};

fn table() -> (SymbolTable, Vec<SymbolId>) {
    let mut t = SymbolTable::new();
    let syms = vec![
        t.add("x", SymbolKind::Parameter, false),
        t.add("y", SymbolKind::Parameter, false),
        t.add("z", SymbolKind::Parameter, true),
    ];
    (t, syms)
}

fn arb_expr(syms: Vec<SymbolId>) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(Expr::int),
        ((-6i64..=6), (1i64..=6)).prop_map(|(n, d)| Expr::rational(n, d)),
        proptest::sample::select(syms).prop_map(Expr::sym),
    ];
    leaf.prop_recursive(4, 48, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::Add),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::Mul),
            (inner.clone(), (-2i32..=3)).prop_map(|(e, k)| Expr::pow(e, k)),
            inner.clone().prop_map(Expr::sin),
            inner.prop_map(Expr::cos),
        ]
    })
}

fn sample_bindings(
    syms: &[SymbolId],
    seed: u64,
) -> BTreeMap<SymbolId, f64> {
    let mut rng = crbforge_core::rng::Lcg64::new(seed);
    syms.iter()
        .map(|&s| {
            let sign = if rng.next_u64() % 2 == 0 { 1.0 } else { -1.0 };
            (s, sign * rng.uniform(0.4, 2.2))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonicalize_is_idempotent(e in table().1.pipe_expr()) {
        let (t, _) = table();
        let _ = &t;
        if let Ok(once) = canonicalize(&e) {
            let twice = canonicalize(&once).expect("canonical input re-canonicalizes");
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn canonicalize_preserves_value(e in table().1.pipe_expr(), seed in 0u64..1000) {
        let (t, syms) = table();
        let Ok(c) = canonicalize(&e) else { return Ok(()); };
        let point = sample_bindings(&syms, seed);
        let (Ok(v0), Ok(v1)) = (
            eval_numeric(&e, &point, &t),
            eval_numeric(&c, &point, &t),
        ) else { return Ok(()); };
        let scale = v0.abs().max(1.0);
        prop_assert!(
            (v0 - v1).abs() <= 1e-10 * scale,
            "raw {} vs canonical {}", v0, v1
        );
    }

    #[test]
    fn print_parse_round_trip(e in table().1.pipe_expr()) {
        let (t, _) = table();
        let Ok(c) = canonicalize(&e) else { return Ok(()); };
        let text = print(&c, &t);
        let back = parse_expr_only(&text, &t)
            .unwrap_or_else(|err| panic!("`{text}` failed to reparse: {err}"));
        prop_assert_eq!(c, back, "round trip through `{}`", text);
    }

    #[test]
    fn equals_is_reflexive_and_symmetric(e in table().1.pipe_expr(), f in table().1.pipe_expr()) {
        let (t, _) = table();
        // Reflexivity on the Equal verdict holds whenever a canonical form
        // exists (nowhere-defined expressions legitimately stay undecided).
        if canonicalize(&e).is_ok() {
            prop_assert_eq!(equals_canonical(&e, &e, &t, 9).verdict, Verdict::Equal);
        }
        let ab = equals_canonical(&e, &f, &t, 9).verdict;
        let ba = equals_canonical(&f, &e, &t, 9).verdict;
        prop_assert_eq!(ab == Verdict::Equal, ba == Verdict::Equal);
    }

    #[test]
    fn derivative_is_linear(
        e1 in table().1.pipe_expr(),
        e2 in table().1.pipe_expr(),
        num in -5i64..=5,
        den in 1i64..=4,
    ) {
        let (t, syms) = table();
        let _ = &t;
        let x = syms[0];
        let a = Expr::rational(num, den);
        let combined = a.clone() * e1.clone() + e2.clone();
        let (Ok(lhs), Ok(d1), Ok(d2)) = (
            differentiate(&combined, x),
            differentiate(&e1, x),
            differentiate(&e2, x),
        ) else { return Ok(()); };
        let rhs = canonicalize(&(a * d1 + d2)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

/// Adapter so the strategy reads naturally above.
trait PipeExpr {
    fn pipe_expr(self) -> BoxedStrategy<Expr>;
}

impl PipeExpr for Vec<SymbolId> {
    fn pipe_expr(self) -> BoxedStrategy<Expr> {
        arb_expr(self).boxed()
    }
}

mod plan_ssa {
    use super::*;
    use crbforge_core::pipeline::{
        analyze, execute, validate_plan, DeterministicPatcher, ErrorKind, Injection, PlanOp,
        PlanStep, StepParams,
    };
    use crbforge_core::scenario::load_scenario;
    use std::collections::BTreeSet;

    const MINIMAL: &str = r#"{
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

    /// Random straight-line plans of simplify steps with input names drawn
    /// from a pool that includes undefined names.
    const NAME_POOL: [&str; 8] = ["phi", "gain_sq", "noise", "a", "b", "c", "ghost", "other"];
    const OUT_POOL: [&str; 3] = ["a", "b", "c"];

    fn arb_plan() -> impl Strategy<Value = Vec<PlanStep>> {
        proptest::collection::vec(
            (
                proptest::sample::select(&NAME_POOL[..]),
                proptest::sample::select(&OUT_POOL[..]),
            ),
            0..6,
        )
        .prop_map(|pairs| {
            pairs
                .into_iter()
                .enumerate()
                .map(|(index, (input, output))| PlanStep {
                    index,
                    op: PlanOp::Simplify,
                    inputs: vec![input.to_string()],
                    params: StepParams::default(),
                    output: output.to_string(),
                })
                .collect()
        })
    }

    fn ssa_by_hand(plan: &[PlanStep], seeded: &BTreeSet<String>) -> bool {
        let mut defined = seeded.clone();
        for step in plan {
            if !defined.contains(&step.inputs[0]) || defined.contains(&step.output) {
                return false;
            }
            defined.insert(step.output.clone());
        }
        true
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn validator_matches_manual_ssa_check(plan in arb_plan()) {
            let spec = load_scenario(MINIMAL).unwrap();
            let ws = analyze(&spec);
            let seeded = ws.seeded_names();
            let expected = ssa_by_hand(&plan, &seeded);
            prop_assert_eq!(validate_plan(&plan, &seeded).is_ok(), expected);
        }

        #[test]
        fn validated_plans_never_read_undefined_names(plan in arb_plan()) {
            let spec = load_scenario(MINIMAL).unwrap();
            let mut ws = analyze(&spec);
            let seeded = ws.seeded_names();
            if validate_plan(&plan, &seeded).is_ok() {
                let outcome = execute(
                    &plan,
                    &mut ws,
                    &DeterministicPatcher,
                    &Injection::default(),
                    1,
                    false,
                );
                for record in outcome.records {
                    if let Some(err) = record.error {
                        prop_assert_ne!(err.kind, ErrorKind::MissingInput);
                    }
                }
            }
        }
    }
}
