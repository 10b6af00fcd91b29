//! Derivation workspace: named values seeded by the analyzer.

use std::collections::BTreeMap;

use crate::error::KernelError;
use crate::expr::{Expr, IndexPoly, Parsed, SymbolTable};
use crate::fisher::SymMatrix;
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone)]
pub enum Value {
    Scalar(Expr),
    Poly(IndexPoly),
    Matrix(SymMatrix),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Poly(_) => "poly",
            Value::Matrix(_) => "matrix",
        }
    }

    pub fn as_scalar(&self) -> Option<&Expr> {
        match self {
            Value::Scalar(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_poly(&self) -> Option<&IndexPoly> {
        match self {
            Value::Poly(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&SymMatrix> {
        match self {
            Value::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn print(&self, table: &SymbolTable) -> String {
        match self {
            Value::Scalar(e) => crate::expr::print(e, table),
            Value::Poly(p) => p.print(table),
            Value::Matrix(m) => {
                let mut rows = Vec::new();
                for i in 0..m.dim() {
                    let cols: Vec<String> = (0..m.dim())
                        .map(|j| crate::expr::print(m.entry(i, j), table))
                        .collect();
                    rows.push(format!("[{}]", cols.join(", ")));
                }
                format!("[{}]", rows.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Workspace<'a> {
    pub spec: &'a ScenarioSpec,
    values: BTreeMap<String, Value>,
}

impl<'a> Workspace<'a> {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn insert(&mut self, name: String, value: Value) {
        self.values.insert(name, value);
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.values.keys()
    }

    pub fn seeded_names(&self) -> std::collections::BTreeSet<String> {
        self.values.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Parse expression text against the scenario symbols, expanding derived
    /// symbols, splitting into scalar or index polynomial.
    pub fn parse_value(&self, text: &str) -> Result<Value, KernelError> {
        let table = &self.spec.table;
        let raw = crate::expr::parse_raw(text, table)?;
        let expanded = expand(&raw, &self.spec.derived);
        let index_syms: Vec<_> = expanded
            .free_symbols()
            .into_iter()
            .filter(|s| table.is_index(*s))
            .collect();
        if index_syms.is_empty() {
            Ok(Value::Scalar(crate::expr::canonicalize(&expanded)?))
        } else {
            Ok(Value::Poly(IndexPoly::from_expr(
                &expanded, &index_syms, table,
            )?))
        }
    }
}

fn expand(raw: &Expr, derived: &BTreeMap<crate::expr::SymbolId, Expr>) -> Expr {
    if derived.is_empty() {
        return raw.clone();
    }
    fn walk(e: &Expr, map: &BTreeMap<crate::expr::SymbolId, Expr>) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Sym(s) => map.get(s).cloned().unwrap_or_else(|| e.clone()),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| walk(x, map)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| walk(x, map)).collect()),
            Expr::Pow(b, k) => Expr::Pow(Box::new(walk(b, map)), *k),
            Expr::Sin(a) => Expr::sin(walk(a, map)),
            Expr::Cos(a) => Expr::cos(walk(a, map)),
        }
    }
    walk(raw, derived)
}

/// Seed the workspace from a validated scenario: the phase polynomial, gain
/// and noise scalars, and one helper value per derived symbol.
pub fn analyze(spec: &ScenarioSpec) -> Workspace<'_> {
    let mut values = BTreeMap::new();
    values.insert("phi".to_string(), Value::Poly(spec.phase.clone()));
    values.insert("gain_sq".to_string(), Value::Scalar(spec.gain_sq.clone()));
    values.insert("noise".to_string(), Value::Scalar(spec.noise.clone()));
    for (id, def) in &spec.derived {
        let name = spec.table.name(*id).to_ascii_lowercase();
        let canonical = crate::expr::canonicalize(def).expect("derived definitions canonicalize");
        values.insert(name, Value::Scalar(canonical));
    }
    Workspace { spec, values }
}

/// Convert a workspace value into the `Parsed` shape validation consumes.
pub fn value_to_parsed(v: &Value) -> Option<Parsed> {
    match v {
        Value::Scalar(e) => Some(Parsed::Expr(e.clone())),
        Value::Poly(p) => Some(Parsed::Poly(p.clone())),
        Value::Matrix(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn analyze_seeds_phase_gain_noise() {
        let spec = builtin("S01").unwrap();
        let ws = analyze(&spec);
        assert!(matches!(ws.get("phi"), Some(Value::Poly(_))));
        assert!(matches!(ws.get("gain_sq"), Some(Value::Scalar(_))));
        assert!(matches!(ws.get("noise"), Some(Value::Scalar(_))));
        assert_eq!(ws.len(), 3);
    }

    #[test]
    fn analyze_seeds_derived_helpers() {
        let spec = builtin("S04").unwrap();
        let ws = analyze(&spec);
        // u, v helpers plus phi/gain_sq/noise.
        assert_eq!(ws.len(), 5);
        assert!(matches!(ws.get("u"), Some(Value::Scalar(_))));
        assert!(matches!(ws.get("v"), Some(Value::Scalar(_))));
    }

    #[test]
    fn expanded_phase_matches_unexpanded_numerically() {
        let spec = builtin("S04").unwrap();
        // Evaluate the expanded phase and the raw text with derived symbols
        // bound numerically; they must agree.
        let pts = crate::validate::sample_points(&spec, 5, 4);
        let theta = spec.table.lookup("theta").unwrap();
        let psi = spec.table.lookup("psi").unwrap();
        for pt in pts {
            let t = pt.bindings[&theta];
            let s = pt.bindings[&psi];
            let mut with_derived = pt.bindings.clone();
            with_derived.insert(spec.table.lookup("u").unwrap(), s.cos() * t.sin());
            with_derived.insert(spec.table.lookup("v").unwrap(), s.sin());
            for tuple in [[0i64, 0], [1, 2], [3, 1]] {
                let expanded = spec.phase.eval_at(&pt.bindings, &tuple, &spec.table).unwrap();
                // Raw text evaluated through a fresh parse that keeps u, v.
                let raw = crate::expr::parse_raw(&spec.phase_text, &spec.table).unwrap();
                let raw_poly =
                    IndexPoly::from_expr(&raw, spec.phase.indices(), &spec.table).unwrap();
                let direct = raw_poly.eval_at(&with_derived, &tuple, &spec.table).unwrap();
                assert!(
                    (expanded - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                    "tuple {tuple:?}: {expanded} vs {direct}"
                );
            }
        }
    }
}
