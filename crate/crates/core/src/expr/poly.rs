//! Polynomials in one or two discrete index symbols with `Expr` coefficients.
//!
//! Steering phases and their parameter derivatives live here: the index never
//! appears inside an `Expr`, only as a degree. Total degree per index is
//! capped at 8, matching the precomputed power-sum table.

use std::collections::BTreeMap;

use num::BigRational;

use crate::error::KernelError;

use super::canon::{self, Mono, SimplifyOptions};
use super::{Expr, SymbolId, SymbolTable};

/// Hard representation bound on the degree per index.
pub const DEGREE_CAP: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPoly {
    /// 1 or 2 index symbols, sorted by id.
    indices: Vec<SymbolId>,
    /// Degree tuple (aligned with `indices`) -> canonical nonzero coefficient.
    terms: BTreeMap<Vec<u8>, Expr>,
}

impl IndexPoly {
    pub fn zero(indices: Vec<SymbolId>) -> IndexPoly {
        let mut indices = indices;
        indices.sort_unstable();
        indices.dedup();
        IndexPoly {
            indices,
            terms: BTreeMap::new(),
        }
    }

    /// Lift an index-free expression to a degree-0 polynomial.
    pub fn constant(e: Expr, indices: Vec<SymbolId>) -> IndexPoly {
        let mut p = IndexPoly::zero(indices);
        if !e.is_zero() {
            p.terms.insert(vec![0; p.indices.len()], e);
        }
        p
    }

    /// Extract an index polynomial from a raw expression in which the given
    /// index symbols appear as ordinary symbols.
    pub fn from_expr(
        raw: &Expr,
        indices: &[SymbolId],
        table: &SymbolTable,
    ) -> Result<IndexPoly, KernelError> {
        Self::from_expr_with(raw, indices, table, &SimplifyOptions::default(), DEGREE_CAP)
    }

    pub fn from_expr_with(
        raw: &Expr,
        indices: &[SymbolId],
        table: &SymbolTable,
        opts: &SimplifyOptions,
        degree_cap: u32,
    ) -> Result<IndexPoly, KernelError> {
        let mut idx: Vec<SymbolId> = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() || idx.len() > 2 {
            return Err(KernelError::NonPolynomialIndex(format!(
                "{} index symbols (1 or 2 supported)",
                idx.len()
            )));
        }
        let poly = canon::normalize(raw, opts)?;
        // Group monomials by their index-degree tuple.
        let mut grouped: BTreeMap<Vec<u8>, BTreeMap<Mono, BigRational>> = BTreeMap::new();
        for (mono, coeff) in &poly.terms {
            let mut degrees = vec![0u8; idx.len()];
            let mut rest = Mono::new();
            for (base, &exp) in mono {
                if let Expr::Sym(s) = base {
                    if let Some(pos) = idx.iter().position(|i| i == s) {
                        if exp < 0 {
                            return Err(KernelError::NonPolynomialIndex(
                                table.name(*s).to_string(),
                            ));
                        }
                        if exp as u32 > degree_cap {
                            return Err(KernelError::DegreeOverflow {
                                degree: exp as u32,
                                cap: degree_cap,
                            });
                        }
                        degrees[pos] = exp as u8;
                        continue;
                    }
                }
                // Index symbols may not hide inside trig arguments or
                // irreducible denominators.
                let inside = base.free_symbols();
                if let Some(bad) = idx.iter().find(|i| inside.contains(i)) {
                    return Err(KernelError::NonPolynomialIndex(
                        table.name(*bad).to_string(),
                    ));
                }
                rest.insert(base.clone(), exp);
            }
            let slot = grouped.entry(degrees).or_default();
            match slot.entry(rest) {
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    use num::Zero;
                    let sum = o.get().clone() + coeff.clone();
                    if sum.is_zero() {
                        o.remove();
                    } else {
                        *o.get_mut() = sum;
                    }
                }
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(coeff.clone());
                }
            }
        }
        let mut terms = BTreeMap::new();
        for (degrees, coeff_terms) in grouped {
            if coeff_terms.is_empty() {
                continue;
            }
            let exprs: Vec<Expr> = coeff_terms
                .iter()
                .map(|(m, c)| canon::rebuild_mono(m, c))
                .collect();
            let coeff = if exprs.len() == 1 {
                exprs.into_iter().next().unwrap()
            } else {
                Expr::Add(exprs)
            };
            terms.insert(degrees, coeff);
        }
        Ok(IndexPoly {
            indices: idx,
            terms,
        })
    }

    pub fn indices(&self) -> &[SymbolId] {
        &self.indices
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, degrees: &[u8]) -> Option<&Expr> {
        self.terms.get(degrees)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &Expr)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Highest degree across all indices.
    pub fn max_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|d| d.iter().copied())
            .max()
            .unwrap_or(0) as u32
    }

    /// Highest degree in one index.
    pub fn degree_of(&self, index: SymbolId) -> Result<u32, KernelError> {
        let pos = self.position(index)?;
        Ok(self
            .terms
            .keys()
            .map(|d| d[pos])
            .max()
            .unwrap_or(0) as u32)
    }

    pub(crate) fn position(&self, index: SymbolId) -> Result<usize, KernelError> {
        self.indices
            .iter()
            .position(|i| *i == index)
            .ok_or_else(|| KernelError::MissingIndex(format!("symbol id {}", index.index())))
    }

    /// Build from already-canonical parts; used by calculus.
    pub(crate) fn from_parts(
        indices: Vec<SymbolId>,
        terms: BTreeMap<Vec<u8>, Expr>,
    ) -> IndexPoly {
        IndexPoly { indices, terms }
    }

    /// Reassemble the raw expression `sum coeff * idx^deg`. The result is not
    /// canonical (index symbols appear as `Sym` nodes); callers canonicalize
    /// or print as needed.
    pub fn to_raw_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::zero();
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (degrees, coeff) in &self.terms {
            let mut factors = vec![coeff.clone()];
            for (pos, &deg) in degrees.iter().enumerate() {
                if deg > 0 {
                    factors.push(if deg == 1 {
                        Expr::sym(self.indices[pos])
                    } else {
                        Expr::pow(Expr::sym(self.indices[pos]), deg as i32)
                    });
                }
            }
            terms.push(if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                Expr::Mul(factors)
            });
        }
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        }
    }

    pub fn print(&self, table: &SymbolTable) -> String {
        super::print(&self.to_raw_expr(), table)
    }

    /// Evaluate at a numeric binding of the coefficient symbols and concrete
    /// integer values for the indices (aligned with `indices()`).
    pub fn eval_at(
        &self,
        point: &BTreeMap<SymbolId, f64>,
        index_values: &[i64],
        table: &SymbolTable,
    ) -> Result<f64, KernelError> {
        let mut acc = 0.0;
        for (degrees, coeff) in &self.terms {
            let c = super::eval_numeric(coeff, point, table)?;
            let mut term = c;
            for (pos, &deg) in degrees.iter().enumerate() {
                term *= (index_values[pos] as f64).powi(deg as i32);
            }
            acc += term;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_expr_only, Parsed, SymbolKind};

    fn table() -> SymbolTable {
        let mut t = SymbolTable::new();
        t.add("a", SymbolKind::StructuralConstant, true);
        t.add("m", SymbolKind::Index, false);
        t.add("n", SymbolKind::Index, false);
        t
    }

    #[test]
    fn constant_lift_and_zero() {
        let t = table();
        let m = t.lookup("m").unwrap();
        let z = IndexPoly::zero(vec![m]);
        assert!(z.is_zero());
        let c = IndexPoly::constant(Expr::one(), vec![m]);
        assert_eq!(c.coeff(&[0]), Some(&Expr::one()));
    }

    #[test]
    fn two_index_extraction() {
        let t = table();
        let p = match parse("a*m*n + m^2", &t).unwrap() {
            Parsed::Poly(p) => p,
            other => panic!("expected poly, got {other:?}"),
        };
        assert_eq!(p.indices().len(), 2);
        let a = parse_expr_only("a", &t).unwrap();
        assert_eq!(p.coeff(&[1, 1]), Some(&a));
        assert_eq!(p.coeff(&[2, 0]), Some(&Expr::one()));
    }

    #[test]
    fn index_inside_trig_rejected() {
        let t = table();
        match parse("sin(m)", &t) {
            Err(KernelError::NonPolynomialIndex(name)) => assert_eq!(name, "m"),
            other => panic!("expected NonPolynomialIndex, got {other:?}"),
        }
    }

    #[test]
    fn negative_index_power_rejected() {
        let t = table();
        assert!(matches!(
            parse("1/m", &t),
            Err(KernelError::NonPolynomialIndex(_))
        ));
    }

    #[test]
    fn degree_overflow_detected() {
        let t = table();
        assert!(matches!(
            parse("m^9", &t),
            Err(KernelError::DegreeOverflow { degree: 9, cap: 8 })
        ));
    }

    #[test]
    fn eval_matches_direct_expansion() {
        let t = table();
        let p = match parse("a*m^2 + 3*m + 1", &t).unwrap() {
            Parsed::Poly(p) => p,
            _ => unreachable!(),
        };
        let a = t.lookup("a").unwrap();
        let mut point = BTreeMap::new();
        point.insert(a, 2.0);
        let v = p.eval_at(&point, &[5], &t).unwrap();
        assert!((v - (2.0 * 25.0 + 15.0 + 1.0)).abs() < 1e-12);
    }
}
