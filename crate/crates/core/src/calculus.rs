//! Symbolic differentiation and closed-form summation over finite index
//! ranges.
//!
//! Sums always run over `0..L-1` for a symbolic range length `L`; each power
//! `m^k` is replaced by a precomputed Faulhaber polynomial in `L` with exact
//! rational coefficients.

use std::collections::BTreeMap;

use crate::error::KernelError;
use crate::expr::{
    canonicalize, canonicalize_with, Expr, IndexPoly, SimplifyOptions, SymbolId, SymbolTable,
};

/// Exact coefficients of `sum_{m=0}^{L-1} m^k` as a polynomial in `L`,
/// lowest degree first (constant term omitted — it is always zero). Entry
/// `k` has degree `k + 1`.
///
/// The table is hardcoded rather than generated from Bernoulli numbers; the
/// test below checks every entry against brute-force integer summation.
const FAULHABER: [&[(i64, i64)]; 9] = [
    // k = 0: L
    &[(1, 1)],
    // k = 1: -L/2 + L^2/2
    &[(-1, 2), (1, 2)],
    // k = 2: L/6 - L^2/2 + L^3/3
    &[(1, 6), (-1, 2), (1, 3)],
    // k = 3: L^2/4 - L^3/2 + L^4/4
    &[(0, 1), (1, 4), (-1, 2), (1, 4)],
    // k = 4: -L/30 + L^3/3 - L^4/2 + L^5/5
    &[(-1, 30), (0, 1), (1, 3), (-1, 2), (1, 5)],
    // k = 5: -L^2/12 + 5 L^4/12 - L^5/2 + L^6/6
    &[(0, 1), (-1, 12), (0, 1), (5, 12), (-1, 2), (1, 6)],
    // k = 6: L/42 - L^3/6 + L^5/2 - L^6/2 + L^7/7
    &[(1, 42), (0, 1), (-1, 6), (0, 1), (1, 2), (-1, 2), (1, 7)],
    // k = 7: L^2/12 - 7 L^4/24 + 7 L^6/12 - L^7/2 + L^8/8
    &[(0, 1), (1, 12), (0, 1), (-7, 24), (0, 1), (7, 12), (-1, 2), (1, 8)],
    // k = 8: -L/30 + 2 L^3/9 - 7 L^5/15 + 2 L^7/3 - L^8/2 + L^9/9
    &[(-1, 30), (0, 1), (2, 9), (0, 1), (-7, 15), (0, 1), (2, 3), (-1, 2), (1, 9)],
];

/// Largest exponent the closed-form table covers.
pub const MAX_SUM_EXPONENT: u32 = 8;

/// Closed form of `sum_{m=0}^{L-1} m^k` in the range-length symbol `length`.
pub fn faulhaber_sum(k: u32, length: SymbolId) -> Result<Expr, KernelError> {
    if k > MAX_SUM_EXPONENT {
        return Err(KernelError::ExponentOutOfTable(k));
    }
    let coeffs = FAULHABER[k as usize];
    let mut terms = Vec::new();
    for (degree_minus_1, &(num, den)) in coeffs.iter().enumerate() {
        if num == 0 {
            continue;
        }
        let degree = degree_minus_1 as i32 + 1;
        let c = Expr::rational(num, den);
        let p = if degree == 1 {
            Expr::sym(length)
        } else {
            Expr::pow(Expr::sym(length), degree)
        };
        terms.push(c * p);
    }
    canonicalize(&Expr::Add(terms))
}

/// Exact derivative with respect to a parameter symbol, canonicalized.
pub fn differentiate(e: &Expr, wrt: SymbolId) -> Result<Expr, KernelError> {
    canonicalize(&derive_raw(e, wrt))
}

fn derive_raw(e: &Expr, wrt: SymbolId) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Sym(s) => {
            if *s == wrt {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Add(xs) => Expr::Add(xs.iter().map(|x| derive_raw(x, wrt)).collect()),
        Expr::Mul(xs) => {
            let mut terms = Vec::with_capacity(xs.len());
            for (i, x) in xs.iter().enumerate() {
                let mut factors: Vec<Expr> = Vec::with_capacity(xs.len());
                factors.push(derive_raw(x, wrt));
                for (j, y) in xs.iter().enumerate() {
                    if i != j {
                        factors.push(y.clone());
                    }
                }
                terms.push(Expr::Mul(factors));
            }
            Expr::Add(terms)
        }
        Expr::Pow(b, k) => {
            // d/dx b^k = k * b^(k-1) * b'
            Expr::Mul(vec![
                Expr::int(*k as i64),
                Expr::Pow(b.clone(), k - 1),
                derive_raw(b, wrt),
            ])
        }
        Expr::Sin(a) => Expr::Mul(vec![Expr::cos(a.as_ref().clone()), derive_raw(a, wrt)]),
        Expr::Cos(a) => Expr::Mul(vec![
            Expr::int(-1),
            Expr::sin(a.as_ref().clone()),
            derive_raw(a, wrt),
        ]),
    }
}

/// Coefficient-wise derivative of an index polynomial.
pub fn differentiate_poly(
    p: &IndexPoly,
    wrt: SymbolId,
    table: &SymbolTable,
) -> Result<IndexPoly, KernelError> {
    if table.is_index(wrt) {
        return Err(KernelError::IndexDifferentiation(
            table.name(wrt).to_string(),
        ));
    }
    let mut terms = BTreeMap::new();
    for (degrees, coeff) in p.terms() {
        let d = differentiate(coeff, wrt)?;
        if !d.is_zero() {
            terms.insert(degrees.clone(), d);
        }
    }
    Ok(IndexPoly::from_parts(p.indices().to_vec(), terms))
}

/// Convolution product of two index polynomials over the same index set.
///
/// `degree_cap` bounds the resulting per-index degree; the default cap equals
/// the Faulhaber table bound. With `split` the product is accumulated
/// term-by-term against the hard table bound instead of the pessimistic
/// `deg(p) + deg(q)` pre-check — the patched path for injected caps.
pub fn mul_poly(p: &IndexPoly, q: &IndexPoly, degree_cap: u32) -> Result<IndexPoly, KernelError> {
    mul_poly_with(p, q, degree_cap, false, &SimplifyOptions::default())
}

pub fn mul_poly_with(
    p: &IndexPoly,
    q: &IndexPoly,
    degree_cap: u32,
    split: bool,
    opts: &SimplifyOptions,
) -> Result<IndexPoly, KernelError> {
    if p.indices() != q.indices() {
        return Err(KernelError::MissingIndex(
            "operands have different index sets".to_string(),
        ));
    }
    if !split {
        let combined = p.max_degree() + q.max_degree();
        if combined > degree_cap {
            return Err(KernelError::DegreeOverflow {
                degree: combined,
                cap: degree_cap,
            });
        }
    }
    let n = p.indices().len();
    let mut acc: BTreeMap<Vec<u8>, Vec<Expr>> = BTreeMap::new();
    for (dp, cp) in p.terms() {
        for (dq, cq) in q.terms() {
            let mut degrees = vec![0u8; n];
            for i in 0..n {
                let sum = dp[i] as u32 + dq[i] as u32;
                let bound = if split { MAX_SUM_EXPONENT } else { degree_cap };
                if sum > bound {
                    return Err(KernelError::DegreeOverflow {
                        degree: sum,
                        cap: bound,
                    });
                }
                degrees[i] = sum as u8;
            }
            acc.entry(degrees)
                .or_default()
                .push(cp.clone() * cq.clone());
        }
    }
    let mut terms = BTreeMap::new();
    for (degrees, parts) in acc {
        let coeff = canonicalize_with(&Expr::Add(parts), opts)?;
        if !coeff.is_zero() {
            terms.insert(degrees, coeff);
        }
    }
    Ok(IndexPoly::from_parts(p.indices().to_vec(), terms))
}

/// Result of summing one index out of a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub enum Summed {
    Expr(Expr),
    Poly(IndexPoly),
}

impl Summed {
    pub fn into_expr(self) -> Result<Expr, KernelError> {
        match self {
            Summed::Expr(e) => Ok(e),
            Summed::Poly(_) => Err(KernelError::MissingIndex(
                "sum left a polynomial in the remaining index".to_string(),
            )),
        }
    }
}

/// Replace `sum_{over=0}^{length-1}` by Faulhaber closed forms. A two-index
/// polynomial yields a polynomial in the remaining index.
pub fn sum_index(
    p: &IndexPoly,
    over: SymbolId,
    length: SymbolId,
    table: &SymbolTable,
) -> Result<Summed, KernelError> {
    sum_index_with(p, over, length, table, &SimplifyOptions::default())
}

pub fn sum_index_with(
    p: &IndexPoly,
    over: SymbolId,
    length: SymbolId,
    table: &SymbolTable,
    opts: &SimplifyOptions,
) -> Result<Summed, KernelError> {
    let pos = p.position(over).map_err(|_| {
        KernelError::MissingIndex(table.name(over).to_string())
    })?;
    let remaining: Vec<SymbolId> = p
        .indices()
        .iter()
        .copied()
        .filter(|i| *i != over)
        .collect();

    if remaining.is_empty() {
        let mut parts = Vec::new();
        for (degrees, coeff) in p.terms() {
            let s = faulhaber_sum(degrees[pos] as u32, length)?;
            parts.push(coeff.clone() * s);
        }
        let e = canonicalize_with(&Expr::Add(parts), opts)?;
        Ok(Summed::Expr(e))
    } else {
        let rpos = 1 - pos;
        let mut acc: BTreeMap<Vec<u8>, Vec<Expr>> = BTreeMap::new();
        for (degrees, coeff) in p.terms() {
            let s = faulhaber_sum(degrees[pos] as u32, length)?;
            acc.entry(vec![degrees[rpos]])
                .or_default()
                .push(coeff.clone() * s);
        }
        let mut terms = BTreeMap::new();
        for (degrees, parts) in acc {
            let coeff = canonicalize_with(&Expr::Add(parts), opts)?;
            if !coeff.is_zero() {
                terms.insert(degrees, coeff);
            }
        }
        Ok(Summed::Poly(IndexPoly::from_parts(remaining, terms)))
    }
}
