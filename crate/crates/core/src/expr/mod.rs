//! Immutable expression trees over exact rational constants.
//!
//! The canonical form maintained by [`canonicalize`] is an expanded sum of
//! monomials: `Add` holds sorted, collected monomials; `Mul` holds one
//! optional rational coefficient followed by sorted atomic factors; `Pow`
//! exponents are integers and never 0 or 1; `sin` appears only to the power
//! ±1 (even powers are rewritten through `1 - cos^2`). Structural equality of
//! canonical forms is the symbolic-verification equality test.

mod canon;
mod compare;
mod eval;
mod parse;
mod poly;
mod print;
mod symbol;

pub use canon::{canonicalize, canonicalize_with, substitute, SimplifyOptions};
pub use compare::{equals_canonical, Comparison, RatioDiagnostic, Verdict};
pub(crate) use compare::sample_symbol as sample_symbol_value;
pub use eval::eval_numeric;
pub use parse::{parse, parse_expr_only, parse_raw, Parsed};
pub use poly::{IndexPoly, DEGREE_CAP};
pub use print::print;
pub use symbol::{SymbolId, SymbolInfo, SymbolKind, SymbolTable};

use std::collections::BTreeSet;

use num::BigRational;

/// Symbolic expression node. Values are immutable; every operation returns a
/// new tree. The derived `Ord` (variant order, then contents) is the fixed
/// total order used for canonical sorting.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(BigRational),
    Sym(SymbolId),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(BigRational::from_integer(n.into()))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        assert!(den != 0, "zero denominator");
        Expr::Const(BigRational::new(num.into(), den.into()))
    }

    pub fn sym(id: SymbolId) -> Expr {
        Expr::Sym(id)
    }

    pub fn pow(base: Expr, exp: i32) -> Expr {
        Expr::Pow(Box::new(base), exp)
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::Sin(Box::new(arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::Cos(Box::new(arg))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c == &BigRational::from_integer(0.into()))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c == &BigRational::from_integer(1.into()))
    }

    /// All symbols referenced anywhere in the tree.
    pub fn free_symbols(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<SymbolId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Sym(s) => {
                out.insert(*s);
            }
            Expr::Add(xs) | Expr::Mul(xs) => {
                for x in xs {
                    x.collect_symbols(out);
                }
            }
            Expr::Pow(b, _) => b.collect_symbols(out),
            Expr::Sin(a) | Expr::Cos(a) => a.collect_symbols(out),
        }
    }

    /// Number of nodes; used in tests and diagnostics.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Sym(_) => 1,
            Expr::Add(xs) | Expr::Mul(xs) => 1 + xs.iter().map(Expr::node_count).sum::<usize>(),
            Expr::Pow(b, _) => 1 + b.node_count(),
            Expr::Sin(a) | Expr::Cos(a) => 1 + a.node_count(),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Mul(vec![Expr::int(-1), rhs])])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Mul(vec![Expr::int(-1), self])
    }
}
