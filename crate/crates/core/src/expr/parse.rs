//! Recursive-descent parser for the ASCII expression grammar.
//!
//! Grammar sketch (whitespace insignificant):
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := unary (('*'|'/') unary)*
//! unary   := '-' unary | postfix
//! postfix := primary ('^' exponent)*
//! primary := integer | identifier | 'sin' '(' expr ')' | 'cos' '(' expr ')' | '(' expr ')'
//! exponent := integer | '-' integer | '(' '-'? integer ')'
//! ```
//!
//! `/` is sugar for multiplication by the right operand's inverse power, and
//! `^` binds tighter than unary minus. Identifiers must be registered in the
//! symbol table; floating-point literals are rejected.

use num::BigInt;

use crate::error::KernelError;

use super::{canonicalize, Expr, IndexPoly, SymbolTable};

/// Result of parsing: a plain expression, or an index polynomial when the
/// text references index symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Expr(Expr),
    Poly(IndexPoly),
}

impl Parsed {
    pub fn into_expr(self) -> Result<Expr, KernelError> {
        match self {
            Parsed::Expr(e) => Ok(e),
            Parsed::Poly(p) => Err(KernelError::NonPolynomialIndex(format!(
                "expected an index-free expression, found polynomial in {} index(es)",
                p.indices().len()
            ))),
        }
    }

    pub fn into_poly(self) -> Result<IndexPoly, KernelError> {
        match self {
            Parsed::Poly(p) => Ok(p),
            Parsed::Expr(_) => Err(KernelError::MissingIndex(
                "expected a polynomial in at least one index symbol".to_string(),
            )),
        }
    }
}

/// Parse and canonicalize. Index symbols route the result into an
/// [`IndexPoly`]; everything else canonicalizes to an [`Expr`].
pub fn parse(text: &str, table: &SymbolTable) -> Result<Parsed, KernelError> {
    let raw = parse_raw(text, table)?;
    let index_syms: Vec<_> = raw
        .free_symbols()
        .into_iter()
        .filter(|s| table.is_index(*s))
        .collect();
    if index_syms.is_empty() {
        Ok(Parsed::Expr(canonicalize(&raw)?))
    } else {
        Ok(Parsed::Poly(IndexPoly::from_expr(&raw, &index_syms, table)?))
    }
}

/// Parse text that must not involve index symbols.
pub fn parse_expr_only(text: &str, table: &SymbolTable) -> Result<Expr, KernelError> {
    parse(text, table)?.into_expr()
}

/// Parse to the raw (uncanonicalized) tree; used where derived symbols are
/// substituted before canonicalization.
pub fn parse_raw(text: &str, table: &SymbolTable) -> Result<Expr, KernelError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        table,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    table: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn err(&self, expected: &str) -> KernelError {
        let found = if self.pos < self.bytes.len() {
            let rest = &self.text[self.pos..];
            let end = rest.len().min(8);
            format!("`{}`", &rest[..end])
        } else {
            "end of input".to_string()
        };
        KernelError::Syntax {
            position: self.pos,
            expected: expected.to_string(),
            found,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, KernelError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(Expr::Mul(vec![Expr::int(-1), self.term()?]));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, KernelError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(Expr::Pow(Box::new(self.unary()?), -1));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Mul(factors)
        })
    }

    fn unary(&mut self) -> Result<Expr, KernelError> {
        if self.eat(b'-') {
            Ok(Expr::Mul(vec![Expr::int(-1), self.unary()?]))
        } else {
            self.postfix()
        }
    }

    fn postfix(&mut self) -> Result<Expr, KernelError> {
        let mut base = self.primary()?;
        while self.eat(b'^') {
            let k = self.exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, KernelError> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let n = self.integer_i32()?;
            if !self.eat(b')') {
                return Err(self.err("`)` after exponent"));
            }
            Ok(if neg { -n } else { n })
        } else if self.eat(b'-') {
            Ok(-self.integer_i32()?)
        } else {
            self.integer_i32()
        }
    }

    fn integer_i32(&mut self) -> Result<i32, KernelError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("integer exponent"));
        }
        let s = &self.text[start..self.pos];
        self.skip_ws();
        s.parse::<i32>().map_err(|_| KernelError::ExponentOverflow)
    }

    fn primary(&mut self) -> Result<Expr, KernelError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("`)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.err("number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, KernelError> {
        let start = self.pos;
        while self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            return Err(self.err("integer (floating-point literals are not supported)"));
        }
        let digits = &self.text[start..self.pos];
        self.skip_ws();
        let n: BigInt = digits.parse().expect("digit run parses as BigInt");
        Ok(Expr::Const(num::BigRational::from_integer(n)))
    }

    fn identifier(&mut self) -> Result<Expr, KernelError> {
        let start = self.pos;
        while self
            .peek()
            .map(|c| c.is_ascii_alphanumeric() || c == b'_')
            .unwrap_or(false)
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        self.skip_ws();
        match name {
            "sin" | "cos" => {
                if !self.eat(b'(') {
                    return Err(self.err("`(` after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("`)` closing function argument"));
                }
                Ok(if name == "sin" {
                    Expr::sin(arg)
                } else {
                    Expr::cos(arg)
                })
            }
            _ => {
                let id = self
                    .table
                    .lookup(name)
                    .ok_or_else(|| KernelError::UnknownSymbol(name.to_string()))?;
                Ok(Expr::Sym(id))
            }
        }
    }
}
