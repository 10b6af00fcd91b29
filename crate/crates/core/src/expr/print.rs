use num::{BigRational, One, Signed};

use super::{Expr, SymbolTable};

/// Render a canonical expression in the ASCII grammar accepted by `parse`.
/// Negative exponents print as divisions, so `parse(print(e))` reproduces `e`
/// structurally for canonical `e`.
pub fn print(e: &Expr, table: &SymbolTable) -> String {
    match e {
        Expr::Add(terms) => {
            let mut out = String::new();
            for (i, term) in terms.iter().enumerate() {
                let (neg, body) = signed_term(term, table);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else {
                    out.push_str(if neg { " - " } else { " + " });
                }
                out.push_str(&body);
            }
            out
        }
        _ => {
            let (neg, body) = signed_term(e, table);
            if neg {
                format!("-{body}")
            } else {
                body
            }
        }
    }
}

/// Split a monomial-shaped expression into sign and unsigned rendering.
fn signed_term(e: &Expr, table: &SymbolTable) -> (bool, String) {
    match e {
        Expr::Const(c) => (c.is_negative(), rational_str(&c.abs())),
        Expr::Mul(factors) => {
            let mut neg = false;
            let mut numer: Vec<String> = Vec::new();
            let mut denom: Vec<String> = Vec::new();
            let mut den_rat: Option<BigRational> = None;
            for f in factors {
                match f {
                    Expr::Const(c) => {
                        if c.is_negative() {
                            neg = !neg;
                        }
                        let a = c.abs();
                        if !a.numer().is_one() {
                            numer.push(a.numer().to_string());
                        }
                        if !a.denom().is_one() {
                            den_rat = Some(a.clone());
                        }
                    }
                    Expr::Pow(base, k) if *k < 0 => {
                        denom.push(pow_str(base, -k, table));
                    }
                    other => numer.push(factor_str(other, table)),
                }
            }
            if let Some(c) = den_rat {
                denom.insert(0, c.denom().to_string());
            }
            let num_part = if numer.is_empty() {
                "1".to_string()
            } else {
                numer.join("*")
            };
            let out = match denom.len() {
                0 => num_part,
                1 => format!("{num_part}/{}", denom[0]),
                _ => format!("{num_part}/({})", denom.join("*")),
            };
            (neg, out)
        }
        Expr::Pow(base, k) if *k < 0 => (false, format!("1/{}", pow_str(base, -k, table))),
        other => (false, factor_str(other, table)),
    }
}

/// `base^k` for k >= 1, parenthesizing composite bases.
fn pow_str(base: &Expr, k: i32, table: &SymbolTable) -> String {
    let b = match base {
        Expr::Add(_) | Expr::Mul(_) | Expr::Const(_) => format!("({})", print(base, table)),
        _ => factor_str(base, table),
    };
    if k == 1 {
        b
    } else {
        format!("{b}^{k}")
    }
}

fn factor_str(e: &Expr, table: &SymbolTable) -> String {
    match e {
        Expr::Const(c) => rational_str(c),
        Expr::Sym(s) => table.name(*s).to_string(),
        Expr::Sin(a) => format!("sin({})", print(a, table)),
        Expr::Cos(a) => format!("cos({})", print(a, table)),
        Expr::Pow(base, k) if *k > 0 => pow_str(base, *k, table),
        Expr::Pow(base, k) => format!("1/{}", pow_str(base, -k, table)),
        Expr::Add(_) => format!("({})", print(e, table)),
        Expr::Mul(_) => {
            let (neg, body) = signed_term(e, table);
            if neg {
                format!("(-{body})")
            } else {
                body
            }
        }
    }
}

fn rational_str(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}
