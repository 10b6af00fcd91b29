//! Canonicalization: expansion into a collected, sorted sum of monomials.
//!
//! The working representation is a polynomial over "atoms": symbols, `sin`
//! and `cos` applications, and integer powers of irreducible sums (negative
//! powers only — positive powers of sums are expanded). Rational constants
//! fold exactly. A configurable term cap converts runaway expansions into
//! [`KernelError::ExpansionBlowup`] instead of silent hangs.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, Zero};

use crate::error::KernelError;

use super::Expr;
use super::SymbolId;

/// Knobs for the canonicalizer. The defaults define the canonical form; the
/// pipeline lowers `term_cap` or disables `multiple_angle` only under fault
/// injection and in patched retries.
#[derive(Debug, Clone)]
pub struct SimplifyOptions {
    /// Maximum number of live collected terms before giving up.
    pub term_cap: usize,
    /// Rewrite sin(n·x), cos(n·x) for integer 2 <= n <= 8 into products of
    /// sin(x), cos(x).
    pub multiple_angle: bool,
}

impl Default for SimplifyOptions {
    fn default() -> Self {
        SimplifyOptions {
            term_cap: 10_000,
            multiple_angle: true,
        }
    }
}

/// Monomial: atom base -> nonzero integer exponent.
pub(crate) type Mono = BTreeMap<Expr, i32>;

/// Collected polynomial: monomial -> nonzero rational coefficient.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::new(), c);
        }
        p
    }

    fn atom(base: Expr) -> Poly {
        let mut mono = Mono::new();
        mono.insert(base, 1);
        let mut p = Poly::zero();
        p.terms.insert(mono, BigRational::one());
        p
    }

    fn single(&self) -> Option<(&Mono, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn negate(&mut self) {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
    }

    /// Sign of the first monomial in canonical order; `true` if negative.
    fn leading_negative(&self) -> bool {
        self.terms
            .values()
            .next()
            .map(|c| c.is_negative())
            .unwrap_or(false)
    }
}

pub(crate) fn rat_pow(c: &BigRational, k: i32) -> Result<BigRational, KernelError> {
    if k == 0 {
        return Ok(BigRational::one());
    }
    if c.is_zero() {
        if k > 0 {
            return Ok(BigRational::zero());
        }
        return Err(KernelError::DivisionByZero);
    }
    let mag = k.unsigned_abs();
    let num = c.numer().pow(mag);
    let den = c.denom().pow(mag);
    Ok(if k > 0 {
        BigRational::new(num, den)
    } else {
        BigRational::new(den, num)
    })
}

/// Insert `coeff * mono` into `poly`, eliminating sin powers outside ±1 on
/// the way in. This is the single chokepoint where the term cap is enforced.
fn insert_mono(
    poly: &mut Poly,
    mono: Mono,
    coeff: BigRational,
    opts: &SimplifyOptions,
) -> Result<(), KernelError> {
    if coeff.is_zero() {
        return Ok(());
    }
    // sin^k with |k| >= 2 becomes sin^r * (1 - cos^2)^q.
    let sin_power = mono.iter().find_map(|(base, &exp)| match base {
        Expr::Sin(arg) if exp.abs() >= 2 => Some((base.clone(), arg.as_ref().clone(), exp)),
        _ => None,
    });
    if let Some((base, arg, exp)) = sin_power {
        let q = exp.div_euclid(2);
        let r = exp.rem_euclid(2);
        let mut rest = mono;
        rest.remove(&base);
        if r != 0 {
            rest.insert(base, r);
        }
        // 1 - cos(arg)^2 as a two-term polynomial.
        let mut cos_sq = Mono::new();
        cos_sq.insert(Expr::cos(arg), 2);
        let mut pyth = Poly::zero();
        pyth.terms.insert(Mono::new(), BigRational::one());
        pyth.terms.insert(cos_sq, -BigRational::one());

        let factor = if q >= 0 {
            poly_pow_expand(&pyth, q as u32, opts)?
        } else {
            let mut m = Mono::new();
            m.insert(rebuild(&pyth), q);
            let mut p = Poly::zero();
            p.terms.insert(m, BigRational::one());
            p
        };
        for (fm, fc) in factor.terms {
            let merged = merge_monos(&rest, &fm)?;
            insert_mono(poly, merged, coeff.clone() * fc, opts)?;
        }
        return Ok(());
    }

    let entry = poly.terms.entry(mono);
    match entry {
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get().clone() + coeff;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(coeff);
        }
    }
    if poly.terms.len() > opts.term_cap {
        return Err(KernelError::ExpansionBlowup {
            cap: opts.term_cap,
        });
    }
    Ok(())
}

fn merge_monos(a: &Mono, b: &Mono) -> Result<Mono, KernelError> {
    let mut out = a.clone();
    for (base, &exp) in b {
        match out.entry(base.clone()) {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o
                    .get()
                    .checked_add(exp)
                    .ok_or(KernelError::ExponentOverflow)?;
                if sum == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(exp);
            }
        }
    }
    Ok(out)
}

fn poly_add(acc: &mut Poly, other: Poly, opts: &SimplifyOptions) -> Result<(), KernelError> {
    for (m, c) in other.terms {
        insert_mono(acc, m, c, opts)?;
    }
    Ok(())
}

fn poly_mul(a: &Poly, b: &Poly, opts: &SimplifyOptions) -> Result<Poly, KernelError> {
    let mut out = Poly::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let m = merge_monos(ma, mb)?;
            insert_mono(&mut out, m, ca.clone() * cb.clone(), opts)?;
        }
    }
    Ok(out)
}

fn poly_pow_expand(p: &Poly, k: u32, opts: &SimplifyOptions) -> Result<Poly, KernelError> {
    let mut out = Poly::constant(BigRational::one());
    for _ in 0..k {
        out = poly_mul(&out, p, opts)?;
    }
    Ok(out)
}

/// Raise a single monomial to an integer power.
fn mono_pow(mono: &Mono, coeff: &BigRational, k: i32) -> Result<(Mono, BigRational), KernelError> {
    let mut out = Mono::new();
    for (base, &exp) in mono {
        let e = exp.checked_mul(k).ok_or(KernelError::ExponentOverflow)?;
        if e != 0 {
            out.insert(base.clone(), e);
        }
    }
    Ok((out, rat_pow(coeff, k)?))
}

pub(crate) fn normalize(e: &Expr, opts: &SimplifyOptions) -> Result<Poly, KernelError> {
    match e {
        Expr::Const(c) => Ok(Poly::constant(c.clone())),
        Expr::Sym(s) => Ok(Poly::atom(Expr::Sym(*s))),
        Expr::Add(xs) => {
            let mut acc = Poly::zero();
            for x in xs {
                let p = normalize(x, opts)?;
                poly_add(&mut acc, p, opts)?;
            }
            Ok(acc)
        }
        Expr::Mul(xs) => {
            let mut acc = Poly::constant(BigRational::one());
            for x in xs {
                let p = normalize(x, opts)?;
                acc = poly_mul(&acc, &p, opts)?;
                if acc.terms.is_empty() {
                    return Ok(acc);
                }
            }
            Ok(acc)
        }
        Expr::Pow(base, k) => {
            let k = *k;
            if k == 0 {
                return Ok(Poly::constant(BigRational::one()));
            }
            let pb = normalize(base, opts)?;
            if k == 1 {
                return Ok(pb);
            }
            if pb.terms.is_empty() {
                if k > 0 {
                    return Ok(Poly::zero());
                }
                return Err(KernelError::DivisionByZero);
            }
            if let Some((mono, coeff)) = pb.single() {
                let (m, c) = mono_pow(mono, coeff, k)?;
                let mut out = Poly::zero();
                insert_mono(&mut out, m, c, opts)?;
                return Ok(out);
            }
            if k >= 2 {
                poly_pow_expand(&pb, k as u32, opts)
            } else {
                pow_sum_atom(pb, k, opts)
            }
        }
        Expr::Sin(arg) => normalize_trig(arg, true, opts),
        Expr::Cos(arg) => normalize_trig(arg, false, opts),
    }
}

/// Rational content (gcd of numerators over lcm of denominators, signed by
/// the leading coefficient) and the primitive part `p / content`, whose
/// leading coefficient is positive with coprime integer structure.
fn extract_content(p: &Poly) -> (BigRational, Poly) {
    use num::bigint::BigInt;
    use num::Integer;
    if p.terms.is_empty() {
        return (BigRational::one(), Poly::zero());
    }
    let mut num_gcd = BigInt::from(0);
    let mut den_lcm = BigInt::from(1);
    for c in p.terms.values() {
        num_gcd = num_gcd.gcd(c.numer());
        den_lcm = den_lcm.lcm(c.denom());
    }
    let mut content = BigRational::new(num_gcd.abs(), den_lcm);
    if p.leading_negative() {
        content = -content;
    }
    let inv = content.recip();
    let primitive = scale(p, &inv);
    (content, primitive)
}

/// The integer multiplier of a trig argument: the gcd of the coefficient
/// numerators, accepted only when it is a single small integer (2..=8).
/// Larger multiples stay atomic — unfolding them would build expansion
/// polynomials whose coefficients amplify floating-point error past the
/// value-preservation contract.
fn integer_content(p: &Poly) -> Option<u32> {
    use num::bigint::BigInt;
    use num::Integer;
    let mut g = BigInt::from(0);
    for c in p.terms.values() {
        g = g.gcd(c.numer());
    }
    let g = g.abs();
    if g >= BigInt::from(2) && g <= BigInt::from(8) {
        u32::try_from(g).ok()
    } else {
        None
    }
}

fn scale(p: &Poly, factor: &BigRational) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        out.terms.insert(m.clone(), c.clone() * factor.clone());
    }
    out
}

fn normalize_trig(arg: &Expr, is_sin: bool, opts: &SimplifyOptions) -> Result<Poly, KernelError> {
    let mut pa = normalize(arg, opts)?;
    // sin(0) = 0, cos(0) = 1
    if pa.terms.is_empty() {
        return Ok(if is_sin {
            Poly::zero()
        } else {
            Poly::constant(BigRational::one())
        });
    }
    // Parity: sin(-x) = -sin(x), cos(-x) = cos(x).
    let mut flip = false;
    if pa.leading_negative() {
        pa.negate();
        flip = is_sin;
    }
    // Constant folding for sin/cos of exact zero handled above; other exact
    // constants stay symbolic.
    // Multiple-angle expansion is restricted to non-constant arguments that
    // are polynomials in plain symbols: expanding nested trigonometry or
    // constant angles trades exactness for nothing.
    let symbols_only = pa
        .terms
        .keys()
        .all(|mono| mono.keys().all(|b| matches!(b, Expr::Sym(_))));
    let has_symbol = pa.terms.keys().any(|mono| !mono.is_empty());
    if opts.multiple_angle && symbols_only && has_symbol {
        if let Some(n) = integer_content(&pa) {
            let inner = scale(&pa, &BigRational::new(1.into(), n.into()));
            let w = rebuild(&inner);
            let (s, c) = multiple_angle(&w, n);
            let expanded = normalize(if is_sin { &s } else { &c }, opts)?;
            return Ok(if flip {
                let mut e = expanded;
                e.negate();
                e
            } else {
                expanded
            });
        }
    }
    let atom = if is_sin {
        Expr::sin(rebuild(&pa))
    } else {
        Expr::cos(rebuild(&pa))
    };
    let mut out = Poly::atom(atom);
    if flip {
        out.negate();
    }
    Ok(out)
}

/// (sin(n·w), cos(n·w)) written in sin(w), cos(w) via the angle-addition
/// recursion. `n >= 2`.
fn multiple_angle(w: &Expr, n: u32) -> (Expr, Expr) {
    let s1 = Expr::sin(w.clone());
    let c1 = Expr::cos(w.clone());
    let mut s = s1.clone();
    let mut c = c1.clone();
    for _ in 1..n {
        let s_next = s.clone() * c1.clone() + c.clone() * s1.clone();
        let c_next = c * c1.clone() - s * s1.clone();
        s = s_next;
        c = c_next;
    }
    (s, c)
}

/// Rebuild a canonical `Expr` from a collected polynomial.
pub(crate) fn rebuild(p: &Poly) -> Expr {
    if p.terms.is_empty() {
        return Expr::zero();
    }
    let mut terms: Vec<Expr> = Vec::with_capacity(p.terms.len());
    for (mono, coeff) in &p.terms {
        terms.push(rebuild_mono(mono, coeff));
    }
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Expr::Add(terms)
    }
}

pub(crate) fn rebuild_mono(mono: &Mono, coeff: &BigRational) -> Expr {
    let mut factors: Vec<Expr> = Vec::new();
    if !coeff.is_one() || mono.is_empty() {
        factors.push(Expr::Const(coeff.clone()));
    }
    for (base, &exp) in mono {
        if exp == 1 {
            factors.push(base.clone());
        } else {
            factors.push(Expr::Pow(Box::new(base.clone()), exp));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Mul(factors)
    }
}

/// Canonicalize with default options.
pub fn canonicalize(e: &Expr) -> Result<Expr, KernelError> {
    canonicalize_with(e, &SimplifyOptions::default())
}

pub fn canonicalize_with(e: &Expr, opts: &SimplifyOptions) -> Result<Expr, KernelError> {
    Ok(rebuild(&normalize(e, opts)?))
}

/// Simultaneous substitution followed by canonicalization.
pub fn substitute(
    e: &Expr,
    bindings: &BTreeMap<SymbolId, Expr>,
) -> Result<Expr, KernelError> {
    fn walk(e: &Expr, bindings: &BTreeMap<SymbolId, Expr>) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Sym(s) => bindings.get(s).cloned().unwrap_or_else(|| e.clone()),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| walk(x, bindings)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| walk(x, bindings)).collect()),
            Expr::Pow(b, k) => Expr::Pow(Box::new(walk(b, bindings)), *k),
            Expr::Sin(a) => Expr::sin(walk(a, bindings)),
            Expr::Cos(a) => Expr::cos(walk(a, bindings)),
        }
    }
    canonicalize(&walk(e, bindings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{SymbolKind, SymbolTable};

    fn table() -> (SymbolTable, SymbolId, SymbolId) {
        let mut t = SymbolTable::new();
        let x = t.add("x", SymbolKind::Parameter, false);
        let y = t.add("y", SymbolKind::Parameter, false);
        (t, x, y)
    }

    #[test]
    fn like_terms_collect() {
        let (_, x, _) = table();
        let e = Expr::sym(x) + Expr::sym(x);
        let c = canonicalize(&e).unwrap();
        assert_eq!(c, Expr::Mul(vec![Expr::int(2), Expr::sym(x)]));
    }

    #[test]
    fn binomial_expands() {
        let (_, x, y) = table();
        let e = Expr::pow(Expr::sym(x) + Expr::sym(y), 2);
        let c = canonicalize(&e).unwrap();
        let expected = canonicalize(
            &(Expr::pow(Expr::sym(x), 2)
                + Expr::int(2) * Expr::sym(x) * Expr::sym(y)
                + Expr::pow(Expr::sym(y), 2)),
        )
        .unwrap();
        assert_eq!(c, expected);
    }

    #[test]
    fn pythagorean_identity_folds_to_one() {
        let (_, x, _) = table();
        let e = Expr::pow(Expr::sin(Expr::sym(x)), 2) + Expr::pow(Expr::cos(Expr::sym(x)), 2);
        assert_eq!(canonicalize(&e).unwrap(), Expr::one());
    }

    #[test]
    fn rational_folding_is_exact() {
        let e = Expr::rational(1, 3) + Expr::rational(1, 6);
        assert_eq!(canonicalize(&e).unwrap(), Expr::rational(1, 2));
    }

    #[test]
    fn zero_and_one_identities() {
        let (_, x, _) = table();
        let e = Expr::sym(x) * Expr::one() + Expr::zero();
        assert_eq!(canonicalize(&e).unwrap(), Expr::sym(x));
        let z = Expr::sym(x) * Expr::zero();
        assert_eq!(canonicalize(&z).unwrap(), Expr::zero());
    }

    #[test]
    fn double_angle_normalizes() {
        let (_, x, _) = table();
        let lhs = Expr::sin(Expr::int(2) * Expr::sym(x));
        let rhs = Expr::int(2) * Expr::sin(Expr::sym(x)) * Expr::cos(Expr::sym(x));
        assert_eq!(canonicalize(&lhs).unwrap(), canonicalize(&rhs).unwrap());
    }

    #[test]
    fn parity_normalizes_trig_arguments() {
        let (_, x, _) = table();
        let s = Expr::sin(-Expr::sym(x));
        assert_eq!(
            canonicalize(&s).unwrap(),
            canonicalize(&-Expr::sin(Expr::sym(x))).unwrap()
        );
        let c = Expr::cos(-Expr::sym(x));
        assert_eq!(canonicalize(&c).unwrap(), Expr::cos(Expr::sym(x)));
    }

    #[test]
    fn negative_pow_of_sum_stays_atomic() {
        let (_, x, y) = table();
        let e = Expr::pow(Expr::sym(x) + Expr::sym(y), -1);
        let c = canonicalize(&e).unwrap();
        match c {
            Expr::Pow(base, -1) => {
                assert_eq!(*base, canonicalize(&(Expr::sym(x) + Expr::sym(y))).unwrap());
            }
            other => panic!("expected atomic inverse, got {other:?}"),
        }
    }

    #[test]
    fn expansion_cap_trips() {
        let (_, x, y) = table();
        let opts = SimplifyOptions {
            term_cap: 4,
            ..Default::default()
        };
        let e = Expr::pow(Expr::sym(x) + Expr::sym(y), 8);
        match canonicalize_with(&e, &opts) {
            Err(KernelError::ExpansionBlowup { cap: 4 }) => {}
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn idempotent_on_samples() {
        let (_, x, y) = table();
        let samples = vec![
            Expr::pow(Expr::sym(x) + Expr::sym(y), 3),
            Expr::sin(Expr::int(2) * Expr::sym(x)) * Expr::cos(Expr::sym(y)),
            Expr::pow(Expr::sin(Expr::sym(x)), 4),
            Expr::pow(Expr::sym(x) + Expr::int(1), -2) * Expr::sym(y),
            Expr::rational(-3, 4) * Expr::sym(x) + Expr::sym(y) - Expr::sym(y),
        ];
        for e in samples {
            let once = canonicalize(&e).unwrap();
            let twice = canonicalize(&once).unwrap();
            assert_eq!(once, twice, "canonicalize not idempotent for {e:?}");
        }
    }

    #[test]
    fn substitute_binomial() {
        let (_, x, y) = table();
        let e = Expr::pow(Expr::sym(x), 2);
        let mut bind = BTreeMap::new();
        bind.insert(x, Expr::sym(y) + Expr::one());
        let out = substitute(&e, &bind).unwrap();
        let expected = canonicalize(
            &(Expr::pow(Expr::sym(y), 2) + Expr::int(2) * Expr::sym(y) + Expr::one()),
        )
        .unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn negative_sin_power_keeps_inverse_form() {
        let (_, x, _) = table();
        let e = Expr::pow(Expr::sin(Expr::sym(x)), -2);
        let c = canonicalize(&e).unwrap();
        // 1/sin^2 = (1 - cos^2)^(-1)
        match &c {
            Expr::Pow(base, -1) => {
                let pyth = canonicalize(
                    &(Expr::one() - Expr::pow(Expr::cos(Expr::sym(x)), 2)),
                )
                .unwrap();
                assert_eq!(**base, pyth);
            }
            other => panic!("unexpected form {other:?}"),
        }
    }
}
