//! Fisher information assembly for phase-only steering models and CRB
//! extraction via adjugate inversion.
//!
//! For a unit-modulus steering vector with element phases `phi`, the
//! deterministic-signal Fisher entry reduces to
//!
//! ```text
//! F_ij = (2 |alpha|^2 / sigma^2) * sum over indices of
//!        (d phi / d eta_i) * (d phi / d eta_j)
//! ```
//!
//! because each element derivative is `j * dphi * a` and the Hermitian inner
//! product's real part collapses to the phase-derivative product. The
//! complex-arithmetic oracle in [`crate::validate`] checks this reduction at
//! sampled points without sharing any code with this module.

use std::collections::BTreeMap;

use crate::calculus::{differentiate_poly, mul_poly, sum_index, Summed};
use crate::error::KernelError;
use crate::expr::{canonicalize, Expr, IndexPoly, SymbolId, SymbolTable, DEGREE_CAP};

/// Phase-only steering model: everything the Fisher formula needs.
#[derive(Debug, Clone)]
pub struct PhaseModel {
    pub phase: IndexPoly,
    /// Ordered parameter vector, length 1..=4.
    pub params: Vec<SymbolId>,
    /// |alpha|^2, free of index symbols.
    pub gain_sq: Expr,
    /// Noise power (sigma^2, or sigma^2 + sigma_c^2 in clutter scenarios).
    pub noise: Expr,
    /// Index symbol -> range-length symbol.
    pub range_lengths: BTreeMap<SymbolId, SymbolId>,
}

impl PhaseModel {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    fn scale(&self) -> Expr {
        Expr::int(2) * self.gain_sq.clone() * Expr::pow(self.noise.clone(), -1)
    }
}

/// Symmetric P x P matrix of expressions (P <= 4).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<Expr>,
}

impl SymMatrix {
    pub fn from_entries(dim: usize, entries: Vec<Expr>) -> SymMatrix {
        assert!(dim >= 1 && dim <= 4, "dimension out of range");
        assert_eq!(entries.len(), dim * dim);
        SymMatrix { dim, entries }
    }

    /// Build from the upper triangle (row-major, i <= j), mirroring.
    pub fn from_upper(dim: usize, upper: Vec<Expr>) -> SymMatrix {
        assert_eq!(upper.len(), dim * (dim + 1) / 2);
        let mut entries = vec![Expr::zero(); dim * dim];
        let mut it = upper.into_iter();
        for i in 0..dim {
            for j in i..dim {
                let e = it.next().unwrap();
                entries[i * dim + j] = e.clone();
                entries[j * dim + i] = e;
            }
        }
        SymMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim + j]
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if self.entry(i, j) != self.entry(j, i) {
                    return false;
                }
            }
        }
        true
    }

    fn minor(&self, row: usize, col: usize) -> SymMatrix {
        let d = self.dim - 1;
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..self.dim {
            if i == row {
                continue;
            }
            for j in 0..self.dim {
                if j == col {
                    continue;
                }
                entries.push(self.entry(i, j).clone());
            }
        }
        SymMatrix { dim: d, entries }
    }
}

/// Sum the phase-derivative product over every index of the model.
fn summed_product(
    model: &PhaseModel,
    di: &IndexPoly,
    dj: &IndexPoly,
    table: &SymbolTable,
) -> Result<Expr, KernelError> {
    let prod = mul_poly(di, dj, DEGREE_CAP)?;
    let mut current = Summed::Poly(prod);
    // Iterate single sums; index order is the polynomial's sorted order.
    loop {
        match current {
            Summed::Expr(e) => return Ok(e),
            Summed::Poly(p) => {
                if p.is_zero() {
                    return Ok(Expr::zero());
                }
                let over = p.indices()[0];
                let length = *model.range_lengths.get(&over).ok_or_else(|| {
                    KernelError::MissingIndex(table.name(over).to_string())
                })?;
                current = sum_index(&p, over, length, table)?;
            }
        }
    }
}

/// One Fisher information entry as a closed-form expression.
pub fn fim_entry(
    model: &PhaseModel,
    i: usize,
    j: usize,
    table: &SymbolTable,
) -> Result<Expr, KernelError> {
    let di = differentiate_poly(&model.phase, model.params[i], table)?;
    let dj = differentiate_poly(&model.phase, model.params[j], table)?;
    let summed = summed_product(model, &di, &dj, table)?;
    canonicalize(&(model.scale() * summed))
}

/// Full symmetric FIM; only the upper triangle is computed.
pub fn assemble_fim(model: &PhaseModel, table: &SymbolTable) -> Result<SymMatrix, KernelError> {
    let p = model.dim();
    let derivs: Vec<IndexPoly> = model
        .params
        .iter()
        .map(|&s| differentiate_poly(&model.phase, s, table))
        .collect::<Result<_, _>>()?;
    let mut upper = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            let summed = summed_product(model, &derivs[i], &derivs[j], table)?;
            upper.push(canonicalize(&(model.scale() * summed))?);
        }
    }
    Ok(SymMatrix::from_upper(p, upper))
}

/// Determinant by cofactor expansion along the first row, canonicalized.
pub fn determinant(f: &SymMatrix) -> Result<Expr, KernelError> {
    canonicalize(&det_raw(f))
}

pub fn determinant_with(
    f: &SymMatrix,
    opts: &crate::expr::SimplifyOptions,
) -> Result<Expr, KernelError> {
    crate::expr::canonicalize_with(&det_raw(f), opts)
}

fn det_raw(f: &SymMatrix) -> Expr {
    match f.dim() {
        1 => f.entry(0, 0).clone(),
        2 => {
            f.entry(0, 0).clone() * f.entry(1, 1).clone()
                - f.entry(0, 1).clone() * f.entry(1, 0).clone()
        }
        _ => {
            let mut terms = Vec::with_capacity(f.dim());
            for j in 0..f.dim() {
                let cofactor = det_raw(&f.minor(0, j));
                let signed = if j % 2 == 0 {
                    f.entry(0, j).clone() * cofactor
                } else {
                    -(f.entry(0, j).clone() * cofactor)
                };
                terms.push(signed);
            }
            Expr::Add(terms)
        }
    }
}

/// Adjugate (transposed cofactor matrix); `adj(F) * F = det(F) * I`.
pub fn adjugate(f: &SymMatrix) -> Result<SymMatrix, KernelError> {
    let d = f.dim();
    if d == 1 {
        return Ok(SymMatrix::from_entries(1, vec![Expr::one()]));
    }
    let mut entries = vec![Expr::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            let cofactor = det_raw(&f.minor(j, i));
            let signed = if (i + j) % 2 == 0 {
                cofactor
            } else {
                -cofactor
            };
            entries[i * d + j] = canonicalize(&signed)?;
        }
    }
    Ok(SymMatrix::from_entries(d, entries))
}

/// CRB for parameter `i`: `adj(F)_ii / det(F)` with the determinant kept as a
/// single inverse factor. Positivity is a numeric question left to
/// validation.
pub fn crb(f: &SymMatrix, i: usize) -> Result<Expr, KernelError> {
    crb_with(f, i, &crate::expr::SimplifyOptions::default())
}

pub fn crb_with(
    f: &SymMatrix,
    i: usize,
    opts: &crate::expr::SimplifyOptions,
) -> Result<Expr, KernelError> {
    let det = determinant_with(f, opts)?;
    if det.is_zero() {
        return Err(KernelError::SingularFim);
    }
    let adj_ii = if f.dim() == 1 {
        Expr::one()
    } else {
        let cof = det_raw(&f.minor(i, i));
        crate::expr::canonicalize_with(&cof, opts)?
    };
    crate::expr::canonicalize_with(&(adj_ii * Expr::pow(det, -1)), opts)
}
