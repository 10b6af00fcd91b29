use thiserror::Error;

/// Errors raised by the expression kernel and the calculus / Fisher layers.
///
/// Every variant corresponds to a failure the derivation pipeline knows how to
/// classify, so the set is deliberately closed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("index degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("expansion exceeded {cap} terms")]
    ExpansionBlowup { cap: usize },
    #[error("unbound symbol `{0}` in numeric evaluation")]
    UnboundSymbol(String),
    #[error("non-finite result in numeric evaluation: {0}")]
    NonFiniteResult(String),
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("exponent overflow while combining powers")]
    ExponentOverflow,
    #[error("cannot differentiate with respect to index symbol `{0}`")]
    IndexDifferentiation(String),
    #[error("polynomial has no index `{0}`")]
    MissingIndex(String),
    #[error("power-sum exponent {0} outside the precomputed table (max 8)")]
    ExponentOutOfTable(u32),
    #[error("index symbol `{0}` used in a non-polynomial position")]
    NonPolynomialIndex(String),
    #[error("Fisher information matrix is singular: determinant is identically zero")]
    SingularFim,
}

impl KernelError {
    /// Stable machine identifier used in traces and failure classification.
    pub fn kind(&self) -> &'static str {
        match self {
            KernelError::Syntax { .. } => "syntax",
            KernelError::UnknownSymbol(_) => "unknown_symbol",
            KernelError::DegreeOverflow { .. } => "degree_overflow",
            KernelError::ExpansionBlowup { .. } => "expansion_blowup",
            KernelError::UnboundSymbol(_) => "unbound_symbol",
            KernelError::NonFiniteResult(_) => "non_finite_result",
            KernelError::DivisionByZero => "division_by_zero",
            KernelError::ExponentOverflow => "exponent_overflow",
            KernelError::IndexDifferentiation(_) => "index_differentiation",
            KernelError::MissingIndex(_) => "missing_index",
            KernelError::ExponentOutOfTable(_) => "exponent_out_of_table",
            KernelError::NonPolynomialIndex(_) => "non_polynomial_index",
            KernelError::SingularFim => "singular_fim",
        }
    }
}
