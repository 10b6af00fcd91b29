//! Symbolic derivation engine for Cramér–Rao bounds in array sensing scenarios.
//!
//! The crate is organized around a small exact-arithmetic expression kernel
//! ([`expr`]), symbolic calculus over discrete-index polynomials ([`calculus`]),
//! Fisher-information assembly and CRB extraction ([`fisher`]), a benchmark
//! scenario format with five built-ins ([`scenario`]), a four-role derivation
//! pipeline with failure classification and self-repair ([`pipeline`]), and an
//! independent finite-difference oracle used to validate every derived closed
//! form ([`validate`]).

pub mod calculus;
pub mod error;
pub mod expr;
pub mod fisher;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod validate;

pub use error::KernelError;
pub use expr::{Expr, IndexPoly, Parsed, SymbolId, SymbolKind, SymbolTable, Verdict};
