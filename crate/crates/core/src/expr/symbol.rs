use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::KernelError;

/// Opaque handle into a [`SymbolTable`]. Ordering follows registration order,
/// which fixes the term order used by canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub(crate) u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// Unknown to be estimated; differentiation targets.
    Parameter,
    /// Fixed quantity of the setup (wavelength, spacing, array size, ...).
    StructuralConstant,
    /// Discrete summation index. Never appears inside an `Expr`.
    Index,
    /// Shorthand expanded in terms of base symbols at analysis time.
    Derived,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolInfo {
    pub name: String,
    pub kind: SymbolKind,
    #[serde(default)]
    pub positive: bool,
    /// Numeric interval the symbol is expected to live in. Used for sampling
    /// when no scenario-level interval is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    /// Defining expression for `Derived` symbols, in the expression grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<String>,
}

/// Registry of every symbol an expression may reference.
///
/// `pi` is always registered first and binds to `std::f64::consts::PI` during
/// numeric evaluation.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    entries: Vec<SymbolInfo>,
    by_name: BTreeMap<String, SymbolId>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut table = SymbolTable {
            entries: Vec::new(),
            by_name: BTreeMap::new(),
        };
        table
            .register(SymbolInfo {
                name: "pi".to_string(),
                kind: SymbolKind::StructuralConstant,
                positive: true,
                range: None,
                definition: None,
            })
            .expect("registering pi cannot fail on an empty table");
        table
    }

    pub fn pi(&self) -> SymbolId {
        SymbolId(0)
    }

    pub fn register(&mut self, info: SymbolInfo) -> Result<SymbolId, KernelError> {
        if self.by_name.contains_key(&info.name) {
            return Err(KernelError::UnknownSymbol(format!(
                "duplicate symbol `{}`",
                info.name
            )));
        }
        let id = SymbolId(self.entries.len() as u32);
        self.by_name.insert(info.name.clone(), id);
        self.entries.push(info);
        Ok(id)
    }

    /// Shorthand used heavily in tests.
    pub fn add(&mut self, name: &str, kind: SymbolKind, positive: bool) -> SymbolId {
        self.register(SymbolInfo {
            name: name.to_string(),
            kind,
            positive,
            range: None,
            definition: None,
        })
        .unwrap_or_else(|_| panic!("duplicate symbol `{name}`"))
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.by_name.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<SymbolId, KernelError> {
        self.lookup(name)
            .ok_or_else(|| KernelError::UnknownSymbol(name.to_string()))
    }

    pub fn info(&self, id: SymbolId) -> &SymbolInfo {
        &self.entries[id.index()]
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.entries[id.index()].name
    }

    pub fn kind(&self, id: SymbolId) -> SymbolKind {
        self.entries[id.index()].kind
    }

    pub fn is_index(&self, id: SymbolId) -> bool {
        self.kind(id) == SymbolKind::Index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.entries.len()).map(|i| SymbolId(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &SymbolInfo)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, info)| (SymbolId(i as u32), info))
    }
}
