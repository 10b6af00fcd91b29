//! Machine-readable benchmark scenarios and the five built-in problems.
//!
//! A scenario file is a JSON object whose fields mirror [`ScenarioSpec`]:
//! symbol declarations, a steering-phase expression, the parameter vector,
//! gain and noise expressions, index ranges, target-output names, optional
//! reference formulas, and numeric sampling intervals. Built-ins ship under
//! `scenarios/` at the repository root and are embedded in the library.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::KernelError;
use crate::expr::{
    parse_expr_only, Expr, IndexPoly, Parsed, SymbolId, SymbolInfo, SymbolKind, SymbolTable,
};
use crate::fisher::PhaseModel;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("in `{context}`: {source}")]
    Kernel {
        context: String,
        source: KernelError,
    },
}

impl ScenarioError {
    fn kernel(context: &str, source: KernelError) -> ScenarioError {
        ScenarioError::Kernel {
            context: context.to_string(),
            source,
        }
    }
}

/// Numeric sampling rule for one symbol: a real interval or a finite choice
/// set (used for array sizes and pulse counts).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SamplingEntry {
    Range([f64; 2]),
    Choices { choices: Vec<i64> },
}

/// Raw file layout; field names are the wire contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub symbols: Vec<SymbolInfo>,
    pub phase_text: String,
    pub params: Vec<String>,
    pub gain_sq_text: String,
    pub noise_text: String,
    pub index_ranges: BTreeMap<String, String>,
    pub targets: Vec<String>,
    #[serde(default)]
    pub references: BTreeMap<String, String>,
    pub sampling: BTreeMap<String, SamplingEntry>,
}

/// What a target-output name denotes. Names follow the fixed conventions
/// `d_phi*_d_<param>`, `F_<param><param>`, `det_F`, `crb_<param>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    PhaseDerivative(SymbolId),
    FimEntry(usize, usize),
    Determinant,
    Crb(SymbolId),
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub id: String,
    pub description: String,
    pub table: SymbolTable,
    pub phase_text: String,
    /// Steering phase with derived symbols expanded.
    pub phase: IndexPoly,
    pub params: Vec<SymbolId>,
    pub gain_sq: Expr,
    pub noise: Expr,
    pub index_ranges: BTreeMap<SymbolId, SymbolId>,
    pub targets: Vec<String>,
    pub target_kinds: BTreeMap<String, TargetKind>,
    pub references: BTreeMap<String, Parsed>,
    pub sampling: BTreeMap<SymbolId, SamplingEntry>,
    /// id -> expanded definition, for every derived symbol.
    pub derived: BTreeMap<SymbolId, Expr>,
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn phase_model(&self) -> PhaseModel {
        PhaseModel {
            phase: self.phase.clone(),
            params: self.params.clone(),
            gain_sq: self.gain_sq.clone(),
            noise: self.noise.clone(),
            range_lengths: self.index_ranges.clone(),
        }
    }
}

/// Parse and validate one scenario document.
pub fn load_scenario(contents: &str) -> Result<ScenarioSpec, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(contents)
        .map_err(|e| ScenarioError::Schema(format!("invalid scenario JSON: {e}")))?;
    resolve(file)
}

fn resolve(file: ScenarioFile) -> Result<ScenarioSpec, ScenarioError> {
    let mut table = SymbolTable::new();
    for info in &file.symbols {
        if info.name == "pi" {
            return Err(ScenarioError::Schema(
                "`pi` is predeclared and cannot be redefined".to_string(),
            ));
        }
        // Copy the scenario sampling interval onto the symbol so generic
        // numeric fallbacks sample physically plausible values.
        let mut info = info.clone();
        if info.range.is_none() {
            if let Some(SamplingEntry::Range([lo, hi])) = file.sampling.get(&info.name) {
                info.range = Some((*lo, *hi));
            }
        }
        table
            .register(info)
            .map_err(|e| ScenarioError::Schema(format!("symbol table: {e}")))?;
    }

    // Derived symbols expand to base symbols only.
    let mut derived: BTreeMap<SymbolId, Expr> = BTreeMap::new();
    let derived_ids: Vec<SymbolId> = table
        .iter()
        .filter(|(_, info)| info.kind == SymbolKind::Derived)
        .map(|(id, _)| id)
        .collect();
    for id in derived_ids {
        let info = table.info(id).clone();
        let text = info.definition.as_ref().ok_or_else(|| {
            ScenarioError::Schema(format!("derived symbol `{}` has no definition", info.name))
        })?;
        let def = parse_expr_only(text, &table)
            .map_err(|e| ScenarioError::kernel(&format!("definition of `{}`", info.name), e))?;
        for s in def.free_symbols() {
            if table.kind(s) == SymbolKind::Derived {
                return Err(ScenarioError::Schema(format!(
                    "derived symbol `{}` references derived symbol `{}`",
                    info.name,
                    table.name(s)
                )));
            }
        }
        derived.insert(id, def);
    }

    let params: Vec<SymbolId> = file
        .params
        .iter()
        .map(|name| {
            let id = table
                .resolve(name)
                .map_err(|e| ScenarioError::kernel("params", e))?;
            if table.kind(id) != SymbolKind::Parameter {
                return Err(ScenarioError::Schema(format!(
                    "`{name}` is listed in params but not declared as a parameter"
                )));
            }
            Ok(id)
        })
        .collect::<Result<_, _>>()?;
    if params.is_empty() || params.len() > 4 {
        return Err(ScenarioError::Schema(format!(
            "{} parameters (1..=4 supported)",
            params.len()
        )));
    }

    let mut index_ranges = BTreeMap::new();
    for (idx_name, len_name) in &file.index_ranges {
        let idx = table
            .resolve(idx_name)
            .map_err(|e| ScenarioError::kernel("index_ranges", e))?;
        let len = table
            .resolve(len_name)
            .map_err(|e| ScenarioError::kernel("index_ranges", e))?;
        if !table.is_index(idx) {
            return Err(ScenarioError::Schema(format!(
                "`{idx_name}` is not an index symbol"
            )));
        }
        if table.kind(len) != SymbolKind::StructuralConstant {
            return Err(ScenarioError::Schema(format!(
                "range length `{len_name}` must be a structural constant"
            )));
        }
        index_ranges.insert(idx, len);
    }
    if index_ranges.is_empty() {
        return Err(ScenarioError::Schema(
            "no index ranges declared".to_string(),
        ));
    }

    // Phase: parse raw, expand derived symbols, then extract the polynomial.
    let raw_phase = crate::expr::parse_raw(&file.phase_text, &table)
        .map_err(|e| ScenarioError::kernel("phase_text", e))?;
    let expanded = expand_derived(&raw_phase, &derived);
    let index_syms: Vec<SymbolId> = expanded
        .free_symbols()
        .into_iter()
        .filter(|s| table.is_index(*s))
        .collect();
    if index_syms.is_empty() {
        return Err(ScenarioError::Schema(
            "phase_text does not involve any index symbol".to_string(),
        ));
    }
    let phase = IndexPoly::from_expr(&expanded, &index_syms, &table)
        .map_err(|e| ScenarioError::kernel("phase_text", e))?;
    for idx in phase.indices() {
        if !index_ranges.contains_key(idx) {
            return Err(ScenarioError::Schema(format!(
                "index `{}` has no declared range length",
                table.name(*idx)
            )));
        }
    }

    let gain_sq = parse_scalar(&file.gain_sq_text, &table, &derived, "gain_sq_text")?;
    let noise = parse_scalar(&file.noise_text, &table, &derived, "noise_text")?;

    if file.targets.is_empty() {
        return Err(ScenarioError::Schema(
            "targets must be non-empty".to_string(),
        ));
    }
    let mut target_kinds = BTreeMap::new();
    for target in &file.targets {
        let kind = classify_target(target, &params, &table).ok_or_else(|| {
            ScenarioError::Schema(format!(
                "target `{target}` does not follow any recognized naming convention"
            ))
        })?;
        target_kinds.insert(target.clone(), kind);
    }

    let mut references = BTreeMap::new();
    for (target, text) in &file.references {
        if !target_kinds.contains_key(target) {
            return Err(ScenarioError::Schema(format!(
                "reference `{target}` is not a declared target"
            )));
        }
        let raw = crate::expr::parse_raw(text, &table)
            .map_err(|e| ScenarioError::kernel(&format!("reference `{target}`"), e))?;
        let expanded = expand_derived(&raw, &derived);
        let ref_indices: Vec<SymbolId> = expanded
            .free_symbols()
            .into_iter()
            .filter(|s| table.is_index(*s))
            .collect();
        let parsed = if ref_indices.is_empty() {
            Parsed::Expr(
                crate::expr::canonicalize(&expanded)
                    .map_err(|e| ScenarioError::kernel(&format!("reference `{target}`"), e))?,
            )
        } else {
            Parsed::Poly(
                IndexPoly::from_expr(&expanded, &ref_indices, &table)
                    .map_err(|e| ScenarioError::kernel(&format!("reference `{target}`"), e))?,
            )
        };
        references.insert(target.clone(), parsed);
    }

    // Sampling must cover every non-derived, non-index symbol the numeric
    // stage needs (parameters and structural constants except pi).
    let mut sampling = BTreeMap::new();
    for (name, entry) in &file.sampling {
        let id = table
            .resolve(name)
            .map_err(|e| ScenarioError::kernel("sampling", e))?;
        if let SamplingEntry::Range([lo, hi]) = entry {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ScenarioError::Schema(format!(
                    "sampling interval for `{name}` is not a valid [lo, hi]"
                )));
            }
        }
        sampling.insert(id, entry.clone());
    }
    for (id, info) in table.iter() {
        let needed = matches!(
            info.kind,
            SymbolKind::Parameter | SymbolKind::StructuralConstant
        ) && info.name != "pi";
        if needed && !sampling.contains_key(&id) {
            return Err(ScenarioError::Schema(format!(
                "sampling does not cover symbol `{}`",
                info.name
            )));
        }
    }

    Ok(ScenarioSpec {
        id: file.id,
        description: file.description,
        table,
        phase_text: file.phase_text,
        phase,
        params,
        gain_sq,
        noise,
        index_ranges,
        targets: file.targets,
        target_kinds,
        references,
        sampling,
        derived,
    })
}

fn parse_scalar(
    text: &str,
    table: &SymbolTable,
    derived: &BTreeMap<SymbolId, Expr>,
    context: &str,
) -> Result<Expr, ScenarioError> {
    let raw = crate::expr::parse_raw(text, table)
        .map_err(|e| ScenarioError::kernel(context, e))?;
    let expanded = expand_derived(&raw, derived);
    for s in expanded.free_symbols() {
        if table.is_index(s) {
            return Err(ScenarioError::Schema(format!(
                "{context} must be free of index symbols"
            )));
        }
    }
    crate::expr::canonicalize(&expanded).map_err(|e| ScenarioError::kernel(context, e))
}

fn expand_derived(raw: &Expr, derived: &BTreeMap<SymbolId, Expr>) -> Expr {
    if derived.is_empty() {
        return raw.clone();
    }
    fn walk(e: &Expr, map: &BTreeMap<SymbolId, Expr>) -> Expr {
        match e {
            Expr::Const(_) => e.clone(),
            Expr::Sym(s) => map.get(s).cloned().unwrap_or_else(|| e.clone()),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| walk(x, map)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| walk(x, map)).collect()),
            Expr::Pow(b, k) => Expr::Pow(Box::new(walk(b, map)), *k),
            Expr::Sin(a) => Expr::sin(walk(a, map)),
            Expr::Cos(a) => Expr::cos(walk(a, map)),
        }
    }
    walk(raw, derived)
}

/// Resolve a target name against the naming conventions.
pub fn classify_target(
    name: &str,
    params: &[SymbolId],
    table: &SymbolTable,
) -> Option<TargetKind> {
    if name == "det_F" {
        return Some(TargetKind::Determinant);
    }
    if let Some(rest) = name.strip_prefix("crb_") {
        return params
            .iter()
            .find(|&&p| table.name(p) == rest)
            .map(|&p| TargetKind::Crb(p));
    }
    if let Some(rest) = name.strip_prefix("F_") {
        for i in 0..params.len() {
            for j in i..params.len() {
                let combined = format!("{}{}", table.name(params[i]), table.name(params[j]));
                if combined == rest {
                    return Some(TargetKind::FimEntry(i, j));
                }
            }
        }
        return None;
    }
    if name.starts_with("d_phi") {
        // Longest parameter suffix wins (guards against one name being a
        // suffix of another).
        let mut best: Option<(usize, SymbolId)> = None;
        for &p in params {
            let suffix = format!("_d_{}", table.name(p));
            if name.ends_with(&suffix) {
                let len = suffix.len();
                if best.map(|(l, _)| len > l).unwrap_or(true) {
                    best = Some((len, p));
                }
            }
        }
        return best.map(|(_, p)| TargetKind::PhaseDerivative(p));
    }
    None
}

/// Workspace/trace value name for a target (lowercased).
pub fn value_name(target: &str) -> String {
    target.to_ascii_lowercase()
}

const BUILTIN_SOURCES: [(&str, &str); 5] = [
    ("S01", include_str!("../../../scenarios/S01.json")),
    ("S02", include_str!("../../../scenarios/S02.json")),
    ("S03", include_str!("../../../scenarios/S03.json")),
    ("S04", include_str!("../../../scenarios/S04.json")),
    ("S05", include_str!("../../../scenarios/S05.json")),
];

/// The five shipped benchmark scenarios, in order.
pub fn builtin_suite() -> Vec<ScenarioSpec> {
    BUILTIN_SOURCES
        .iter()
        .map(|(id, src)| {
            load_scenario(src).unwrap_or_else(|e| panic!("built-in scenario {id} invalid: {e}"))
        })
        .collect()
}

/// Look up one built-in by id.
pub fn builtin(id: &str) -> Option<ScenarioSpec> {
    BUILTIN_SOURCES
        .iter()
        .find(|(bid, _)| *bid == id)
        .map(|(_, src)| load_scenario(src).expect("built-in scenario invalid"))
}

/// Raw JSON source of a built-in, for tooling.
pub fn builtin_source(id: &str) -> Option<&'static str> {
    BUILTIN_SOURCES
        .iter()
        .find(|(bid, _)| *bid == id)
        .map(|(_, src)| *src)
}
