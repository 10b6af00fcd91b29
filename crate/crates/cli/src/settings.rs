//! Effective run settings: defaults, then config file, then flags.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Deserialize;

use crbforge_core::pipeline::Injection;

use crate::args::CommonArgs;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize, Default)]
pub struct FileConfig {
    #[serde(default)]
    pub planner: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub timeout: Option<u64>,
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub planner: String,
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub out: PathBuf,
    pub injection: Injection,
    pub fixtures: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout: Option<u64>,
    pub timings: bool,
}

pub fn parse_injection(spec: &str) -> Result<Injection> {
    let mut injection = Injection::default();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "sign-flip" => injection.sign_flip_simplify = true,
            "low-cap" => injection.expansion_cap = Some(16),
            "low-degree-cap" => injection.degree_cap = Some(3),
            other => anyhow::bail!(
                "unknown injection `{other}` (expected sign-flip, low-cap, low-degree-cap)"
            ),
        }
    }
    Ok(injection)
}

impl Settings {
    pub fn resolve(common: &CommonArgs) -> Result<Settings> {
        let file: FileConfig = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let injection = match &common.inject {
            Some(s) => parse_injection(s)?,
            None => Injection::default(),
        };
        let planner = common
            .planner
            .clone()
            .or(file.planner)
            .unwrap_or_else(|| "template".to_string());
        if planner != "template" && planner != "llm" {
            anyhow::bail!("unknown planner `{planner}` (expected template or llm)");
        }
        Ok(Settings {
            planner,
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            points: common.points.or(file.points).unwrap_or(DEFAULT_POINTS),
            tol: common.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            out: common
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            injection,
            fixtures: common.fixtures.clone().or(file.fixtures),
            endpoint: common.endpoint.clone().or(file.endpoint),
            model: common.model.clone().or(file.model),
            timeout: common.timeout.or(file.timeout),
            timings: common.timings,
        })
    }
}
