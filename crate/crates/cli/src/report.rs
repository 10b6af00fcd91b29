//! Aggregation of trace corpora into failure-distribution and per-run
//! step/revision tables. Outputs are deterministic functions of the input
//! traces: files are read in sorted name order and no timing data is
//! consulted.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crbforge_core::pipeline::{DerivationTrace, FailureClass, StepStatus};

pub const FAILURE_CSV_HEADER: &str = "failure_class,count,percent";
pub const METRICS_CSV_HEADER: &str =
    "trace_file,scenario,planner,seed,steps,failed_steps,revisions,abandoned,outputs,first_failure_index";

#[derive(Debug, Serialize)]
pub struct FailureRow {
    pub failure_class: String,
    pub count: usize,
    pub percent: String,
}

#[derive(Debug, Serialize)]
pub struct MetricsRow {
    pub trace_file: String,
    pub scenario: String,
    pub planner: String,
    pub seed: u64,
    pub steps: usize,
    pub failed_steps: usize,
    pub revisions: u32,
    pub abandoned: bool,
    pub outputs: usize,
    pub first_failure_index: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub traces: usize,
    pub failures: usize,
    pub failure_distribution: Vec<FailureRow>,
    pub metrics: Vec<MetricsRow>,
}

/// Read every `*.json` trace in the directory, sorted by file name.
pub fn load_traces(dir: &Path) -> Result<Vec<(String, DerivationTrace)>> {
    let mut names: Vec<String> = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading trace directory {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name.ends_with(".json") {
            names.push(name);
        }
    }
    names.sort();
    let mut traces = Vec::new();
    for name in names {
        let path = dir.join(&name);
        let text = std::fs::read_to_string(&path)?;
        match DerivationTrace::from_json(&text) {
            Ok(t) => traces.push((name, t)),
            Err(_) => continue, // not a trace file; ignore
        }
    }
    anyhow::ensure!(
        !traces.is_empty(),
        "no traces found in {}",
        dir.display()
    );
    Ok(traces)
}

pub fn build_report(traces: &[(String, DerivationTrace)]) -> ReportBundle {
    let mut counts: BTreeMap<FailureClass, usize> = BTreeMap::new();
    let mut failures = 0usize;
    for (_, trace) in traces {
        let class = trace
            .failure_class
            .or_else(|| trace.compute_failure_class());
        if let Some(c) = class {
            *counts.entry(c).or_insert(0) += 1;
            failures += 1;
        }
    }
    let failure_distribution = FailureClass::ALL
        .iter()
        .map(|c| {
            let count = counts.get(c).copied().unwrap_or(0);
            let percent = if failures == 0 {
                0.0
            } else {
                count as f64 / failures as f64 * 100.0
            };
            FailureRow {
                failure_class: c.label().to_string(),
                count,
                percent: format!("{percent:.1}"),
            }
        })
        .collect();

    let metrics = traces
        .iter()
        .map(|(name, t)| MetricsRow {
            trace_file: name.clone(),
            scenario: t.scenario_id.clone(),
            planner: t.planner_id.clone(),
            seed: t.seed,
            steps: t.steps.len(),
            failed_steps: t
                .steps
                .iter()
                .filter(|s| s.status != StepStatus::Ok)
                .count(),
            revisions: t.total_revisions,
            abandoned: t.steps.iter().any(|s| s.status == StepStatus::Abandoned),
            outputs: t.outputs.len(),
            first_failure_index: t
                .steps
                .iter()
                .find(|s| s.status != StepStatus::Ok)
                .map(|s| s.index),
        })
        .collect();

    ReportBundle {
        traces: traces.len(),
        failures,
        failure_distribution,
        metrics,
    }
}

pub fn failure_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from(FAILURE_CSV_HEADER);
    out.push('\n');
    for row in &bundle.failure_distribution {
        out.push_str(&format!(
            "{},{},{}\n",
            row.failure_class, row.count, row.percent
        ));
    }
    out
}

pub fn metrics_csv(bundle: &ReportBundle) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for row in &bundle.metrics {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.trace_file,
            row.scenario,
            row.planner,
            row.seed,
            row.steps,
            row.failed_steps,
            row.revisions,
            row.abandoned,
            row.outputs,
            row.first_failure_index
                .map(|i| i.to_string())
                .unwrap_or_default(),
        ));
    }
    out
}
