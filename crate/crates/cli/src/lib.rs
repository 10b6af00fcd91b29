//! Command implementations behind the `crbforge` binary.
//!
//! Exit-code contract: 0 success, 1 usage or input error, 2 verification
//! failure. Machine outputs (trace and report files) carry no wall-clock
//! data unless `--timings` is passed, so identical seeds and flags produce
//! byte-identical files.

pub mod args;
pub mod report;
pub mod run;
pub mod settings;

use std::io::Write;

use anyhow::Result;
use clap::Parser;

use crbforge_core::pipeline::StepStatus;
use crbforge_core::scenario::builtin_suite;

use args::{BenchArgs, Cli, Command, DeriveArgs, ReportArgs};
use run::{build_roles, load_scenario_ref, run_scenario, write_trace, RunOutcome};
use settings::Settings;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;

/// Entry point used by `main` and by integration tests.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // --help/--version print to stdout and succeed; everything else
            // is a usage error.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_PASS
                }
                _ => {
                    eprint!("{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Derive(a) => cmd_derive(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn cmd_derive(args: &DeriveArgs) -> Result<i32> {
    let settings = Settings::resolve(&args.common)?;
    let spec = load_scenario_ref(&args.scenario)?;
    let roles = build_roles(&settings)?;
    let outcome = run_scenario(&spec, &settings, &roles);
    let path = write_trace(&outcome.trace, &settings.out)?;
    describe_run(&spec.id, &outcome, &path);
    Ok(if outcome.pass {
        EXIT_PASS
    } else {
        EXIT_VERIFICATION
    })
}

fn describe_run(id: &str, outcome: &RunOutcome, path: &std::path::Path) {
    let steps = outcome.trace.steps.len();
    let patched = outcome
        .trace
        .steps
        .iter()
        .filter(|s| s.status == StepStatus::PatchedOk)
        .count();
    let mut line = format!(
        "{id}: {} ({steps} steps, {} revisions",
        if outcome.pass { "pass" } else { "FAIL" },
        outcome.trace.total_revisions
    );
    if patched > 0 {
        line.push_str(&format!(", {patched} patched"));
    }
    line.push(')');
    if !outcome.pass && !outcome.summary.is_empty() {
        line.push_str(&format!(" — {}", outcome.summary));
    }
    eprintln!("{line}");
    eprintln!("  trace: {}", path.display());
}

#[derive(serde::Serialize)]
struct BenchRow {
    scenario: String,
    planner: String,
    seed: u64,
    status: String,
    steps: usize,
    revisions: u32,
    targets: usize,
    max_rel_err: String,
    skipped_points: usize,
}

pub const BENCH_CSV_HEADER: &str =
    "scenario,planner,seed,status,steps,revisions,targets,max_rel_err,skipped_points";

fn bench_row(outcome: &RunOutcome) -> BenchRow {
    let (max_err, skipped) = outcome
        .trace
        .validation
        .as_ref()
        .map(|v| {
            let worst = v
                .targets
                .values()
                .map(|t| t.max_rel_err)
                .fold(0.0f64, f64::max);
            let skipped = v.targets.values().map(|t| t.points_skipped).max().unwrap_or(0);
            (worst, skipped)
        })
        .unwrap_or((f64::INFINITY, 0));
    BenchRow {
        scenario: outcome.trace.scenario_id.clone(),
        planner: outcome.trace.planner_id.clone(),
        seed: outcome.trace.seed,
        status: if outcome.pass { "pass" } else { "fail" }.to_string(),
        steps: outcome.trace.steps.len(),
        revisions: outcome.trace.total_revisions,
        targets: outcome.trace.outputs.len(),
        max_rel_err: format!("{:.3e}", max_err),
        skipped_points: skipped,
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let settings = Settings::resolve(&args.common)?;
    let suite = builtin_suite();

    let outcomes = run_suite(&suite, &settings, args.jobs)?;

    std::fs::create_dir_all(&settings.out)?;
    let rows: Vec<BenchRow> = outcomes.iter().map(bench_row).collect();
    let mut csv = String::from(BENCH_CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.planner,
            r.seed,
            r.status,
            r.steps,
            r.revisions,
            r.targets,
            r.max_rel_err,
            r.skipped_points
        ));
    }
    std::fs::write(settings.out.join("bench_report.csv"), &csv)?;
    std::fs::write(
        settings.out.join("bench_report.json"),
        serde_json::to_string_pretty(&rows)?,
    )?;
    for outcome in &outcomes {
        write_trace(&outcome.trace, &settings.out)?;
    }

    let mut all_pass = true;
    let mut err = std::io::stderr().lock();
    for (outcome, row) in outcomes.iter().zip(rows.iter()) {
        all_pass &= outcome.pass;
        writeln!(
            err,
            "{}: {} ({} steps, {} revisions, max rel err {})",
            row.scenario, row.status, row.steps, row.revisions, row.max_rel_err
        )?;
        if !outcome.pass && !outcome.summary.is_empty() {
            writeln!(err, "  {}", outcome.summary)?;
        }
    }
    writeln!(
        err,
        "{}/5 scenarios pass; reports in {}",
        outcomes.iter().filter(|o| o.pass).count(),
        settings.out.display()
    )?;
    Ok(if all_pass { EXIT_PASS } else { EXIT_VERIFICATION })
}

#[cfg(feature = "parallel")]
fn run_suite(
    suite: &[crbforge_core::scenario::ScenarioSpec],
    settings: &Settings,
    jobs: usize,
) -> Result<Vec<RunOutcome>> {
    use rayon::prelude::*;
    let worker = |spec: &crbforge_core::scenario::ScenarioSpec| -> Result<RunOutcome> {
        // Roles are built per scenario so planner/patcher state is never
        // shared across workers.
        let roles = build_roles(settings)?;
        Ok(run_scenario(spec, settings, &roles))
    };
    if jobs == 1 {
        return suite.iter().map(worker).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs) // 0 = one per logical core
        .build()?;
    pool.install(|| suite.par_iter().map(worker).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_suite(
    suite: &[crbforge_core::scenario::ScenarioSpec],
    settings: &Settings,
    _jobs: usize,
) -> Result<Vec<RunOutcome>> {
    suite
        .iter()
        .map(|spec| {
            let roles = build_roles(settings)?;
            Ok(run_scenario(spec, settings, &roles))
        })
        .collect()
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    let traces = report::load_traces(&args.traces)?;
    let bundle = report::build_report(&traces);
    let out = args.out.clone().unwrap_or_else(|| args.traces.clone());
    std::fs::create_dir_all(&out)?;
    std::fs::write(
        out.join("failure_distribution.csv"),
        report::failure_csv(&bundle),
    )?;
    std::fs::write(out.join("derivation_metrics.csv"), report::metrics_csv(&bundle))?;
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&bundle)?,
    )?;
    eprintln!(
        "{} traces, {} failures; tables in {}",
        bundle.traces,
        bundle.failures,
        out.display()
    );
    Ok(EXIT_PASS)
}
