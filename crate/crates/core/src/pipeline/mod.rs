//! Configuration-driven orchestration of the whole workflow:
//! simulate → reconstruct → encode → train → generate → select → evaluate.
//!
//! Every stage persists its artifacts in the output directory. The
//! single-stage commands reuse upstream artifacts written under the same
//! configuration and recompute the rest; [`cmd_run`] recomputes everything.

pub mod artifacts;
mod config;
mod report;
mod stages;
mod sweep;

pub use artifacts::NetworkVariant;
pub use config::{DomainConfig, DomainName, ExperimentConfig, IncompletePolicy, Method, ReportConfig, TruthMode};
pub use report::{Report, ReportRow};
pub use stages::{Pipeline, Selection};
pub use sweep::{min_max, run_sweep, KRow, RewardRow, SweepKind, SweepTable, K_SWEEP_FILE, METRIC_SWEEP_FILE};

use crate::domain::InteractionHistory;
use crate::error::Result;
use crate::policy_tree::PolicyTree;
use crate::vae::TrainedVae;

/// Everything a full run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: Report,
    pub selections: Vec<Selection>,
}

fn finish<T>(p: Pipeline, out: T) -> Result<T> {
    p.write_timings()?;
    Ok(out)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<InteractionHistory> {
    let mut p = Pipeline::open(cfg, true)?;
    let h = p.simulate()?;
    finish(p, h)
}

pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<Vec<PolicyTree>> {
    let mut p = Pipeline::open(cfg, true)?;
    let trees = p.reconstruct()?;
    finish(p, trees)
}

/// Trains every network variant the configured methods need.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<TrainedVae>> {
    let mut p = Pipeline::open(cfg, true)?;
    let trained = p
        .variants()
        .into_iter()
        .map(|v| p.train(v))
        .collect::<Result<Vec<_>>>()?;
    finish(p, trained)
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Vec<Vec<PolicyTree>>> {
    let mut p = Pipeline::open(cfg, true)?;
    let generated = p
        .variants()
        .into_iter()
        .map(|v| p.generate(v))
        .collect::<Result<Vec<_>>>()?;
    finish(p, generated)
}

pub fn cmd_select(cfg: &ExperimentConfig) -> Result<Vec<Selection>> {
    let mut p = Pipeline::open(cfg, true)?;
    let selections = cfg
        .methods
        .iter()
        .map(|&m| p.select(m))
        .collect::<Result<Vec<_>>>()?;
    finish(p, selections)
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Report> {
    let mut p = Pipeline::open(cfg, true)?;
    let selections = cfg
        .methods
        .iter()
        .map(|&m| p.selection(m))
        .collect::<Result<Vec<_>>>()?;
    let report = p.evaluate(&selections)?;
    finish(p, report)
}

/// The full workflow from a fresh history to the report.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let mut p = Pipeline::open(cfg, false)?;
    p.simulate()?;
    p.reconstruct()?;
    for v in p.variants() {
        p.train(v)?;
        p.generate(v)?;
    }
    let selections = cfg
        .methods
        .iter()
        .map(|&m| p.select(m))
        .collect::<Result<Vec<_>>>()?;
    let report = p.evaluate(&selections)?;
    finish(p, RunSummary { report, selections })
}

/// Sweeps `K` over `from..=to` on the tree-loss network's candidates.
pub fn cmd_sweep(cfg: &ExperimentConfig, kind: SweepKind, from: usize, to: usize) -> Result<SweepTable> {
    let mut p = Pipeline::open(cfg, true)?;
    let table = run_sweep(&mut p, kind, from, to).map_err(|e| e.in_stage("sweep", cfg.seed))?;
    finish(p, table)
}
