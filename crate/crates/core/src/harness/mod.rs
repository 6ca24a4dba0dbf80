//! Experiment orchestration: configuration, seeded runs with periodic
//! evaluation, target tables, local-step sweeps, and file output.

mod config;
mod eval;
mod problem;
mod report;
mod run;

pub use config::{ExperimentConfig, Metric, ProblemSpec, Target, TopologySpec};
pub use eval::{evaluate, Metrics, Stats, TraceRecord};
pub use problem::{Evaluator, ProblemInstance, RoundData, TopologyPlan};
pub use report::{
    compare, meets, rounds_to_target, sweep_local_steps, tune, tune_by, with_execution, Aggregate, Comparison, ComparisonRow, FinalRow, SeedCell,
    SweepEntry, TargetHit, TuneReport, TuneScore,
};
pub use run::{run_experiment, trace_to_csv, trace_to_jsonl, write_atomic, write_outputs, RunResult, RunStatus, RunSummary, TargetResult};
