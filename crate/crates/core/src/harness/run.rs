use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use super::config::{ExperimentConfig, Target};
use super::eval::{evaluate, TraceRecord};
use super::problem::{ProblemInstance, TopologyPlan};
use super::report::{rounds_to_target, TargetHit};
use crate::algorithms::{init_states, payload_values_per_edge, run_round, AlgorithmKind, BandwidthLedger, NodeState, RoundContext};
use crate::exec::Execution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunStatus {
    Completed,
    Diverged { round: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub target: Target,
    pub hit: Option<TargetHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub algorithm: AlgorithmKind,
    pub status: RunStatus,
    pub rounds_completed: usize,
    pub final_record: Option<TraceRecord>,
    pub targets: Vec<TargetResult>,
    pub config: ExperimentConfig,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    pub summary: RunSummary,
}

impl RunResult {
    pub fn diverged(&self) -> bool {
        matches!(self.summary.status, RunStatus::Diverged { .. })
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }
}

/// Execute `cfg.rounds` rounds and evaluate every `eval_interval` rounds
/// (plus round 0 and the last round).
///
/// Divergence ends the run early with status `Diverged`; the partial trace
/// is kept and written. Configuration problems are reported as
/// `Error::Config` before any round runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let as_config = |e: Error| match e {
        Error::InvalidParameter(m) | Error::SingularSystem(m) => Error::Config(m),
        Error::ConstructionFailure { target, closest } => {
            Error::Config(format!("could not build topology with connectivity {target} (closest {closest})"))
        }
        other => other,
    };
    let n = cfg.topology.n();
    let mut problem = ProblemInstance::build(&cfg.problem, n, cfg.seed).map_err(as_config)?;
    let topology = TopologyPlan::build(&cfg.topology, cfg.rounds, cfg.seed).map_err(as_config)?;
    let kind = cfg.algorithm;
    let hp = &cfg.hyperparams;
    let exec = cfg.execution;

    let mut states = init_states(kind, &problem.current().nodes, &problem.theta_ini, cfg.seed, hp).map_err(as_config)?;
    let mut ledger = BandwidthLedger::new(n);
    let mut trace = Vec::new();
    let mut status = RunStatus::Completed;

    let first = make_record(&problem, &states, exec, 0, 0, topology.repaired(0));
    if first.check_finite().is_err() {
        status = RunStatus::Diverged { round: 0 };
    }
    trace.push(first);

    if status == RunStatus::Completed {
        for k in 0..cfg.rounds {
            let current = problem.current().clone();
            let next = if problem.is_streaming() { Some(problem.advance()?.clone()) } else { None };
            let graph = topology.graph(k);
            let mixing = topology.mixing(k);
            let mut ctx = RoundContext::new(&current.nodes, graph, mixing, hp).with_round(k).with_exec(exec).with_pooled(&current.pooled);
            if let Some(next) = &next {
                ctx = ctx.with_next(&next.nodes);
            }
            match run_round(kind, &mut states, &ctx) {
                Ok(()) => {}
                Err(Error::Divergence { round }) => {
                    status = RunStatus::Diverged { round };
                    break;
                }
                Err(e) => return Err(e),
            }
            ledger.charge_round(kind, problem.dim, graph, hp.precision);
            let round = k + 1;
            if round % cfg.eval_interval == 0 || round == cfg.rounds {
                let rec = make_record(&problem, &states, exec, round, ledger.total(), topology.repaired(k));
                let finite = rec.check_finite();
                trace.push(rec);
                if finite.is_err() {
                    status = RunStatus::Diverged { round };
                    break;
                }
            }
        }
    }

    let targets = cfg.targets.iter().map(|&t| TargetResult { target: t, hit: rounds_to_target(&trace, t) }).collect();
    let summary = RunSummary {
        label: cfg.label(),
        algorithm: kind,
        status,
        rounds_completed: match status {
            RunStatus::Completed => cfg.rounds,
            RunStatus::Diverged { round } => round,
        },
        final_record: trace.last().cloned(),
        targets,
        config: cfg.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let result = RunResult { trace, summary };
    if let Some(dir) = &cfg.out_dir {
        write_outputs(dir, &result)?;
    }
    Ok(result)
}

fn make_record(
    problem: &ProblemInstance,
    states: &[NodeState],
    exec: Execution,
    round: usize,
    bytes: u64,
    repaired: usize,
) -> TraceRecord {
    let m = evaluate(states, &problem.evaluator, exec);
    let iterations = states.iter().map(|s| s.grad_passes).max().unwrap_or(0);
    TraceRecord::new(round, m, bytes, iterations, repaired)
}

const CSV_HEADER: [&str; 15] = [
    "round",
    "loss_mean",
    "loss_min",
    "loss_max",
    "accuracy_mean",
    "accuracy_min",
    "accuracy_max",
    "consensus_error",
    "suboptimality",
    "max_distance_to_optimum",
    "bytes",
    "iterations",
    "repaired_edges",
    "node_loss",
    "node_accuracy",
];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// Trace as CSV text with the fixed column order of [`TraceRecord`].
pub fn trace_to_csv(trace: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in trace {
        w.write_record([
            r.round.to_string(),
            num(r.loss_mean),
            num(r.loss_min),
            num(r.loss_max),
            opt(r.accuracy_mean),
            opt(r.accuracy_min),
            opt(r.accuracy_max),
            num(r.consensus_error),
            opt(r.suboptimality),
            opt(r.max_distance_to_optimum),
            r.bytes.to_string(),
            r.iterations.to_string(),
            r.repaired_edges.to_string(),
            joined(&r.node_loss),
            r.node_accuracy.as_deref().map(joined).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Trace as JSON lines, one record per line.
pub fn trace_to_jsonl(trace: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in trace {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    bandwidth_counting: &'a str,
    payload_values_per_edge: u64,
    bytes_per_value: u64,
    kgt_variant: &'a str,
    iteration_counting: &'a str,
    target_aggregate: &'a str,
    trace_columns: &'a [&'a str],
}

/// Write `trace.csv`, `trace.jsonl`, `summary.json` and `meta.json`.
pub fn write_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    let cfg = &result.summary.config;
    write_atomic(&dir.join("trace.csv"), &trace_to_csv(&result.trace)?)?;
    write_atomic(&dir.join("trace.jsonl"), &trace_to_jsonl(&result.trace)?)?;
    write_atomic(&dir.join("summary.json"), &serde_json::to_vec_pretty(&result.summary)?)?;
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        bandwidth_counting: "directed: every transmission over each direction of an edge is counted",
        payload_values_per_edge: payload_values_per_edge(cfg.algorithm),
        bytes_per_value: cfg.hyperparams.precision.bytes(),
        kgt_variant: "correction",
        iteration_counting: "training forward/backward passes (minibatch or full) of the busiest node; evaluation excluded",
        target_aggregate: "mean across nodes",
        trace_columns: &CSV_HEADER,
    };
    write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}
