use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Metric, Target};
use super::eval::TraceRecord;
use super::run::{run_experiment, write_atomic, RunResult};
use crate::algorithms::Hyperparams;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};

/// First evaluated round where a target was met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetHit {
    pub round: usize,
    pub bytes: u64,
    pub iterations: u64,
}

fn metric_value(r: &TraceRecord, metric: Metric) -> Option<f64> {
    match metric {
        Metric::Accuracy => r.accuracy_mean,
        Metric::Loss => Some(r.loss_mean),
        Metric::Suboptimality => r.suboptimality,
    }
}

/// Whether the record's mean metric meets the target.
pub fn meets(r: &TraceRecord, target: Target) -> bool {
    match metric_value(r, target.metric) {
        Some(v) if target.metric.higher_is_better() => v >= target.threshold,
        Some(v) => v <= target.threshold,
        None => false,
    }
}

/// First record meeting `target`, with its cumulative bytes; `None` if the
/// trace never gets there.
pub fn rounds_to_target(trace: &[TraceRecord], target: Target) -> Option<TargetHit> {
    trace.iter().find(|r| meets(r, target)).map(|r| TargetHit { round: r.round, bytes: r.bytes, iterations: r.iterations })
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub local_steps: usize,
    pub result: Result<RunResult, String>,
}

/// Run `cfg` once per value of `local_steps` with identical seeds. A failing
/// run is recorded and the sweep continues. Outputs go to
/// `<out_dir>/T<value>` when the base config has an output directory.
pub fn sweep_local_steps(cfg: &ExperimentConfig, values: &[usize]) -> Result<Vec<SweepEntry>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    cfg.validate()?;
    let entries = map_range(cfg.execution, values.len(), |i| {
        let t = values[i];
        let mut c = cfg.clone();
        c.hyperparams.local_steps = t;
        c.out_dir = cfg.out_dir.as_ref().map(|d| d.join(format!("T{t}")));
        SweepEntry { local_steps: t, result: run_experiment(&c).map_err(|e| e.to_string()) }
    });
    Ok(entries)
}

/// Mean and median of per-seed values; `None` entries (not reached) count
/// as infinitely bad, so the mean is `None` whenever any seed missed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub reached: usize,
    pub seeds: usize,
}

impl Aggregate {
    pub fn of(values: &[Option<f64>]) -> Aggregate {
        let reached = values.iter().filter(|v| v.is_some()).count();
        let mean = (reached == values.len() && reached > 0).then(|| values.iter().flatten().sum::<f64>() / reached as f64);
        let mut sorted: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        sorted.sort_by(f64::total_cmp);
        let len = sorted.len();
        let median = if len == 0 {
            None
        } else if len % 2 == 1 {
            Some(sorted[len / 2])
        } else {
            Some(0.5 * (sorted[len / 2 - 1] + sorted[len / 2]))
        }
        .filter(|m| m.is_finite());
        Aggregate { mean, median, reached, seeds: len }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCell {
    pub seed: u64,
    pub hit: Option<TargetHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub target: Target,
    pub per_seed: Vec<SeedCell>,
    pub rounds: Aggregate,
    pub bytes: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRow {
    pub label: String,
    pub per_seed_loss: Vec<f64>,
    pub per_seed_accuracy: Vec<Option<f64>>,
    pub loss: Aggregate,
    pub accuracy: Aggregate,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub rows: Vec<ComparisonRow>,
    pub finals: Vec<FinalRow>,
}

impl Comparison {
    pub fn row(&self, label: &str, target: Target) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label && r.target == target)
    }

    pub fn final_row(&self, label: &str) -> Option<&FinalRow> {
        self.finals.iter().find(|r| r.label == label)
    }

    /// Long-format CSV: one line per (label, target, seed) plus `mean` and
    /// `median` lines per (label, target); unreached cells are empty.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "metric", "threshold", "seed", "round", "bytes"])?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for row in &self.rows {
            let head = [row.label.clone(), row.target.metric.name().to_string(), format!("{:?}", row.target.threshold)];
            for c in &row.per_seed {
                let (r, b) = c.hit.map(|h| (h.round.to_string(), h.bytes.to_string())).unwrap_or_default();
                w.write_record(head.iter().cloned().chain([c.seed.to_string(), r, b]))?;
            }
            w.write_record(head.iter().cloned().chain(["mean".into(), cell(row.rounds.mean), cell(row.bytes.mean)]))?;
            w.write_record(head.iter().cloned().chain(["median".into(), cell(row.rounds.median), cell(row.bytes.median)]))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("comparison.csv"), &self.to_csv()?)?;
        write_atomic(&dir.join("comparison.json"), &serde_json::to_vec_pretty(self)?)
    }
}

/// Run every config on every seed and tabulate rounds and bytes to each
/// target, plus final metrics. Configs must share problem and topology.
/// With no seeds given, each config's own seed is used.
pub fn compare(cfgs: &[ExperimentConfig], targets: &[Target], seeds: &[u64]) -> Result<Comparison> {
    let first = cfgs.first().ok_or_else(|| Error::invalid("compare needs at least one config"))?;
    for c in cfgs {
        c.validate()?;
        if c.problem != first.problem || c.topology != first.topology {
            return Err(Error::invalid(format!("config {:?} differs from {:?} in problem or topology", c.label(), first.label())));
        }
    }
    let seeds: Vec<u64> = if seeds.is_empty() { vec![first.seed] } else { seeds.to_vec() };
    let jobs: Vec<(usize, u64)> = (0..cfgs.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let results = map_range(first.execution, jobs.len(), |j| {
        let (i, seed) = jobs[j];
        let mut c = cfgs[i].clone();
        c.seed = seed;
        c.out_dir = None;
        run_experiment(&c)
    });
    let results: Vec<RunResult> = results.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut finals = Vec::new();
    for (i, cfg) in cfgs.iter().enumerate() {
        let runs: Vec<&RunResult> = (0..seeds.len()).map(|s| &results[i * seeds.len() + s]).collect();
        for &target in targets {
            let per_seed: Vec<SeedCell> =
                runs.iter().zip(&seeds).map(|(r, &seed)| SeedCell { seed, hit: rounds_to_target(&r.trace, target) }).collect();
            let rounds: Vec<Option<f64>> = per_seed.iter().map(|c| c.hit.map(|h| h.round as f64)).collect();
            let bytes: Vec<Option<f64>> = per_seed.iter().map(|c| c.hit.map(|h| h.bytes as f64)).collect();
            rows.push(ComparisonRow { label: cfg.label(), target, rounds: Aggregate::of(&rounds), bytes: Aggregate::of(&bytes), per_seed });
        }
        let per_seed_loss: Vec<f64> = runs.iter().map(|r| r.final_record().map_or(f64::NAN, |t| t.loss_mean)).collect();
        let per_seed_accuracy: Vec<Option<f64>> = runs.iter().map(|r| r.final_record().and_then(|t| t.accuracy_mean)).collect();
        finals.push(FinalRow {
            label: cfg.label(),
            loss: Aggregate::of(&per_seed_loss.iter().map(|&l| Some(l).filter(|l| l.is_finite())).collect::<Vec<_>>()),
            accuracy: Aggregate::of(&per_seed_accuracy),
            per_seed_loss,
            per_seed_accuracy,
            diverged: runs.iter().filter(|r| r.diverged()).count(),
        });
    }
    Ok(Comparison { seeds, rows, finals })
}

/// What a hyperparameter search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneScore {
    /// Median rounds to reach the target (unreached counts as infinite).
    RoundsToTarget(Target),
    /// Median final mean validation loss.
    FinalLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub candidates: Vec<Hyperparams>,
    pub scores: Vec<f64>,
    pub best: usize,
}

impl TuneReport {
    pub fn best_hyperparams(&self) -> &Hyperparams {
        &self.candidates[self.best]
    }
}

/// Small grid search: score each candidate on `seeds` and keep the best
/// (lowest median score, earliest candidate on ties). Diverged runs score
/// infinity.
pub fn tune(cfg: &ExperimentConfig, candidates: &[Hyperparams], score: TuneScore, seeds: &[u64]) -> Result<TuneReport> {
    tune_by(cfg, candidates, seeds, |_, r| match score {
        TuneScore::RoundsToTarget(t) => rounds_to_target(&r.trace, t).map(|h| h.round as f64),
        TuneScore::FinalLoss => r.final_record().map(|t| t.loss_mean).filter(|l| l.is_finite()),
    })
}

/// [`tune`] with a custom per-seed score; `None` means infinitely bad.
pub fn tune_by<F>(cfg: &ExperimentConfig, candidates: &[Hyperparams], seeds: &[u64], score: F) -> Result<TuneReport>
where
    F: Fn(u64, &RunResult) -> Option<f64> + Sync + Send,
{
    if candidates.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("tune needs candidates and seeds"));
    }
    let jobs: Vec<(usize, u64)> = (0..candidates.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let values = map_range(cfg.execution, jobs.len(), |j| {
        let (i, seed) = jobs[j];
        let mut c = cfg.clone();
        c.hyperparams = candidates[i].clone();
        c.seed = seed;
        c.out_dir = None;
        let r = run_experiment(&c)?;
        Ok(if r.diverged() { None } else { score(seed, &r) })
    });
    let values: Vec<Option<f64>> = values.into_iter().collect::<Result<_>>()?;
    let scores: Vec<f64> = values.chunks(seeds.len()).map(|chunk| Aggregate::of(chunk).median.unwrap_or(f64::INFINITY)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(TuneReport { candidates: candidates.to_vec(), scores, best })
}

/// Run the same work in sequential mode; used to check mode independence.
pub fn with_execution(cfg: &ExperimentConfig, exec: Execution) -> ExperimentConfig {
    ExperimentConfig { execution: exec, ..cfg.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(round: usize, acc: f64, bytes: u64) -> TraceRecord {
        TraceRecord {
            round,
            loss_mean: 1.0 - acc,
            loss_min: 1.0 - acc,
            loss_max: 1.0 - acc,
            accuracy_mean: Some(acc),
            accuracy_min: Some(acc),
            accuracy_max: Some(acc),
            consensus_error: 0.0,
            suboptimality: None,
            max_distance_to_optimum: None,
            bytes,
            iterations: round as u64,
            repaired_edges: 0,
            node_loss: vec![1.0 - acc],
            node_accuracy: Some(vec![acc]),
        }
    }

    #[test]
    fn first_crossing_and_not_reached() {
        let trace = vec![rec(1, 0.3, 10), rec(2, 0.8, 20), rec(3, 0.96, 30)];
        let hit = rounds_to_target(&trace, Target { metric: Metric::Accuracy, threshold: 0.95 }).unwrap();
        assert_eq!((hit.round, hit.bytes), (3, 30));
        assert!(rounds_to_target(&trace, Target { metric: Metric::Accuracy, threshold: 0.99 }).is_none());
        let hit = rounds_to_target(&trace, Target { metric: Metric::Loss, threshold: 0.25 }).unwrap();
        assert_eq!(hit.round, 2);
        assert!(rounds_to_target(&trace, Target { metric: Metric::Suboptimality, threshold: 1.0 }).is_none());
    }

    #[test]
    fn aggregates() {
        let a = Aggregate::of(&[Some(1.0), Some(3.0), Some(2.0)]);
        assert_eq!((a.mean, a.median, a.reached), (Some(2.0), Some(2.0), 3));
        let a = Aggregate::of(&[Some(1.0), None, Some(2.0)]);
        assert_eq!((a.mean, a.median, a.reached), (None, Some(2.0), 2));
        let a = Aggregate::of(&[Some(1.0), None]);
        assert_eq!(a.median, None);
        let a = Aggregate::of(&[Some(1.0), Some(4.0)]);
        assert_eq!(a.median, Some(2.5));
    }
}
