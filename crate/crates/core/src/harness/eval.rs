use serde::{Deserialize, Serialize};

use super::problem::Evaluator;
use crate::algorithms::NodeState;
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::linalg::{dist, mean_of};

/// Metrics of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub node_loss: Vec<f64>,
    pub node_accuracy: Option<Vec<f64>>,
    pub loss: Stats,
    pub accuracy: Option<Stats>,
    /// `max_i |theta_i - theta_bar|`.
    pub consensus_error: f64,
    /// `|theta_bar - theta_star|`, quadratics only.
    pub suboptimality: Option<f64>,
    /// `max_i |theta_i - theta_star|`, quadratics only.
    pub max_distance_to_optimum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // rounding in the sum can push the mean of equal values past them
        Stats { mean: mean.clamp(min, max), min, max }
    }
}

/// Evaluate every node's parameters. Never mutates `states`.
pub fn evaluate(states: &[NodeState], evaluator: &Evaluator, exec: Execution) -> Metrics {
    let thetas: Vec<&[f64]> = states.iter().map(|s| s.theta.as_slice()).collect();
    let bar = mean_of(&thetas);
    let consensus_error = thetas.iter().map(|t| dist(t, &bar)).fold(0.0, f64::max);
    match evaluator {
        Evaluator::Quadratic { mean, optimum, optimum_value } => {
            let node_loss: Vec<f64> = thetas.iter().map(|t| mean.value(t) - optimum_value).collect();
            Metrics {
                loss: Stats::of(&node_loss),
                node_loss,
                node_accuracy: None,
                accuracy: None,
                consensus_error,
                suboptimality: Some(dist(&bar, optimum)),
                max_distance_to_optimum: Some(thetas.iter().map(|t| dist(t, optimum)).fold(0.0, f64::max)),
            }
        }
        Evaluator::Validation(objective) => {
            let per_node = map_range(exec, thetas.len(), |i| (objective.full_loss(thetas[i]), objective.accuracy(thetas[i])));
            let node_loss: Vec<f64> = per_node.iter().map(|p| p.0).collect();
            let node_accuracy: Option<Vec<f64>> = per_node.iter().map(|p| p.1).collect();
            Metrics {
                loss: Stats::of(&node_loss),
                accuracy: node_accuracy.as_deref().map(Stats::of),
                node_loss,
                node_accuracy,
                consensus_error,
                suboptimality: None,
                max_distance_to_optimum: None,
            }
        }
    }
}

/// One evaluated round.
///
/// CSV column order: `round, loss_mean, loss_min, loss_max, accuracy_mean,
/// accuracy_min, accuracy_max, consensus_error, suboptimality,
/// max_distance_to_optimum, bytes, iterations, repaired_edges, node_loss,
/// node_accuracy`. Per-node columns are `;`-separated; absent values are
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub loss_mean: f64,
    pub loss_min: f64,
    pub loss_max: f64,
    pub accuracy_mean: Option<f64>,
    pub accuracy_min: Option<f64>,
    pub accuracy_max: Option<f64>,
    pub consensus_error: f64,
    pub suboptimality: Option<f64>,
    pub max_distance_to_optimum: Option<f64>,
    /// Cumulative bytes sent by all nodes.
    pub bytes: u64,
    /// Cumulative training forward/backward passes of the busiest node.
    pub iterations: u64,
    /// Edges added this round to reconnect a time-varying graph.
    pub repaired_edges: usize,
    pub node_loss: Vec<f64>,
    pub node_accuracy: Option<Vec<f64>>,
}

impl TraceRecord {
    pub fn new(round: usize, m: Metrics, bytes: u64, iterations: u64, repaired_edges: usize) -> Self {
        TraceRecord {
            round,
            loss_mean: m.loss.mean,
            loss_min: m.loss.min,
            loss_max: m.loss.max,
            accuracy_mean: m.accuracy.map(|a| a.mean),
            accuracy_min: m.accuracy.map(|a| a.min),
            accuracy_max: m.accuracy.map(|a| a.max),
            consensus_error: m.consensus_error,
            suboptimality: m.suboptimality,
            max_distance_to_optimum: m.max_distance_to_optimum,
            bytes,
            iterations,
            repaired_edges,
            node_loss: m.node_loss,
            node_accuracy: m.node_accuracy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.node_loss.iter().all(|l| l.is_finite()) && self.consensus_error.is_finite()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Divergence { round: self.round })
        }
    }
}
