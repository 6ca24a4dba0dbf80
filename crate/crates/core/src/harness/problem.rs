use std::sync::Arc;

use super::config::{ProblemSpec, TopologySpec};
use crate::error::{Error, Result};
use crate::objectives::{
    holdout_split, make_quadratic_family, make_synthetic_classification, mean_hessian, partition_non_iid, quadratic_optimum, Dataset,
    DatasetObjective, Mlp, Model, Objective, QuadraticProblem, Softmax, StreamingFeed,
};
use crate::topology::{
    build_complete, build_path, build_ring, build_star, build_with_connectivity, metropolis_weights, random_walk_trajectories, range_schedule,
    Graph, MixingMatrix,
};
use crate::topology::io::read_graph;

/// Node objectives for one round plus the matching pooled objective.
#[derive(Clone)]
pub struct RoundData {
    pub nodes: Vec<Arc<dyn Objective>>,
    pub pooled: Arc<dyn Objective>,
}

/// How the evaluation metrics are computed.
#[derive(Debug, Clone)]
pub enum Evaluator {
    /// Loss is the optimality gap `f(theta_i) - f(theta_star)` of the mean
    /// objective; suboptimality is reported against `optimum`.
    Quadratic { mean: QuadraticProblem, optimum: Vec<f64>, optimum_value: f64 },
    /// Loss and accuracy on a held-out set.
    Validation(Arc<dyn Objective>),
}

#[derive(Debug, Clone)]
enum Source {
    Static,
    Streaming { feeds: Vec<StreamingFeed>, model: Softmax, l2: f64 },
}

/// Instantiated problem: current data, the evaluator, and the start point.
pub struct ProblemInstance {
    pub dim: usize,
    pub theta_ini: Vec<f64>,
    pub evaluator: Evaluator,
    current: RoundData,
    source: Source,
}

impl ProblemInstance {
    pub fn build(spec: &ProblemSpec, n: usize, seed: u64) -> Result<Self> {
        match *spec {
            ProblemSpec::Quadratic { d, condition, heterogeneity } => {
                let family = make_quadratic_family(n, d, condition, heterogeneity, seed)?;
                let optimum = quadratic_optimum(&family)?;
                let (h, b) = mean_hessian(&family)?;
                let mean = QuadraticProblem::new(h, b, 0.0)?;
                let optimum_value = mean.value(&optimum);
                let nodes = family.into_iter().map(|q| Arc::new(q) as Arc<dyn Objective>).collect();
                Ok(ProblemInstance {
                    dim: d,
                    theta_ini: vec![0.0; d],
                    evaluator: Evaluator::Quadratic { mean: mean.clone(), optimum, optimum_value },
                    current: RoundData { nodes, pooled: Arc::new(mean) },
                    source: Source::Static,
                })
            }
            ProblemSpec::Softmax { classes, d_in, per_class, separation, max_classes_per_node, l2, holdout } => {
                let (train, valid) = split(classes, d_in, per_class, separation, holdout, seed)?;
                let model = Softmax { d_in, classes };
                Self::from_shards(&train, valid, n, max_classes_per_node, model, l2, seed)
            }
            ProblemSpec::Mlp { classes, d_in, per_class, separation, max_classes_per_node, hidden, activation, holdout } => {
                let (train, valid) = split(classes, d_in, per_class, separation, holdout, seed)?;
                let model = Mlp { d_in, hidden, classes, activation, init_seed: seed };
                Self::from_shards(&train, valid, n, max_classes_per_node, model, 0.0, seed)
            }
            ProblemSpec::StreamingSoftmax { classes, d_in, per_class, separation, max_classes_per_node, window, stride, initial, l2, holdout } => {
                let (train, valid) = split(classes, d_in, per_class, separation, holdout, seed)?;
                let model = Softmax { d_in, classes };
                let stride = stride.unwrap_or_else(|| StreamingFeed::default_stride(window));
                let initial = initial.unwrap_or(stride);
                // shards keep the class-grouped order, so each window drifts
                // through the node's classes over time
                let feeds = partition_non_iid(&train, n, max_classes_per_node, seed)?
                    .into_iter()
                    .map(|shard| {
                        let len = shard.len();
                        StreamingFeed::new(Arc::new(shard), window, stride, initial.min(len))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let current = windows(&feeds, &model, l2)?;
                let validation = DatasetObjective::new(Arc::new(valid), model.clone(), 0.0);
                Ok(ProblemInstance {
                    dim: validation.dim(),
                    theta_ini: validation.initial_params(),
                    evaluator: Evaluator::Validation(Arc::new(validation)),
                    current,
                    source: Source::Streaming { feeds, model, l2 },
                })
            }
        }
    }

    fn from_shards<M: Model + 'static>(
        train: &Dataset,
        valid: Dataset,
        n: usize,
        max_classes: usize,
        model: M,
        l2: f64,
        seed: u64,
    ) -> Result<Self> {
        let shards: Vec<Arc<Dataset>> = partition_non_iid(train, n, max_classes, seed)?.into_iter().map(Arc::new).collect();
        let nodes = shards.iter().map(|s| Arc::new(DatasetObjective::new(s.clone(), model.clone(), l2)) as Arc<dyn Objective>).collect();
        let pooled = Arc::new(DatasetObjective::pooled(&shards, model.clone(), l2)?);
        let validation = DatasetObjective::new(Arc::new(valid), model, 0.0);
        Ok(ProblemInstance {
            dim: validation.dim(),
            theta_ini: validation.initial_params(),
            evaluator: Evaluator::Validation(Arc::new(validation)),
            current: RoundData { nodes, pooled },
            source: Source::Static,
        })
    }

    pub fn current(&self) -> &RoundData {
        &self.current
    }

    pub fn is_streaming(&self) -> bool {
        matches!(self.source, Source::Streaming { .. })
    }

    /// Let new data arrive and return the objectives for the next round.
    pub fn advance(&mut self) -> Result<&RoundData> {
        if let Source::Streaming { feeds, model, l2 } = &mut self.source {
            for f in feeds.iter_mut() {
                f.advance_window();
            }
            self.current = windows(feeds, model, *l2)?;
        }
        Ok(&self.current)
    }
}

fn split(classes: usize, d_in: usize, per_class: usize, separation: f64, holdout: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let ds = make_synthetic_classification(classes, d_in, per_class, separation, seed)?;
    holdout_split(&ds, holdout, seed)
}

fn windows(feeds: &[StreamingFeed], model: &Softmax, l2: f64) -> Result<RoundData> {
    let shards: Vec<Arc<Dataset>> = feeds.iter().map(|f| Arc::new(f.active())).collect();
    let nodes = shards.iter().map(|s| Arc::new(DatasetObjective::new(s.clone(), model.clone(), l2)) as Arc<dyn Objective>).collect();
    let pooled = Arc::new(DatasetObjective::pooled(&shards, model.clone(), l2)?);
    Ok(RoundData { nodes, pooled })
}

/// Per-round graphs and mixing matrices. Static topologies hold one entry.
#[derive(Debug, Clone)]
pub struct TopologyPlan {
    graphs: Vec<Graph>,
    mixing: Vec<MixingMatrix>,
    repaired: Vec<usize>,
}

impl TopologyPlan {
    pub fn build(spec: &TopologySpec, rounds: usize, seed: u64) -> Result<Self> {
        let graph = match spec {
            TopologySpec::Ring { n } => build_ring(*n)?,
            TopologySpec::Complete { n } => build_complete(*n)?,
            TopologySpec::Path { n } => build_path(*n)?,
            TopologySpec::Star { n } => build_star(*n)?,
            TopologySpec::Connectivity { n, target, tol } => build_with_connectivity(*n, *target, *tol, seed)?,
            TopologySpec::EdgeList { n, path } => {
                let g = read_graph(path)?;
                if g.node_count() != *n {
                    return Err(Error::Config(format!("edge list has {} nodes, config says {n}", g.node_count())));
                }
                g
            }
            TopologySpec::Range { n, radius, arena, step } => {
                let k = rounds.max(1);
                let positions = random_walk_trajectories(*n, k, *arena, *step, seed);
                let schedule = range_schedule(*n, k, &positions, *radius)?;
                let mut plan = TopologyPlan { graphs: Vec::new(), mixing: Vec::new(), repaired: Vec::new() };
                for sg in schedule.iter() {
                    plan.mixing.push(metropolis_weights(&sg.graph)?);
                    plan.repaired.push(sg.repaired.len());
                    plan.graphs.push(sg.graph.clone());
                }
                return Ok(plan);
            }
        };
        if !graph.is_connected() {
            return Err(Error::Config("topology is not connected".into()));
        }
        let mixing = metropolis_weights(&graph)?;
        Ok(TopologyPlan { graphs: vec![graph], mixing: vec![mixing], repaired: vec![0] })
    }

    pub fn graph(&self, round: usize) -> &Graph {
        &self.graphs[round.min(self.graphs.len() - 1)]
    }

    pub fn mixing(&self, round: usize) -> &MixingMatrix {
        &self.mixing[round.min(self.mixing.len() - 1)]
    }

    /// Edges added to reconnect the graph used at `round`.
    pub fn repaired(&self, round: usize) -> usize {
        self.repaired[round.min(self.repaired.len() - 1)]
    }
}
