use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgorithmKind, Hyperparams, LocalSolver};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::objectives::Activation;

/// Local objectives and how data is spread over the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Heterogeneous quadratic family.
    Quadratic { d: usize, condition: f64, heterogeneity: f64 },
    /// Softmax regression on Gaussian clusters, split non-IID.
    Softmax {
        classes: usize,
        d_in: usize,
        per_class: usize,
        separation: f64,
        max_classes_per_node: usize,
        #[serde(default)]
        l2: f64,
        #[serde(default = "default_holdout")]
        holdout: f64,
    },
    /// One-hidden-layer network on the same data layout as `Softmax`.
    Mlp {
        classes: usize,
        d_in: usize,
        per_class: usize,
        separation: f64,
        max_classes_per_node: usize,
        hidden: usize,
        activation: Activation,
        #[serde(default = "default_holdout")]
        holdout: f64,
    },
    /// Softmax regression where each node sees its shard through a sliding
    /// window that advances every round.
    StreamingSoftmax {
        classes: usize,
        d_in: usize,
        per_class: usize,
        separation: f64,
        max_classes_per_node: usize,
        window: usize,
        /// Samples arriving per round; defaults to `window / 8`.
        #[serde(default)]
        stride: Option<usize>,
        /// Samples available before the first round; defaults to `stride`.
        #[serde(default)]
        initial: Option<usize>,
        #[serde(default)]
        l2: f64,
        #[serde(default = "default_holdout")]
        holdout: f64,
    },
}

fn default_holdout() -> f64 {
    0.2
}

impl ProblemSpec {
    pub fn is_quadratic(&self) -> bool {
        matches!(self, ProblemSpec::Quadratic { .. })
    }

    pub fn is_classification(&self) -> bool {
        !self.is_quadratic()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match *self {
            ProblemSpec::Quadratic { d, condition, heterogeneity } => {
                if d == 0 || !(condition >= 1.0) || !(heterogeneity >= 0.0) {
                    return bad("quadratic needs d >= 1, condition >= 1, heterogeneity >= 0");
                }
            }
            ProblemSpec::Softmax { classes, d_in, per_class, max_classes_per_node, l2, holdout, .. }
            | ProblemSpec::StreamingSoftmax { classes, d_in, per_class, max_classes_per_node, l2, holdout, .. } => {
                check_data(classes, d_in, per_class, max_classes_per_node, holdout)?;
                if !(l2 >= 0.0) {
                    return bad("l2 must be >= 0");
                }
            }
            ProblemSpec::Mlp { classes, d_in, per_class, max_classes_per_node, hidden, holdout, .. } => {
                check_data(classes, d_in, per_class, max_classes_per_node, holdout)?;
                if hidden == 0 {
                    return bad("hidden width must be >= 1");
                }
            }
        }
        if let ProblemSpec::StreamingSoftmax { window, stride, initial, .. } = *self {
            if window == 0 || stride == Some(0) || initial == Some(0) {
                return bad("window, stride and initial must be positive");
            }
        }
        Ok(())
    }
}

fn check_data(classes: usize, d_in: usize, per_class: usize, max_classes: usize, holdout: f64) -> Result<()> {
    if classes < 2 || d_in == 0 || per_class == 0 || max_classes == 0 {
        return Err(Error::Config("need classes >= 2 and positive d_in, per_class, max_classes_per_node".into()));
    }
    if !(0.0..1.0).contains(&holdout) || holdout <= 0.0 {
        return Err(Error::Config("holdout must lie in (0, 1)".into()));
    }
    Ok(())
}

/// Communication topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Ring { n: usize },
    Complete { n: usize },
    Path { n: usize },
    Star { n: usize },
    /// Random graph with algebraic connectivity `target +- tol`.
    Connectivity { n: usize, target: f64, tol: f64 },
    /// Time-varying disk graphs of nodes doing random walks in a square arena.
    Range { n: usize, radius: f64, arena: f64, step: f64 },
    /// Static graph from an edge-list file.
    EdgeList { n: usize, path: PathBuf },
}

impl TopologySpec {
    pub fn n(&self) -> usize {
        match *self {
            TopologySpec::Ring { n }
            | TopologySpec::Complete { n }
            | TopologySpec::Path { n }
            | TopologySpec::Star { n }
            | TopologySpec::Connectivity { n, .. }
            | TopologySpec::Range { n, .. }
            | TopologySpec::EdgeList { n, .. } => n,
        }
    }

    pub fn is_time_varying(&self) -> bool {
        matches!(self, TopologySpec::Range { .. })
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        let min = match self {
            TopologySpec::Ring { .. } => 3,
            TopologySpec::Complete { .. } | TopologySpec::Path { .. } | TopologySpec::Star { .. } | TopologySpec::Connectivity { .. } => 2,
            TopologySpec::Range { .. } | TopologySpec::EdgeList { .. } => 1,
        };
        if n < min {
            return Err(Error::Config(format!("topology needs n >= {min}")));
        }
        match *self {
            TopologySpec::Connectivity { target, tol, .. } if !(target > 0.0 && tol > 0.0) => {
                Err(Error::Config("connectivity target and tol must be positive".into()))
            }
            TopologySpec::Range { radius, arena, step, .. } if !(radius > 0.0 && arena > 0.0 && step >= 0.0) => {
                Err(Error::Config("range topology needs radius > 0, arena > 0, step >= 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Quantity a target threshold applies to (mean across nodes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Reached when mean accuracy `>=` threshold.
    Accuracy,
    /// Reached when mean validation loss `<=` threshold.
    Loss,
    /// Reached when `|theta_bar - theta_star| <=` threshold.
    Suboptimality,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Loss => "loss",
            Metric::Suboptimality => "suboptimality",
        }
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        self == Metric::Accuracy
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "loss" => Ok(Metric::Loss),
            "suboptimality" => Ok(Metric::Suboptimality),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub metric: Metric,
    pub threshold: f64,
}

fn default_eval_interval() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Row label in comparisons; defaults to the algorithm name.
    #[serde(default)]
    pub label: Option<String>,
    pub algorithm: AlgorithmKind,
    pub problem: ProblemSpec,
    pub topology: TopologySpec,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    pub rounds: usize,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: usize,
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub execution: Execution,
    /// Thresholds reported in the run summary.
    #[serde(default)]
    pub targets: Vec<Target>,
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    /// Load from TOML (`.toml`) or JSON (anything else).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg = if path.extension().is_some_and(|e| e == "toml") { Self::from_toml(&text)? } else { Self::from_json(&text)? };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.topology.validate()?;
        self.hyperparams.validate(self.algorithm)?;
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be >= 1".into()));
        }
        let quadratic = self.problem.is_quadratic();
        if self.algorithm == AlgorithmKind::DaneExact && !quadratic {
            return Err(Error::Config("dane_exact needs a quadratic problem".into()));
        }
        if self.hyperparams.local_solver == LocalSolver::ExactQuadratic && !quadratic {
            return Err(Error::Config("exact_quadratic local solver needs a quadratic problem".into()));
        }
        if quadratic && self.targets.iter().any(|t| t.metric == Metric::Accuracy) {
            return Err(Error::Config("accuracy targets need a classification problem".into()));
        }
        if !quadratic && self.targets.iter().any(|t| t.metric == Metric::Suboptimality) {
            return Err(Error::Config("suboptimality targets need a quadratic problem".into()));
        }
        Ok(())
    }
}
