use crate::inner_solvers::{LocalOptimizer, MinibatchSampler};
use crate::rng::{stream, Purpose, StreamRng};

/// Per-node algorithm state. Fields an algorithm does not use stay empty.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub theta: Vec<f64>,
    /// Gradient tracker.
    pub y: Vec<f64>,
    /// Cached local gradient at the current `theta` (full batch for CoCoL,
    /// the last (mini)batch gradient for DSGT).
    pub prev_grad: Vec<f64>,
    /// ADMM dual variable.
    pub dual: Vec<f64>,
    /// K-GT correction term.
    pub correction: Vec<f64>,
    /// Optimizer carried across rounds (persistent Adam, centralized).
    pub optimizer: Option<LocalOptimizer>,
    pub sampler: MinibatchSampler,
    /// Forward/backward passes spent on training (full or minibatch).
    pub grad_passes: u64,
}

impl NodeState {
    pub fn new(theta: Vec<f64>, rng: StreamRng) -> Self {
        NodeState {
            theta,
            y: Vec::new(),
            prev_grad: Vec::new(),
            dual: Vec::new(),
            correction: Vec::new(),
            optimizer: None,
            sampler: MinibatchSampler::new(rng),
            grad_passes: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Node `i`'s private minibatch stream.
pub fn node_rng(seed: u64, node: usize) -> StreamRng {
    stream(seed, Purpose::Minibatch, node as u64)
}
