//! Per-node differentiable objectives behind a uniform oracle interface.
//!
//! Losses are sample means (optionally importance-weighted) plus an optional
//! `l2/2 * |theta|^2` regularizer, so the mean of minibatch gradients over a
//! disjoint equal-size cover of the data equals the full gradient.

mod dataset;
pub mod io;
mod models;
mod quadratic;
mod streaming;

use std::fmt::Debug;

pub use dataset::{holdout_split, make_synthetic_classification, partition_non_iid, partition_non_iid_indices, Dataset};
pub use models::{mlp_oracle, softmax_oracle, Activation, DatasetObjective, Mlp, Model, Softmax};
pub use quadratic::{
    make_quadratic_family, mean_hessian, quadratic_optimum, similarity_deviation, QuadraticFamily, QuadraticProblem, SimilarityReport,
};
pub use streaming::StreamingFeed;

/// Which samples a loss or gradient is taken over.
#[derive(Debug, Clone, Copy)]
pub enum Batch<'a> {
    Full,
    Indices(&'a [usize]),
}

/// A node's local loss `L_i(theta; D_i)`.
pub trait Objective: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// Number of addressable samples; deterministic objectives report 1.
    fn num_samples(&self) -> usize;

    fn loss(&self, theta: &[f64], batch: Batch<'_>) -> f64;

    fn grad(&self, theta: &[f64], batch: Batch<'_>) -> Vec<f64>;

    fn full_loss(&self, theta: &[f64]) -> f64 {
        self.loss(theta, Batch::Full)
    }

    fn full_grad(&self, theta: &[f64]) -> Vec<f64> {
        self.grad(theta, Batch::Full)
    }

    fn stochastic_grad(&self, theta: &[f64], minibatch: &[usize]) -> Vec<f64> {
        self.grad(theta, Batch::Indices(minibatch))
    }

    /// Top-1 accuracy over all samples, for classifiers.
    fn accuracy(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Seeded starting point shared by every node.
    fn initial_params(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn as_quadratic(&self) -> Option<&QuadraticProblem> {
        None
    }
}
