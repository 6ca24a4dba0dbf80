//! Communication-efficient decentralized collaborative learning.
//!
//! The crate simulates a network of nodes, each holding a private objective,
//! that cooperate to minimize the average of their losses. It provides:
//!
//! - [`topology`]: communication graphs and Metropolis mixing matrices,
//! - [`objectives`]: quadratic families, synthetic non-IID classification
//!   (softmax regression and a one-hidden-layer MLP) and streaming feeds,
//! - [`inner_solvers`]: Adam/SGD steppers and the mirror-descent subproblem,
//! - [`algorithms`]: one synchronized round of CoCoL, DSGT, K-GT, a
//!   DiNNO-style consensus ADMM, exact DANE on quadratics and a centralized
//!   baseline, plus bandwidth accounting,
//! - [`harness`]: configuration, seeded runs, traces and comparisons.
//!
//! Node-local work inside a round runs on rayon when the `parallel` feature
//! is enabled (the default) and the run asks for [`Execution::Parallel`];
//! both execution modes produce bit-identical results.

pub mod algorithms;
pub mod error;
pub mod exec;
pub mod harness;
pub mod inner_solvers;
pub mod linalg;
pub mod objectives;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use exec::Execution;
