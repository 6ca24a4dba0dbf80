//! Local optimization: Adam and SGD steppers, the mirror-descent subproblem
//! with gradient tracking, and its inexact (T stochastic steps) and exact
//! (quadratic) solvers.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, spd_solve};
use crate::objectives::{Batch, Objective, QuadraticProblem};
use crate::rng::StreamRng;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize, lr: f64) -> Self {
        AdamState { m: vec![0.0; dim], v: vec![0.0; dim], t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }
}

/// One Adam update of `theta` in place.
pub fn adam_step(state: &mut AdamState, theta: &mut [f64], g: &[f64]) -> Result<()> {
    if theta.len() != g.len() || g.len() != state.m.len() {
        return Err(Error::invalid("adam: dimension mismatch"));
    }
    if !all_finite(g) {
        return Err(Error::NonFiniteInput("gradient".into()));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for k in 0..g.len() {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g[k] * g[k];
        let m_hat = state.m[k] / bc1;
        let v_hat = state.v[k] / bc2;
        theta[k] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Adam moment lifetime across communication rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdamReset {
    #[default]
    PerRound,
    Persistent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalOptimizer {
    Adam(AdamState),
    Sgd { lr: f64 },
}

impl LocalOptimizer {
    pub fn new(kind: OptimizerKind, dim: usize, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => LocalOptimizer::Adam(AdamState::new(dim, lr)),
            OptimizerKind::Sgd => LocalOptimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<()> {
        match self {
            LocalOptimizer::Adam(s) => adam_step(s, theta, g),
            LocalOptimizer::Sgd { lr } => {
                if !all_finite(g) {
                    return Err(Error::NonFiniteInput("gradient".into()));
                }
                theta.iter_mut().zip(g).for_each(|(t, gi)| *t -= *lr * gi);
                Ok(())
            }
        }
    }

    pub fn reset(&mut self) {
        if let LocalOptimizer::Adam(s) = self {
            s.reset();
        }
    }
}

/// Uniform minibatches without replacement; reshuffles at each epoch and
/// whenever the dataset size changes.
#[derive(Debug, Clone)]
pub struct MinibatchSampler {
    rng: StreamRng,
    perm: Vec<usize>,
    pos: usize,
}

impl MinibatchSampler {
    pub fn new(rng: StreamRng) -> Self {
        MinibatchSampler { rng, perm: Vec::new(), pos: 0 }
    }

    /// `None` means the full dataset (batch size 0 or at least `n`).
    pub fn next_batch(&mut self, n: usize, batch_size: usize) -> Option<Vec<usize>> {
        if batch_size == 0 || batch_size >= n {
            return None;
        }
        if self.perm.len() != n || self.pos + batch_size > n {
            if self.perm.len() != n {
                self.perm = (0..n).collect();
            }
            self.perm.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let batch = self.perm[self.pos..self.pos + batch_size].to_vec();
        self.pos += batch_size;
        Some(batch)
    }
}

/// Data for node `i`'s round-`k` surrogate
/// `g(theta) = L(theta) + <theta, eta*y - grad L(anchor)> + mu/2 |theta - anchor|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSpec {
    pub anchor: Vec<f64>,
    pub tracker: Vec<f64>,
    pub anchor_grad: Vec<f64>,
    pub mu: f64,
    pub eta: f64,
}

impl SubproblemSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.anchor.len();
        if self.tracker.len() != d || self.anchor_grad.len() != d {
            return Err(Error::invalid("subproblem vectors differ in dimension"));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::invalid("mu must be nonnegative"));
        }
        Ok(())
    }
}

/// `batch_grad + eta*y - grad L(anchor) + mu (theta - anchor)`.
///
/// The gradient difference is formed first so that at the anchor with a
/// full batch the result is `eta*y` bit for bit.
pub fn subproblem_grad(spec: &SubproblemSpec, theta: &[f64], batch_grad: &[f64]) -> Vec<f64> {
    (0..theta.len())
        .map(|k| (batch_grad[k] - spec.anchor_grad[k]) + spec.eta * spec.tracker[k] + spec.mu * (theta[k] - spec.anchor[k]))
        .collect()
}

/// Surrogate value over the full local dataset.
pub fn subproblem_value(spec: &SubproblemSpec, oracle: &dyn Objective, theta: &[f64]) -> f64 {
    let lin: f64 = (0..theta.len()).map(|k| theta[k] * (spec.eta * spec.tracker[k] - spec.anchor_grad[k])).sum();
    let prox: f64 = theta.iter().zip(&spec.anchor).map(|(t, a)| (t - a) * (t - a)).sum();
    oracle.full_loss(theta) + lin + 0.5 * spec.mu * prox
}

/// Start at the anchor and take exactly `steps` optimizer steps on
/// minibatch surrogate gradients. Returns the iterate and the number of
/// gradient passes spent.
pub fn solve_subproblem_inexact(
    spec: &SubproblemSpec,
    oracle: &dyn Objective,
    steps: usize,
    batch_size: usize,
    optimizer: &mut LocalOptimizer,
    sampler: &mut MinibatchSampler,
) -> Result<(Vec<f64>, u64)> {
    spec.validate()?;
    if steps == 0 {
        return Err(Error::invalid("need at least one local step"));
    }
    let mut theta = spec.anchor.clone();
    for _ in 0..steps {
        let batch = sampler.next_batch(oracle.num_samples(), batch_size);
        let g = match &batch {
            Some(idx) => oracle.grad(&theta, Batch::Indices(idx)),
            None => oracle.full_grad(&theta),
        };
        let sg = subproblem_grad(spec, &theta, &g);
        optimizer.step(&mut theta, &sg)?;
    }
    Ok((theta, steps as u64))
}

/// Exact minimizer on a quadratic: `anchor - eta (H + mu I)^{-1} y`.
pub fn solve_subproblem_exact_quadratic(q: &QuadraticProblem, spec: &SubproblemSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let d = spec.anchor.len();
    let shifted = &q.h + nalgebra::DMatrix::identity(d, d) * spec.mu;
    let step = spd_solve(&shifted, &spec.tracker)?;
    Ok(spec.anchor.iter().zip(&step).map(|(a, s)| a - spec.eta * s).collect())
}
