//! One synchronized communication round per method.
//!
//! A round is two phases: every node computes locally against its own state
//! (run in parallel when requested), then, after a barrier, every node mixes
//! the phase-one outputs of its neighbors. Phase two only reads snapshots of
//! phase-one results, so parallel and sequential execution agree bit for bit.

mod bandwidth;
mod centralized;
mod cocol;
mod dane;
mod dinno;
mod dsgt;
mod kgt;
mod state;
#[cfg(test)]
mod testutil;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use bandwidth::{payload_values_per_edge, round_bandwidth, BandwidthLedger};
pub use centralized::{centralized_round, centralized_step};
pub use cocol::{cocol_init, cocol_round};
pub use dane::dane_exact_round_quadratic;
pub use dinno::{dinno_init, dinno_primal_exact_quadratic, dinno_round};
pub use dsgt::{dsgt_init, dsgt_round};
pub use kgt::{kgt_init, kgt_round};
pub use state::{node_rng, NodeState};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::inner_solvers::{AdamReset, OptimizerKind};
use crate::objectives::Objective;
use crate::topology::{Graph, MixingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Cocol,
    Dsgt,
    Kgt,
    Dinno,
    DaneExact,
    Centralized,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Cocol => "cocol",
            AlgorithmKind::Dsgt => "dsgt",
            AlgorithmKind::Kgt => "kgt",
            AlgorithmKind::Dinno => "dinno",
            AlgorithmKind::DaneExact => "dane_exact",
            AlgorithmKind::Centralized => "centralized",
        }
    }
}

impl std::fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Wire precision of transmitted vectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn bytes(self) -> u64 {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }

    /// What the receiver sees after the vector crosses the wire.
    pub fn transmit(self, v: &[f64]) -> Vec<f64> {
        match self {
            Precision::F64 => v.to_vec(),
            Precision::F32 => v.iter().map(|&x| x as f32 as f64).collect(),
        }
    }
}

/// How the CoCoL subproblem (and the DiNNO primal step) is solved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalSolver {
    /// `local_steps` optimizer steps on minibatch gradients.
    #[default]
    Inexact,
    /// Closed-form solve; quadratic objectives only.
    ExactQuadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Proximal regularizer of the local subproblem.
    pub mu: f64,
    /// Mirror step size multiplying the tracker.
    pub eta: f64,
    /// Learning rate of local steps (Adam/SGD), or the DSGT step size.
    pub lr: f64,
    pub local_steps: usize,
    /// Minibatch size; 0 means full batch.
    pub batch_size: usize,
    /// ADMM penalty.
    pub rho: f64,
    /// Per-round multiplicative growth of `rho`.
    pub rho_growth: f64,
    pub precision: Precision,
    pub optimizer: OptimizerKind,
    pub adam_reset: AdamReset,
    pub local_solver: LocalSolver,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            mu: 0.1,
            eta: 1.0,
            lr: 0.01,
            local_steps: 2,
            batch_size: 0,
            rho: 1.0,
            rho_growth: 1.0,
            precision: Precision::F64,
            optimizer: OptimizerKind::Adam,
            adam_reset: AdamReset::PerRound,
            local_solver: LocalSolver::Inexact,
        }
    }
}

impl Hyperparams {
    /// Defaults for classification-style tasks: `T = 2`, `mu = 0.1`.
    pub fn classification() -> Self {
        Hyperparams { local_steps: 2, mu: 0.1, ..Default::default() }
    }

    /// Defaults for the remaining tasks: `T = 5`, `mu = 0.001`.
    pub fn regression() -> Self {
        Hyperparams { local_steps: 5, mu: 0.001, ..Default::default() }
    }

    pub fn validate(&self, kind: AlgorithmKind) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.mu >= 0.0) {
            return bad("mu must be >= 0");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be > 0");
        }
        if self.local_steps == 0 {
            return bad("local_steps must be >= 1");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be > 0");
        }
        if kind == AlgorithmKind::Dinno && !(self.rho > 0.0 && self.rho_growth > 0.0) {
            return bad("rho and rho_growth must be > 0 for dinno");
        }
        Ok(())
    }

    /// ADMM penalty at round `k`.
    pub fn rho_at(&self, k: usize) -> f64 {
        self.rho * self.rho_growth.powi(k as i32)
    }
}

/// Everything a round needs besides the node states.
#[derive(Clone, Copy)]
pub struct RoundContext<'a> {
    /// Local objectives for this round's computation.
    pub oracles: &'a [Arc<dyn Objective>],
    /// Objectives after this round's data arrival; used for the tracking
    /// gradients at the new iterate. Equal to `oracles` for static data.
    pub next_oracles: &'a [Arc<dyn Objective>],
    pub graph: &'a Graph,
    pub mixing: &'a MixingMatrix,
    pub hp: &'a Hyperparams,
    pub round: usize,
    pub exec: Execution,
    /// Pooled objective for the centralized baseline.
    pub pooled: Option<&'a Arc<dyn Objective>>,
}

impl<'a> RoundContext<'a> {
    pub fn new(oracles: &'a [Arc<dyn Objective>], graph: &'a Graph, mixing: &'a MixingMatrix, hp: &'a Hyperparams) -> Self {
        RoundContext { oracles, next_oracles: oracles, graph, mixing, hp, round: 0, exec: Execution::Sequential, pooled: None }
    }

    pub fn with_round(mut self, round: usize) -> Self {
        self.round = round;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_next(mut self, next: &'a [Arc<dyn Objective>]) -> Self {
        self.next_oracles = next;
        self
    }

    pub fn with_pooled(mut self, pooled: &'a Arc<dyn Objective>) -> Self {
        self.pooled = Some(pooled);
        self
    }

    fn check(&self, states: &[NodeState]) -> Result<()> {
        let n = states.len();
        if self.oracles.len() != n || self.next_oracles.len() != n || self.mixing.size() != n || self.graph.node_count() != n {
            return Err(Error::invalid(format!(
                "round inputs disagree on node count: states {n}, oracles {}, mixing {}, graph {}",
                self.oracles.len(),
                self.mixing.size(),
                self.graph.node_count()
            )));
        }
        Ok(())
    }
}

/// Initialize node states for `kind` from a common starting point.
pub fn init_states(kind: AlgorithmKind, oracles: &[Arc<dyn Objective>], theta_ini: &[f64], seed: u64, hp: &Hyperparams) -> Result<Vec<NodeState>> {
    match kind {
        AlgorithmKind::Cocol | AlgorithmKind::DaneExact => cocol_init(oracles, theta_ini, seed),
        AlgorithmKind::Dsgt => dsgt_init(oracles, theta_ini, seed, hp),
        AlgorithmKind::Kgt => kgt_init(oracles, theta_ini, seed),
        AlgorithmKind::Dinno => dinno_init(oracles, theta_ini, seed),
        AlgorithmKind::Centralized => Ok(vec![NodeState::new(theta_ini.to_vec(), node_rng(seed, 0))]),
    }
}

/// Dispatch one round of `kind`.
pub fn run_round(kind: AlgorithmKind, states: &mut [NodeState], ctx: &RoundContext<'_>) -> Result<()> {
    match kind {
        AlgorithmKind::Cocol => cocol_round(states, ctx),
        AlgorithmKind::Dsgt => dsgt_round(states, ctx),
        AlgorithmKind::Kgt => kgt_round(states, ctx),
        AlgorithmKind::Dinno => dinno_round(states, ctx),
        AlgorithmKind::DaneExact => {
            let family = ctx
                .oracles
                .iter()
                .map(|o| o.as_quadratic().cloned().ok_or_else(|| Error::invalid("dane_exact needs quadratic objectives")))
                .collect::<Result<Vec<_>>>()?;
            dane_exact_round_quadratic(states, &family, ctx.hp.mu, ctx.hp.eta)?;
            check_finite(states, ctx.round)
        }
        AlgorithmKind::Centralized => {
            let pooled = ctx.pooled.ok_or_else(|| Error::invalid("centralized round needs a pooled objective"))?;
            let state = states.first_mut().ok_or_else(|| Error::invalid("centralized round needs one state"))?;
            centralized_round(pooled.as_ref(), state, ctx.hp, ctx.round)
        }
    }
}

pub(crate) fn check_finite(states: &[NodeState], round: usize) -> Result<()> {
    if states.iter().all(|s| crate::linalg::all_finite(&s.theta) && crate::linalg::all_finite(&s.y)) {
        Ok(())
    } else {
        Err(Error::Divergence { round })
    }
}

pub(crate) fn check_dims(oracles: &[Arc<dyn Objective>], theta_ini: &[f64]) -> Result<()> {
    if oracles.is_empty() {
        return Err(Error::invalid("no nodes"));
    }
    if let Some(o) = oracles.iter().find(|o| o.dim() != theta_ini.len()) {
        return Err(Error::invalid(format!("oracle dimension {} differs from theta_ini length {}", o.dim(), theta_ini.len())));
    }
    Ok(())
}
