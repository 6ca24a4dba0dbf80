use nalgebra::DMatrix;

use super::NodeState;
use crate::error::{Error, Result};
use crate::linalg::{mean_of, spd_solve};
use crate::objectives::QuadraticProblem;

/// Exact DANE step with centralized information, used as a test oracle:
/// every node is set to `theta_bar - eta (H_i + mu I)^{-1} grad f(theta_bar)`
/// with `theta_bar` the exact node average and `f` the average objective.
pub fn dane_exact_round_quadratic(states: &mut [NodeState], family: &[QuadraticProblem], mu: f64, eta: f64) -> Result<()> {
    if states.len() != family.len() || states.is_empty() {
        return Err(Error::invalid("one quadratic per node required"));
    }
    let thetas: Vec<&[f64]> = states.iter().map(|s| s.theta.as_slice()).collect();
    let theta_bar = mean_of(&thetas);
    let grads: Vec<Vec<f64>> = family.iter().map(|q| q.gradient(&theta_bar)).collect();
    let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
    let global_grad = mean_of(&grad_refs);
    let d = theta_bar.len();
    for (s, q) in states.iter_mut().zip(family) {
        let step = spd_solve(&(&q.h + DMatrix::identity(d, d) * mu), &global_grad)?;
        s.theta = theta_bar.iter().zip(&step).map(|(t, st)| t - eta * st).collect();
    }
    Ok(())
}
