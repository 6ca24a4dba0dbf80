use std::sync::Arc;

use nalgebra::DMatrix;

use super::{check_dims, check_finite, node_rng, LocalSolver, NodeState, RoundContext};
use crate::error::{Error, Result};
use crate::exec::map_mut;
use crate::inner_solvers::{AdamReset, LocalOptimizer};
use crate::linalg::spd_solve;
use crate::objectives::{Batch, Objective, QuadraticProblem};

/// Duals start at zero.
pub fn dinno_init(oracles: &[Arc<dyn Objective>], theta_ini: &[f64], seed: u64) -> Result<Vec<NodeState>> {
    check_dims(oracles, theta_ini)?;
    Ok((0..oracles.len())
        .map(|i| {
            let mut s = NodeState::new(theta_ini.to_vec(), node_rng(seed, i));
            s.dual = vec![0.0; theta_ini.len()];
            s
        })
        .collect())
}

/// Exact primal step on a quadratic:
/// `argmin f(x) + x'p + rho sum_j |x - (theta_i + theta_j)/2|^2`.
pub fn dinno_primal_exact_quadratic(q: &QuadraticProblem, dual: &[f64], theta_i: &[f64], neighbors: &[&[f64]], rho: f64) -> Result<Vec<f64>> {
    let d = theta_i.len();
    let deg = neighbors.len() as f64;
    let a = &q.h + DMatrix::identity(d, d) * (2.0 * rho * deg);
    let mut rhs: Vec<f64> = (0..d).map(|k| -q.b[k] - dual[k]).collect();
    for nb in neighbors {
        for k in 0..d {
            rhs[k] += rho * (theta_i[k] + nb[k]);
        }
    }
    spd_solve(&a, &rhs)
}

/// One round of edge-based consensus ADMM with approximate primal solves.
///
/// With `N_i` the neighbors of node `i` and `rho_k` the penalty this round:
/// `p_i <- p_i + rho_k sum_{j in N_i} (theta_i - theta_j)`, then
/// `theta_i <- argmin L_i(x) + x'p_i + rho_k sum_j |x - (theta_i + theta_j)/2|^2`
/// approximated by `T` optimizer steps from `theta_i`. Only `theta` is sent.
pub fn dinno_round(states: &mut [NodeState], ctx: &RoundContext<'_>) -> Result<()> {
    ctx.check(states)?;
    let hp = ctx.hp;
    let rho = hp.rho_at(ctx.round);
    let adjacency = ctx.graph.adjacency();
    let sent: Vec<Vec<f64>> = states.iter().map(|s| hp.precision.transmit(&s.theta)).collect();

    let results: Vec<Result<()>> = map_mut(ctx.exec, states, |i, s| {
        let d = s.dim();
        let nbrs: Vec<&[f64]> = adjacency[i].iter().map(|&j| sent[j].as_slice()).collect();
        for nb in &nbrs {
            for k in 0..d {
                s.dual[k] += rho * (s.theta[k] - nb[k]);
            }
        }
        // midpoints are formed from the node's own transmitted copy, as its
        // neighbors see it
        let own = &sent[i];
        let mids: Vec<Vec<f64>> = nbrs.iter().map(|nb| (0..d).map(|k| 0.5 * (own[k] + nb[k])).collect()).collect();
        let oracle = ctx.oracles[i].as_ref();
        match hp.local_solver {
            LocalSolver::ExactQuadratic => {
                let q = oracle.as_quadratic().ok_or_else(|| Error::invalid("exact primal solves need quadratic objectives"))?;
                s.theta = dinno_primal_exact_quadratic(q, &s.dual, own, &nbrs, rho)?;
            }
            LocalSolver::Inexact => {
                let mut fresh;
                let opt = match hp.adam_reset {
                    AdamReset::PerRound => {
                        fresh = LocalOptimizer::new(hp.optimizer, d, hp.lr);
                        &mut fresh
                    }
                    AdamReset::Persistent => s.optimizer.get_or_insert_with(|| LocalOptimizer::new(hp.optimizer, d, hp.lr)),
                };
                let mut x = s.theta.clone();
                for _ in 0..hp.local_steps {
                    let mut g = match s.sampler.next_batch(oracle.num_samples(), hp.batch_size) {
                        Some(idx) => oracle.grad(&x, Batch::Indices(&idx)),
                        None => oracle.full_grad(&x),
                    };
                    for k in 0..d {
                        g[k] += s.dual[k];
                        for m in &mids {
                            g[k] += 2.0 * rho * (x[k] - m[k]);
                        }
                    }
                    opt.step(&mut x, &g)?;
                }
                s.grad_passes += hp.local_steps as u64;
                s.theta = x;
            }
        }
        Ok(())
    });
    results.into_iter().collect::<Result<()>>()?;
    check_finite(states, ctx.round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::{arcs, max_dev, mixing};
    use crate::algorithms::Hyperparams;
    use crate::linalg::dist;
    use crate::objectives::{make_quadratic_family, quadratic_optimum};
    use crate::topology::build_ring;

    #[test]
    fn zero_objective_primal_is_mean_of_midpoints() {
        let q = QuadraticProblem::zero(2);
        let own = [1.0, 0.0];
        let a = [3.0, 2.0];
        let b = [-1.0, 4.0];
        let out = dinno_primal_exact_quadratic(&q, &[0.0; 2], &own, &[&a, &b], 0.7).unwrap();
        let expected = [0.5 * ((1.0 + 3.0) / 2.0 + (1.0 - 1.0) / 2.0), 0.5 * ((0.0 + 2.0) / 2.0 + (0.0 + 4.0) / 2.0)];
        assert!(max_dev(&out, &expected) < 1e-15);
    }

    #[test]
    fn exact_primal_converges_on_heterogeneous_quadratics() {
        let fam = make_quadratic_family(10, 5, 10.0, 0.5, 2).unwrap();
        let opt = quadratic_optimum(&fam).unwrap();
        let g = build_ring(10).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let hp = Hyperparams { rho: 1.0, local_solver: LocalSolver::ExactQuadratic, ..Hyperparams::default() };
        let mut states = dinno_init(&oracles, &[0.0; 5], 0).unwrap();
        for k in 0..3000 {
            dinno_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
        }
        let worst = states.iter().map(|s| dist(&s.theta, &opt)).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn duals_sum_to_zero() {
        let fam = make_quadratic_family(6, 3, 10.0, 1.0, 5).unwrap();
        let g = build_ring(6).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let hp = Hyperparams { rho: 0.5, lr: 0.05, local_steps: 3, ..Hyperparams::default() };
        let mut states = dinno_init(&oracles, &[0.0; 3], 0).unwrap();
        for k in 0..20 {
            dinno_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            for j in 0..3 {
                assert!(states.iter().map(|s| s.dual[j]).sum::<f64>().abs() < 1e-10);
            }
        }
        assert!(states.iter().all(|s| s.grad_passes == 60));
    }
}
