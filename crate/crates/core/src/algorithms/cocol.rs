use std::sync::Arc;

use super::{check_dims, check_finite, node_rng, LocalSolver, NodeState, RoundContext};
use crate::error::{Error, Result};
use crate::exec::map_mut;
use crate::inner_solvers::{solve_subproblem_exact_quadratic, solve_subproblem_inexact, AdamReset, LocalOptimizer, SubproblemSpec};
use crate::objectives::Objective;

/// Every node starts at `theta_ini` with its tracker set to its own full
/// local gradient there.
pub fn cocol_init(oracles: &[Arc<dyn Objective>], theta_ini: &[f64], seed: u64) -> Result<Vec<NodeState>> {
    check_dims(oracles, theta_ini)?;
    Ok(oracles
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut s = NodeState::new(theta_ini.to_vec(), node_rng(seed, i));
            s.y = o.full_grad(theta_ini);
            s.prev_grad = s.y.clone();
            s.grad_passes = 1;
            s
        })
        .collect())
}

/// One CoCoL round.
///
/// Each node approximately minimizes its tracked mirror-descent surrogate
/// starting from its current iterate, then mixes the neighbors' solutions
/// and trackers:
/// `theta_i <- sum_j w_ij theta_hat_j`,
/// `y_i <- sum_j w_ij y_j + grad L_i(theta_i_new) - grad L_i(theta_i_old)`,
/// with full local gradients in the tracking update.
pub fn cocol_round(states: &mut [NodeState], ctx: &RoundContext<'_>) -> Result<()> {
    ctx.check(states)?;
    let hp = ctx.hp;

    // phase 1: local solves
    let local: Vec<Result<Vec<f64>>> = map_mut(ctx.exec, states, |i, s| {
        let spec = SubproblemSpec {
            anchor: s.theta.clone(),
            tracker: s.y.clone(),
            anchor_grad: s.prev_grad.clone(),
            mu: hp.mu,
            eta: hp.eta,
        };
        let oracle = ctx.oracles[i].as_ref();
        let theta_hat = match hp.local_solver {
            LocalSolver::Inexact => {
                let mut fresh;
                let opt = match hp.adam_reset {
                    AdamReset::PerRound => {
                        fresh = LocalOptimizer::new(hp.optimizer, s.dim(), hp.lr);
                        &mut fresh
                    }
                    AdamReset::Persistent => {
                        s.optimizer.get_or_insert_with(|| LocalOptimizer::new(hp.optimizer, spec.anchor.len(), hp.lr))
                    }
                };
                let (theta_hat, passes) = solve_subproblem_inexact(&spec, oracle, hp.local_steps, hp.batch_size, opt, &mut s.sampler)?;
                s.grad_passes += passes;
                theta_hat
            }
            LocalSolver::ExactQuadratic => {
                let q = oracle.as_quadratic().ok_or_else(|| Error::invalid("exact local solves need quadratic objectives"))?;
                solve_subproblem_exact_quadratic(q, &spec)?
            }
        };
        Ok(hp.precision.transmit(&theta_hat))
    });
    let theta_hat: Vec<Vec<f64>> = local.into_iter().collect::<Result<_>>()?;
    let y_sent: Vec<Vec<f64>> = states.iter().map(|s| hp.precision.transmit(&s.y)).collect();

    // phase 2: mixing and tracking
    map_mut(ctx.exec, states, |i, s| {
        s.theta = ctx.mixing.mix_row(i, &theta_hat);
        let new_grad = ctx.next_oracles[i].full_grad(&s.theta);
        let mut y = ctx.mixing.mix_row(i, &y_sent);
        for k in 0..y.len() {
            y[k] += new_grad[k] - s.prev_grad[k];
        }
        s.y = y;
        s.prev_grad = new_grad;
        s.grad_passes += 1;
    });
    check_finite(states, ctx.round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::{arcs, max_dev, mixing, zeros};
    use crate::algorithms::{dane_exact_round_quadratic, Hyperparams};
    use crate::linalg::mean_of;
    use crate::objectives::{make_quadratic_family, quadratic_optimum, QuadraticProblem};
    use crate::topology::{build_complete, build_ring};
    use nalgebra::DMatrix;

    fn exact_hp(mu: f64) -> Hyperparams {
        Hyperparams { mu, eta: 1.0, local_solver: LocalSolver::ExactQuadratic, ..Hyperparams::default() }
    }

    #[test]
    fn init_sets_tracker_to_local_gradient() {
        let fam = make_quadratic_family(4, 3, 10.0, 0.5, 1).unwrap();
        let states = cocol_init(&arcs(&fam), &[0.0; 3], 0).unwrap();
        for (s, q) in states.iter().zip(&fam) {
            assert_eq!(s.y, q.b);
            assert_eq!(s.theta, vec![0.0; 3]);
        }
        let ys: Vec<&[f64]> = states.iter().map(|s| s.y.as_slice()).collect();
        let bs: Vec<&[f64]> = fam.iter().map(|q| q.b.as_slice()).collect();
        assert_eq!(mean_of(&ys), mean_of(&bs));
    }

    #[test]
    fn init_rejects_dimension_mismatch() {
        let fam = make_quadratic_family(2, 3, 10.0, 0.0, 1).unwrap();
        assert!(cocol_init(&arcs(&fam), &[0.0; 2], 0).is_err());
    }

    #[test]
    fn zero_objective_is_pure_averaging() {
        let g = build_ring(5).unwrap();
        let w = mixing(&g);
        let oracles = zeros(5, 2);
        let mut states = cocol_init(&oracles, &[0.0; 2], 0).unwrap();
        for (i, s) in states.iter_mut().enumerate() {
            s.theta = vec![i as f64, -(i as f64)];
        }
        let before: Vec<Vec<f64>> = states.iter().map(|s| s.theta.clone()).collect();
        let hp = Hyperparams::default();
        cocol_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp)).unwrap();
        let expected = w.mix(&before);
        for (s, e) in states.iter().zip(&expected) {
            assert!(max_dev(&s.theta, e) < 1e-15);
            assert!(s.y.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn homogeneous_exact_round_is_a_newton_step() {
        let fam = make_quadratic_family(5, 6, 50.0, 0.0, 9).unwrap();
        let opt = quadratic_optimum(&fam).unwrap();
        let g = build_complete(5).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let mut states = cocol_init(&oracles, &[1.0; 6], 0).unwrap();
        let hp = exact_hp(0.0);
        cocol_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp)).unwrap();
        for s in &states {
            assert!(max_dev(&s.theta, &opt) < 1e-9);
        }
    }

    #[test]
    fn exact_trajectory_matches_dane_with_shared_hessian() {
        let n = 4;
        let d = 5;
        let base = make_quadratic_family(1, d, 20.0, 0.0, 3).unwrap().remove(0);
        let fam: Vec<QuadraticProblem> = (0..n)
            .map(|i| QuadraticProblem::new(base.h.clone(), base.b.iter().map(|b| b + i as f64 - 1.5).collect(), 0.0).unwrap())
            .collect();
        let g = build_complete(n).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let hp = exact_hp(0.5);
        let start = vec![0.3; d];
        let mut cocol = cocol_init(&oracles, &start, 0).unwrap();
        let mut dane = cocol_init(&oracles, &start, 0).unwrap();
        for k in 0..8 {
            cocol_round(&mut cocol, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            dane_exact_round_quadratic(&mut dane, &fam, hp.mu, hp.eta).unwrap();
            for (a, b) in cocol.iter().zip(&dane) {
                assert!(max_dev(&a.theta, &b.theta) < 1e-8, "round {k}");
            }
        }
    }

    #[test]
    fn tracker_average_follows_gradient_average() {
        let fam = make_quadratic_family(6, 4, 30.0, 0.3, 2).unwrap();
        let g = build_ring(6).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let mut states = cocol_init(&oracles, &[0.0; 4], 5).unwrap();
        let hp = Hyperparams { lr: 0.05, local_steps: 3, ..Hyperparams::default() };
        for k in 0..10 {
            cocol_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            let ys: Vec<&[f64]> = states.iter().map(|s| s.y.as_slice()).collect();
            let grads: Vec<Vec<f64>> = states.iter().zip(&fam).map(|(s, q)| q.gradient(&s.theta)).collect();
            let gs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            assert!(max_dev(&mean_of(&ys), &mean_of(&gs)) < 1e-10);
        }
    }

    #[test]
    fn pass_counter_adds_local_steps_plus_one() {
        let fam = make_quadratic_family(3, 2, 5.0, 0.1, 2).unwrap();
        let g = build_complete(3).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let mut states = cocol_init(&oracles, &[0.0; 2], 0).unwrap();
        let hp = Hyperparams { local_steps: 7, ..Hyperparams::default() };
        for k in 0..3 {
            cocol_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
        }
        assert!(states.iter().all(|s| s.grad_passes == 1 + 3 * 8));
    }

    #[test]
    fn divergence_is_reported_with_round() {
        let q = QuadraticProblem::new(DMatrix::from_element(1, 1, 1.0), vec![1e200], 0.0).unwrap();
        let oracles = arcs(&[q.clone(), q]);
        let g = build_complete(2).unwrap();
        let w = mixing(&g);
        let mut states = cocol_init(&oracles, &[0.0], 0).unwrap();
        let hp = Hyperparams { lr: 1e200, local_steps: 1, optimizer: crate::inner_solvers::OptimizerKind::Sgd, ..Hyperparams::default() };
        let err = cocol_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(4)).unwrap_err();
        assert!(matches!(err, Error::Divergence { round: 4 }), "{err:?}");
    }
}
