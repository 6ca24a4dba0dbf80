use std::sync::Arc;

use super::{check_dims, check_finite, node_rng, Hyperparams, NodeState, RoundContext};
use crate::error::Result;
use crate::exec::map_mut;
use crate::objectives::{Batch, Objective};

fn batch_grad(oracle: &dyn Objective, s: &mut NodeState, batch_size: usize) -> Vec<f64> {
    s.grad_passes += 1;
    match s.sampler.next_batch(oracle.num_samples(), batch_size) {
        Some(idx) => oracle.grad(&s.theta, Batch::Indices(&idx)),
        None => oracle.full_grad(&s.theta),
    }
}

/// Trackers start at each node's (mini)batch gradient at `theta_ini`.
pub fn dsgt_init(oracles: &[Arc<dyn Objective>], theta_ini: &[f64], seed: u64, hp: &Hyperparams) -> Result<Vec<NodeState>> {
    check_dims(oracles, theta_ini)?;
    Ok(oracles
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut s = NodeState::new(theta_ini.to_vec(), node_rng(seed, i));
            s.y = batch_grad(o.as_ref(), &mut s, hp.batch_size);
            s.prev_grad = s.y.clone();
            s
        })
        .collect())
}

/// One round of stochastic gradient tracking:
/// `theta_i <- sum_j w_ij theta_j - lr * y_i`,
/// `y_i <- sum_j w_ij y_j + g_i(theta_i_new) - g_i(theta_i_old)`.
pub fn dsgt_round(states: &mut [NodeState], ctx: &RoundContext<'_>) -> Result<()> {
    ctx.check(states)?;
    let hp = ctx.hp;
    let theta_sent: Vec<Vec<f64>> = states.iter().map(|s| hp.precision.transmit(&s.theta)).collect();
    let y_sent: Vec<Vec<f64>> = states.iter().map(|s| hp.precision.transmit(&s.y)).collect();
    map_mut(ctx.exec, states, |i, s| {
        let mut theta = ctx.mixing.mix_row(i, &theta_sent);
        theta.iter_mut().zip(&s.y).for_each(|(t, y)| *t -= hp.lr * y);
        s.theta = theta;
        let g = batch_grad(ctx.next_oracles[i].as_ref(), s, hp.batch_size);
        let mut y = ctx.mixing.mix_row(i, &y_sent);
        for k in 0..y.len() {
            y[k] += g[k] - s.prev_grad[k];
        }
        s.y = y;
        s.prev_grad = g;
    });
    check_finite(states, ctx.round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::{arcs, max_dev, mixing, zeros};
    use crate::linalg::sym_eigenvalues;
    use crate::objectives::{make_quadratic_family, quadratic_optimum};
    use crate::topology::{build_ring, build_star, Graph, MixingMatrix};

    #[test]
    fn single_node_is_gradient_descent() {
        let fam = make_quadratic_family(1, 3, 10.0, 0.0, 4).unwrap();
        let oracles = arcs(&fam);
        let g = Graph::empty(1);
        let w = MixingMatrix::identity(1);
        let hp = Hyperparams { lr: 0.05, ..Hyperparams::default() };
        let mut states = dsgt_init(&oracles, &[1.0, -1.0, 0.5], 0, &hp).unwrap();
        let mut gd = vec![1.0, -1.0, 0.5];
        for k in 0..20 {
            dsgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            let grad = fam[0].gradient(&gd);
            for (x, gk) in gd.iter_mut().zip(&grad) {
                *x -= hp.lr * gk;
            }
            assert!(max_dev(&states[0].theta, &gd) < 1e-14);
        }
    }

    #[test]
    fn zero_objective_is_repeated_averaging() {
        let g = build_ring(6).unwrap();
        let w = mixing(&g);
        let oracles = zeros(6, 1);
        let hp = Hyperparams::default();
        let mut states = dsgt_init(&oracles, &[0.0], 0, &hp).unwrap();
        for (i, s) in states.iter_mut().enumerate() {
            s.theta = vec![i as f64];
        }
        let mut expected: Vec<Vec<f64>> = states.iter().map(|s| s.theta.clone()).collect();
        for k in 0..5 {
            dsgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            expected = w.mix(&expected);
            for (s, e) in states.iter().zip(&expected) {
                assert!(max_dev(&s.theta, e) < 1e-14);
            }
        }
    }

    #[test]
    fn converges_on_heterogeneous_quadratics() {
        // step 0.5 / L with L the largest local curvature; Metropolis weights
        // on a star have no negative eigenvalues, which this step needs
        let fam = make_quadratic_family(10, 5, 10.0, 0.5, 0).unwrap();
        let opt = quadratic_optimum(&fam).unwrap();
        let lmax = fam.iter().map(|q| *sym_eigenvalues(&q.h).last().unwrap()).fold(0.0, f64::max);
        let g = build_star(10).unwrap();
        let w = mixing(&g);
        let oracles = arcs(&fam);
        let hp = Hyperparams { lr: 0.5 / lmax, ..Hyperparams::default() };
        let mut states = dsgt_init(&oracles, &[0.0; 5], 0, &hp).unwrap();
        let mut reached = None;
        for k in 0..5000 {
            dsgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            if states.iter().all(|s| max_dev(&s.theta, &opt) < 1e-6) {
                reached = Some(k);
                break;
            }
        }
        assert!(reached.is_some());
    }
}
