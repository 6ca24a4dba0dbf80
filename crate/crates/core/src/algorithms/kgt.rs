use std::sync::Arc;

use super::{check_dims, check_finite, node_rng, NodeState, RoundContext};
use crate::error::Result;
use crate::exec::map_mut;
use crate::objectives::{Batch, Objective};

/// Corrections start at zero, so their network sum is zero.
pub fn kgt_init(oracles: &[Arc<dyn Objective>], theta_ini: &[f64], seed: u64) -> Result<Vec<NodeState>> {
    check_dims(oracles, theta_ini)?;
    Ok((0..oracles.len())
        .map(|i| {
            let mut s = NodeState::new(theta_ini.to_vec(), node_rng(seed, i));
            s.correction = vec![0.0; theta_ini.len()];
            s
        })
        .collect())
}

/// One round of gradient tracking with local updates (correction variant).
///
/// Each node runs `T` corrected SGD steps `x <- x - lr (g_i(x) + c_i)`,
/// forms `delta_i = x_T - theta_i`, and then
/// `theta_i <- sum_j w_ij (theta_j + delta_j)`,
/// `c_i <- c_i + (delta_i - sum_j w_ij delta_j) / (T lr)`.
///
/// With zero objectives `delta_i = -T lr c_i`, so the correction update is
/// `c <- W c` and contracts.
pub fn kgt_round(states: &mut [NodeState], ctx: &RoundContext<'_>) -> Result<()> {
    ctx.check(states)?;
    let hp = ctx.hp;
    let steps = hp.local_steps;

    let deltas: Vec<Vec<f64>> = map_mut(ctx.exec, states, |i, s| {
        let oracle = ctx.oracles[i].as_ref();
        let mut x = s.theta.clone();
        for _ in 0..steps {
            let g = match s.sampler.next_batch(oracle.num_samples(), hp.batch_size) {
                Some(idx) => oracle.grad(&x, Batch::Indices(&idx)),
                None => oracle.full_grad(&x),
            };
            for k in 0..x.len() {
                x[k] -= hp.lr * (g[k] + s.correction[k]);
            }
        }
        s.grad_passes += steps as u64;
        x.iter().zip(&s.theta).map(|(a, b)| a - b).collect()
    });
    let moved: Vec<Vec<f64>> =
        states.iter().zip(&deltas).map(|(s, d)| hp.precision.transmit(&s.theta.iter().zip(d).map(|(t, dk)| t + dk).collect::<Vec<_>>())).collect();
    let delta_sent: Vec<Vec<f64>> = deltas.iter().map(|d| hp.precision.transmit(d)).collect();

    let scale = 1.0 / (steps as f64 * hp.lr);
    map_mut(ctx.exec, states, |i, s| {
        s.theta = ctx.mixing.mix_row(i, &moved);
        let mixed_delta = ctx.mixing.mix_row(i, &delta_sent);
        for k in 0..s.correction.len() {
            s.correction[k] += scale * (delta_sent[i][k] - mixed_delta[k]);
        }
    });
    check_finite(states, ctx.round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::testutil::{arcs, max_dev, mixing, zeros};
    use crate::algorithms::Hyperparams;
    use crate::inner_solvers::OptimizerKind;
    use crate::objectives::make_quadratic_family;
    use crate::topology::{build_complete, build_ring, build_star};

    #[test]
    fn zero_objective_mixes_parameters() {
        let g = build_star(5).unwrap();
        let w = mixing(&g);
        let oracles = zeros(5, 2);
        let mut states = kgt_init(&oracles, &[0.0; 2], 0).unwrap();
        for (i, s) in states.iter_mut().enumerate() {
            s.theta = vec![i as f64, 1.0];
        }
        let expected = w.mix(&states.iter().map(|s| s.theta.clone()).collect::<Vec<_>>());
        let hp = Hyperparams { optimizer: OptimizerKind::Sgd, ..Hyperparams::default() };
        kgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp)).unwrap();
        for (s, e) in states.iter().zip(&expected) {
            assert!(max_dev(&s.theta, e) < 1e-15);
            assert!(s.correction.iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn homogeneous_complete_graph_keeps_corrections_zero() {
        let fam = make_quadratic_family(4, 3, 10.0, 0.0, 1).unwrap();
        let oracles = arcs(&fam);
        let g = build_complete(4).unwrap();
        let w = mixing(&g);
        let hp = Hyperparams { lr: 0.02, local_steps: 4, ..Hyperparams::default() };
        let mut states = kgt_init(&oracles, &[1.0; 3], 0).unwrap();
        for k in 0..10 {
            kgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            assert!(states.iter().all(|s| s.correction.iter().all(|&c| c == 0.0)));
        }
    }

    #[test]
    fn corrections_sum_to_zero() {
        let fam = make_quadratic_family(8, 4, 20.0, 1.0, 3).unwrap();
        let oracles = arcs(&fam);
        let g = build_ring(8).unwrap();
        let w = mixing(&g);
        let hp = Hyperparams { lr: 0.01, local_steps: 3, ..Hyperparams::default() };
        let mut states = kgt_init(&oracles, &[0.0; 4], 0).unwrap();
        for k in 0..50 {
            kgt_round(&mut states, &RoundContext::new(&oracles, &g, &w, &hp).with_round(k)).unwrap();
            for j in 0..4 {
                let sum: f64 = states.iter().map(|s| s.correction[j]).sum();
                assert!(sum.abs() < 1e-10, "round {k}: {sum}");
            }
        }
    }
}
