use super::{check_finite, Hyperparams, NodeState};
use crate::error::Result;
use crate::inner_solvers::{LocalOptimizer, OptimizerKind};
use crate::objectives::{Batch, Objective};

/// One Adam minibatch step on the pooled objective. The optimizer state
/// lives in `state` and persists across calls.
pub fn centralized_step(pooled: &dyn Objective, state: &mut NodeState, hp: &Hyperparams) -> Result<()> {
    let d = state.dim();
    let opt = state.optimizer.get_or_insert_with(|| LocalOptimizer::new(OptimizerKind::Adam, d, hp.lr));
    let g = match state.sampler.next_batch(pooled.num_samples(), hp.batch_size) {
        Some(idx) => pooled.grad(&state.theta, Batch::Indices(&idx)),
        None => pooled.full_grad(&state.theta),
    };
    opt.step(&mut state.theta, &g)?;
    state.grad_passes += 1;
    Ok(())
}

/// `local_steps` centralized steps, the computation a node spends per round.
pub fn centralized_round(pooled: &dyn Objective, state: &mut NodeState, hp: &Hyperparams, round: usize) -> Result<()> {
    for _ in 0..hp.local_steps {
        centralized_step(pooled, state, hp)?;
    }
    check_finite(std::slice::from_ref(state), round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::node_rng;
    use crate::objectives::{make_synthetic_classification, partition_non_iid, softmax_oracle, DatasetObjective, QuadraticProblem, Softmax};
    use std::sync::Arc;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let q = QuadraticProblem::zero(3);
        let mut s = NodeState::new(vec![1.0, 2.0, 3.0], node_rng(0, 0));
        centralized_round(&q, &mut s, &Hyperparams::default(), 0).unwrap();
        assert_eq!(s.theta, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.grad_passes, 2);
    }

    fn pooled() -> DatasetObjective<Softmax> {
        let ds = make_synthetic_classification(4, 3, 20, 2.0, 1).unwrap();
        let shards: Vec<Arc<_>> = partition_non_iid(&ds, 4, 1, 2).unwrap().into_iter().map(Arc::new).collect();
        DatasetObjective::pooled(&shards, Softmax { d_in: 3, classes: 4 }, 0.0).unwrap()
    }

    #[test]
    fn pooled_loss_is_mean_of_shard_losses() {
        let ds = make_synthetic_classification(4, 3, 20, 2.0, 1).unwrap();
        let shards = partition_non_iid(&ds, 4, 1, 2).unwrap();
        let pooled = pooled();
        let theta: Vec<f64> = (0..pooled.dim()).map(|k| (k as f64 * 0.37).sin()).collect();
        let mean: f64 = shards.iter().map(|d| softmax_oracle(Arc::new(d.clone()), 0.0).unwrap().full_loss(&theta)).sum::<f64>() / 4.0;
        assert!((pooled.full_loss(&theta) - mean).abs() < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let pooled = pooled();
        let hp = Hyperparams { batch_size: 8, lr: 0.05, ..Hyperparams::default() };
        let run = || {
            let mut s = NodeState::new(vec![0.0; pooled.dim()], node_rng(11, 0));
            for k in 0..5 {
                centralized_round(&pooled, &mut s, &hp, k).unwrap();
            }
            s.theta
        };
        assert_eq!(run(), run());
    }
}
