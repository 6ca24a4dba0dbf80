use std::sync::Arc;

use crate::objectives::{Objective, QuadraticProblem};
use crate::topology::{metropolis_weights, Graph, MixingMatrix};

pub fn arcs(family: &[QuadraticProblem]) -> Vec<Arc<dyn Objective>> {
    family.iter().map(|q| Arc::new(q.clone()) as Arc<dyn Objective>).collect()
}

pub fn zeros(n: usize, d: usize) -> Vec<Arc<dyn Objective>> {
    (0..n).map(|_| Arc::new(QuadraticProblem::zero(d)) as Arc<dyn Objective>).collect()
}

pub fn mixing(g: &Graph) -> MixingMatrix {
    metropolis_weights(g).unwrap()
}

pub fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
