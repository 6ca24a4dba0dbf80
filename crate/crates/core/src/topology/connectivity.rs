use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::rng::{stream, Purpose};

/// Greedy move budget for [`build_with_connectivity`].
pub const CONNECTIVITY_MOVE_BUDGET: usize = 10_000;

/// Combinatorial Laplacian `D - A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut l = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}

/// Second-smallest Laplacian eigenvalue (Fiedler value). Zero for graphs
/// with fewer than two nodes.
pub fn algebraic_connectivity(g: &Graph) -> f64 {
    if g.node_count() < 2 {
        return 0.0;
    }
    sym_eigenvalues(&laplacian(g))[1].max(0.0)
}

/// Random connected graph whose algebraic connectivity lies within `tol` of
/// `target`.
///
/// Starts from a random spanning tree and applies random single-edge
/// additions or removals, keeping a move whenever it does not increase
/// `|lambda_2 - target|`. Gives up after [`CONNECTIVITY_MOVE_BUDGET`] moves.
pub fn build_with_connectivity(n: usize, target: f64, tol: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    if !(target > 0.0 && tol > 0.0) {
        return Err(Error::invalid("target and tol must be positive"));
    }
    // lambda_2 of any graph on n nodes is at most n, attained by K_n
    if target - tol > n as f64 {
        return Err(Error::ConstructionFailure { target, closest: n as f64 });
    }
    let mut rng = stream(seed, Purpose::Topology, n as u64);
    let mut g = random_spanning_tree(n, &mut rng);
    let mut current = algebraic_connectivity(&g);
    for _ in 0..CONNECTIVITY_MOVE_BUDGET {
        if (current - target).abs() <= tol {
            return Ok(g);
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let removing = g.has_edge(i, j);
        if removing {
            g.remove_edge(i, j);
        } else {
            g.add_edge(i, j)?;
        }
        let candidate = algebraic_connectivity(&g);
        let connected = candidate > 1e-9;
        if connected && (candidate - target).abs() <= (current - target).abs() {
            current = candidate;
        } else if removing {
            g.add_edge(i, j)?;
        } else {
            g.remove_edge(i, j);
        }
    }
    if (current - target).abs() <= tol {
        Ok(g)
    } else {
        Err(Error::ConstructionFailure { target, closest: current })
    }
}

fn random_spanning_tree(n: usize, rng: &mut impl Rng) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = Graph::empty(n);
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        g.add_edge(order[k], parent).expect("tree edges are distinct");
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_complete, build_path, build_ring};
    use std::f64::consts::PI;

    #[test]
    fn known_fiedler_values() {
        assert!((algebraic_connectivity(&build_complete(4).unwrap()) - 4.0).abs() < 1e-9);
        assert!((algebraic_connectivity(&build_ring(4).unwrap()) - 2.0).abs() < 1e-9);
        assert!((algebraic_connectivity(&build_path(2).unwrap()) - 2.0).abs() < 1e-9);
        for n in 3..30 {
            let ring = 2.0 - 2.0 * (2.0 * PI / n as f64).cos();
            assert!((algebraic_connectivity(&build_ring(n).unwrap()) - ring).abs() < 1e-9);
            assert!((algebraic_connectivity(&build_complete(n).unwrap()) - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn disconnected_has_zero_connectivity() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(algebraic_connectivity(&g).abs() < 1e-9);
    }

    #[test]
    fn targets_twenty_nodes() {
        let g = build_with_connectivity(20, 1.0, 0.01, 3).unwrap();
        assert!(g.is_connected());
        assert!((algebraic_connectivity(&g) - 1.0).abs() <= 0.01);
    }

    #[test]
    fn complete_graph_target() {
        let g = build_with_connectivity(4, 4.0, 1e-9, 0).unwrap();
        assert_eq!(g, build_complete(4).unwrap());
    }

    #[test]
    fn unreachable_target_fails() {
        match build_with_connectivity(10, 100.0, 0.01, 0) {
            Err(Error::ConstructionFailure { closest, .. }) => assert!(closest <= 10.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_with_connectivity(15, 1.0, 0.01, 42).unwrap();
        let b = build_with_connectivity(15, 1.0, 0.01, 42).unwrap();
        assert_eq!(a, b);
    }
}
