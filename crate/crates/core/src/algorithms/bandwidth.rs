use super::{AlgorithmKind, Precision};
use crate::topology::Graph;

/// Vectors of length `d` each node sends to each neighbor per round.
///
/// CoCoL sends `(theta_hat, y)`, DSGT `(theta, y)`, K-GT
/// `(theta + delta, delta)`; the ADMM baseline sends `theta` only.
/// The exact-DANE oracle and the centralized baseline do not communicate.
pub fn payload_values_per_edge(kind: AlgorithmKind) -> u64 {
    match kind {
        AlgorithmKind::Cocol | AlgorithmKind::Dsgt | AlgorithmKind::Kgt => 2,
        AlgorithmKind::Dinno => 1,
        AlgorithmKind::DaneExact | AlgorithmKind::Centralized => 0,
    }
}

/// Bytes moved in one round, counting both directions of every edge.
pub fn round_bandwidth(kind: AlgorithmKind, d: usize, graph: &Graph, precision: Precision) -> u64 {
    graph.directed_edge_count() as u64 * payload_values_per_edge(kind) * d as u64 * precision.bytes()
}

/// Cumulative bytes sent, per node and in total.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BandwidthLedger {
    per_node: Vec<u64>,
    total: u64,
}

impl BandwidthLedger {
    pub fn new(n: usize) -> Self {
        BandwidthLedger { per_node: vec![0; n], total: 0 }
    }

    /// Charge one round: node `i` sends its payload to each of its neighbors.
    pub fn charge_round(&mut self, kind: AlgorithmKind, d: usize, graph: &Graph, precision: Precision) -> u64 {
        let per_msg = payload_values_per_edge(kind) * d as u64 * precision.bytes();
        let mut round = 0;
        for (i, deg) in graph.degrees().into_iter().enumerate() {
            let bytes = deg as u64 * per_msg;
            if let Some(slot) = self.per_node.get_mut(i) {
                *slot += bytes;
            }
            round += bytes;
        }
        self.total += round;
        round
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn per_node(&self) -> &[u64] {
        &self.per_node
    }
}
