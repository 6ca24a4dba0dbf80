use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// One round's topology. `repaired` lists edges that were not within range
/// but were added to keep the graph connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledGraph {
    pub round: usize,
    pub graph: Graph,
    pub repaired: Vec<(usize, usize)>,
}

impl ScheduledGraph {
    pub fn was_repaired(&self) -> bool {
        !self.repaired.is_empty()
    }
}

/// Time-varying topology covering rounds `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSchedule {
    n: usize,
    rounds: Vec<ScheduledGraph>,
}

impl GraphSchedule {
    pub fn new(rounds: Vec<ScheduledGraph>) -> Result<Self> {
        let n = rounds.first().map(|r| r.graph.node_count()).ok_or_else(|| Error::invalid("empty schedule"))?;
        for (k, r) in rounds.iter().enumerate() {
            if r.round != k {
                return Err(Error::invalid(format!("schedule entry {k} has round index {}", r.round)));
            }
            if r.graph.node_count() != n {
                return Err(Error::invalid(format!("round {k} has {} nodes, expected {n}", r.graph.node_count())));
            }
            if !r.graph.is_connected() {
                return Err(Error::invalid(format!("round {k} graph is disconnected")));
            }
        }
        Ok(GraphSchedule { n, rounds })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Graph for round `k`; rounds past the end reuse the last graph.
    pub fn at(&self, k: usize) -> &ScheduledGraph {
        &self.rounds[k.min(self.rounds.len() - 1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScheduledGraph> {
        self.rounds.iter()
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Disk graph over `positions`, joined into one component by repeatedly
/// adding the shortest edge between two different components.
pub fn range_graph(positions: &[[f64; 2]], radius: f64) -> Result<(Graph, Vec<(usize, usize)>)> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::invalid("no positions"));
    }
    let r2 = radius * radius;
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if sq_dist(positions[i], positions[j]) <= r2 {
                g.add_edge(i, j)?;
            }
        }
    }
    let mut repaired = Vec::new();
    loop {
        let comp = g.components();
        if comp.iter().all(|&c| c == 0) {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if comp[i] != comp[j] {
                    let d = sq_dist(positions[i], positions[j]);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best.expect("two components imply a cross pair");
        g.add_edge(i, j)?;
        repaired.push((i, j));
    }
    Ok((g, repaired))
}

/// Range-based schedule: `positions[k][i]` is node `i`'s location at round `k`.
pub fn range_schedule(n: usize, rounds: usize, positions: &[Vec<[f64; 2]>], radius: f64) -> Result<GraphSchedule> {
    if positions.len() < rounds {
        return Err(Error::invalid(format!("positions cover {} rounds, need {rounds}", positions.len())));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid("radius must be nonnegative"));
    }
    let mut out = Vec::with_capacity(rounds);
    for (k, pos) in positions.iter().take(rounds.max(1)).enumerate() {
        if pos.len() != n {
            return Err(Error::invalid(format!("round {k} has {} positions, expected {n}", pos.len())));
        }
        let (graph, repaired) = range_graph(pos, radius)?;
        out.push(ScheduledGraph { round: k, graph, repaired });
    }
    GraphSchedule::new(out)
}

/// Correlated random walks in the square `[0, arena]^2` with reflecting walls.
pub fn random_walk_trajectories(n: usize, rounds: usize, arena: f64, step: f64, seed: u64) -> Vec<Vec<[f64; 2]>> {
    let mut rng = stream(seed, Purpose::Trajectory, 0);
    let mut pos: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>() * arena, rng.random::<f64>() * arena]).collect();
    let mut heading: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        out.push(pos.clone());
        for i in 0..n {
            heading[i] += (rng.random::<f64>() - 0.5) * 0.8;
            for (axis, delta) in [heading[i].cos(), heading[i].sin()].into_iter().enumerate() {
                let mut x = pos[i][axis] + step * delta;
                if x < 0.0 {
                    x = -x;
                    heading[i] = if axis == 0 { std::f64::consts::PI - heading[i] } else { -heading[i] };
                } else if x > arena {
                    x = 2.0 * arena - x;
                    heading[i] = if axis == 0 { std::f64::consts::PI - heading[i] } else { -heading[i] };
                }
                pos[i][axis] = x.clamp(0.0, arena);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn close_pair_connected() {
        let (g, rep) = range_graph(&[[0.0, 0.0], [0.5, 0.0]], 1.0).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(rep.is_empty());
    }

    #[test]
    fn collinear_path() {
        let (g, rep) = range_graph(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 1.0).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert!(rep.is_empty());
    }

    #[test]
    fn far_pair_repaired() {
        let s = range_schedule(2, 1, &[vec![[0.0, 0.0], [5.0, 0.0]]], 1.0).unwrap();
        assert!(s.at(0).graph.has_edge(0, 1));
        assert!(s.at(0).was_repaired());
        assert_eq!(s.at(0).repaired, vec![(0, 1)]);
    }

    #[test]
    fn repair_joins_nearest_components() {
        // two clusters; nearest cross pair is (1, 2)
        let pos = [[0.0, 0.0], [0.5, 0.0], [3.0, 0.0], [3.5, 0.0]];
        let (g, rep) = range_graph(&pos, 1.0).unwrap();
        assert_eq!(rep, vec![(1, 2)]);
        assert!(g.is_connected());
    }

    #[test]
    fn schedule_from_walks_is_connected() {
        let traj = random_walk_trajectories(7, 30, 10.0, 0.5, 1);
        let s = range_schedule(7, 30, &traj, 3.0).unwrap();
        assert_eq!(s.len(), 30);
        assert!(s.iter().all(|r| r.graph.is_connected()));
        assert!(traj.iter().flatten().all(|p| (0.0..=10.0).contains(&p[0]) && (0.0..=10.0).contains(&p[1])));
    }
}
