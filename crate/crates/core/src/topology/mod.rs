//! Communication graphs, Metropolis mixing matrices and time-varying
//! range-based schedules.

mod connectivity;
mod graph;
pub mod io;
mod mixing;
mod schedule;

pub use connectivity::{algebraic_connectivity, build_with_connectivity, laplacian, CONNECTIVITY_MOVE_BUDGET};
pub use graph::{build_complete, build_path, build_ring, build_star, Graph};
pub use mixing::{metropolis_weights, spectral_gap, MixingMatrix};
pub use schedule::{random_walk_trajectories, range_graph, range_schedule, GraphSchedule, ScheduledGraph};
