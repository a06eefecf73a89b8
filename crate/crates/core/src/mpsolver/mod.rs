//! Max-sum message passing for per-relay RB and power allocation.

pub mod kappa;
pub mod messages;
pub mod network;
pub mod solver;

pub use kappa::{
    required_rb_count, FixedMinRate, MinRateEstimator, MonteCarloMinRate, QuadratureMinRate,
};
pub use messages::{decide_allocation, kth_largest, rb_to_ue_messages, ue_to_rb_messages, SortWork};
pub use network::{solve_network, NetworkSolution};
pub use solver::{relay_kappas, solve_relay, MessageState, OpCounters, RelaySolution, SolverConfig};
