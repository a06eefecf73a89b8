//! All relays of a snapshot, each solving its own problem against the
//! interference estimate left by the others' previous allocation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kappa::MinRateEstimator;
use super::solver::{relay_kappas, solve_relay, RelaySolution, SolverConfig};
use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::params::SimParams;
use crate::ratemodel::{round_robin_allocations, unit_sinrs, RelayProblem, UnitSinrTable};
use crate::scenario::NetworkScenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSolution {
    pub sinr: UnitSinrTable,
    pub problems: Vec<RelayProblem>,
    pub solutions: Vec<RelaySolution>,
}

impl NetworkSolution {
    /// Achieved rate of every UE, indexed by global id; UEs not scheduled by
    /// any relay get zero.
    pub fn ue_rates(&self, n_ues: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_ues];
        for sol in &self.solutions {
            for (i, &u) in sol.allocation.members.iter().enumerate() {
                out[u] = sol.allocation.rates_bps[i];
            }
        }
        out
    }
}

/// Solves every relay over its full member set.
pub fn solve_network(
    scenario: &NetworkScenario,
    chan: &ChannelRealization,
    params: &SimParams,
    estimator: &dyn MinRateEstimator,
) -> Result<NetworkSolution> {
    solve_network_for(scenario, chan, params, estimator, &scenario.association)
}

/// Solves every relay over `members[l]` only. Relays run independently and
/// in parallel; results come back in relay order.
pub fn solve_network_for(
    scenario: &NetworkScenario,
    chan: &ChannelRealization,
    params: &SimParams,
    estimator: &dyn MinRateEstimator,
    members: &[Vec<usize>],
) -> Result<NetworkSolution> {
    let previous = round_robin_allocations(members, params);
    let sinr = unit_sinrs(chan, scenario, &previous);
    let config = SolverConfig::from_params(params);
    let problems: Vec<RelayProblem> = members
        .iter()
        .enumerate()
        .map(|(l, m)| RelayProblem::build_for(l, m.clone(), scenario, chan, &sinr, params))
        .collect();
    let solutions = problems
        .par_iter()
        .map(|prob| {
            let kappa = relay_kappas(prob, estimator)?;
            Ok(solve_relay(prob, &kappa, &config, None))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkSolution { sinr, problems, solutions })
}
