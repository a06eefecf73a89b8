//! Random small relay problems solved both by the message-passing loop and
//! by exhaustive search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::{derive_seed, rate_floor_estimator, snapshot};
use crate::error::Result;
use crate::mpsolver::{relay_kappas, solve_relay, SolverConfig};
use crate::oracle::{compare_with_oracle, default_grid, OracleComparison};
use crate::params::SimParams;
use crate::ratemodel::{round_robin_allocations, unit_sinrs, RelayProblem};

const STREAM_SHAPE: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub seed: u64,
    pub n_rbs: usize,
    pub n_members: usize,
    pub comparison: OracleComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub converged: usize,
    /// Converged instances whose snapped objective equals the optimum.
    pub matched: usize,
    /// Instances where the snapped objective exceeds the optimum.
    pub dominance_violations: usize,
}

impl OracleSummary {
    pub fn match_fraction(&self) -> f64 {
        if self.converged == 0 { 0.0 } else { self.matched as f64 / self.converged as f64 }
    }
}

/// Relay 0 of a snapshot with 2..=4 RBs and 1..=3 members, under the
/// round-robin interference estimate. The member mix of CUEs and pairs is
/// drawn too.
pub fn small_instance(params: &SimParams, seed: u64) -> Result<RelayProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SHAPE));
    let n_rbs = rng.random_range(2..=4);
    let k = rng.random_range(1..=3usize);
    let pairs = rng.random_range(0..=k);
    let params = SimParams { n_rbs, ..params.clone() };
    let l = params.n_relays;
    let (scenario, chan) = snapshot(&params, l * (k - pairs), l * pairs, seed)?;
    let previous = round_robin_allocations(&scenario.association, &params);
    let sinr = unit_sinrs(&chan, &scenario, &previous);
    Ok(RelayProblem::build(0, &scenario, &chan, &sinr, &params))
}

pub fn oracle_case(params: &SimParams, seed: u64) -> Result<OracleCase> {
    let problem = small_instance(params, seed)?;
    let kappa = relay_kappas(&problem, &rate_floor_estimator(params, seed))?;
    let solution = solve_relay(&problem, &kappa, &SolverConfig::from_params(params), None);
    let comparison = compare_with_oracle(&problem, &solution, &default_grid(&problem))?;
    Ok(OracleCase { seed, n_rbs: problem.n_rbs(), n_members: problem.n_members(), comparison })
}

/// `count` instances seeded `base_seed..base_seed + count`.
pub fn oracle_check(params: &SimParams, count: usize, base_seed: u64) -> Result<(Vec<OracleCase>, OracleSummary)> {
    let cases = (0..count as u64)
        .into_par_iter()
        .map(|i| oracle_case(params, base_seed + i))
        .collect::<Result<Vec<_>>>()?;
    let converged: Vec<&OracleCase> = cases.iter().filter(|c| c.comparison.converged).collect();
    let summary = OracleSummary {
        instances: cases.len(),
        converged: converged.len(),
        matched: converged.iter().filter(|c| c.comparison.matches()).count(),
        dominance_violations: cases.iter().filter(|c| !c.comparison.dominated()).count(),
    };
    Ok((cases, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_fit_the_oracle() {
        let p = SimParams { rate_floor_draws: 500, ..SimParams::default() };
        for seed in 0..10 {
            let prob = small_instance(&p, seed).unwrap();
            assert!(prob.n_rbs() <= 4 && (1..=3).contains(&prob.n_members()));
        }
        let (cases, s) = oracle_check(&p, 6, 0).unwrap();
        assert_eq!(cases.len(), 6);
        assert_eq!(s.dominance_violations, 0);
    }
}
