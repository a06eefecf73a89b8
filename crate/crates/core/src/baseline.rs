//! Relay-free reference scheme. CUEs are scheduled by the message-passing
//! solver; each D2D pair may then reuse the full RB set of at most one CUE
//! of its own relay and talk directly, provided both the CUE and the pair
//! still meet their rate requirements. Otherwise the pair stays silent.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::mpsolver::network::solve_network_for;
use crate::mpsolver::{MinRateEstimator, NetworkSolution};
use crate::params::SimParams;
use crate::powerctl::compute_caps;
use crate::ratemodel::{rb_rate_bps, shannon_rate_bps, AllocationState, RelayProblem, FEASIBILITY_RTOL};
use crate::scenario::{NetworkScenario, UeKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOutcome {
    /// CUE sharing with each pair, by global UE id.
    pub partner: Vec<Option<usize>>,
    /// Direct-link rate per pair, zero when silent.
    pub d2d_rates_bps: Vec<f64>,
    /// CUE rates after sharing, indexed like `scenario.cues`.
    pub cue_rates_bps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedRates {
    pub cue_rate_bps: f64,
    pub d2d_rate_bps: f64,
    /// Factor applied to the CUE's powers to hold its requirement.
    pub cue_power_scale: f64,
}

/// Rates of a CUE and a D2D pair if the pair reuses the CUE's RBs, with the
/// pair splitting `P_ue^max` evenly over those RBs.
///
/// The pair's receiver sees the CUE's uplink as interference; the CUE's
/// relay sees the pair's transmitter on its first hop. The CUE answers the
/// extra interference like its own power control would: it scales all its
/// powers by the smallest factor that restores its requirement, without
/// leaving its admissible bounds. If no factor suffices the CUE keeps its
/// powers and falls short.
pub fn shared_rates(
    scenario: &NetworkScenario,
    chan: &ChannelRealization,
    params: &SimParams,
    cue_problem: &RelayProblem,
    cue_alloc: &AllocationState,
    cue_row: usize,
    pair: usize,
) -> SharedRates {
    let cue = cue_alloc.members[cue_row];
    let relay = cue_alloc.relay;
    let tx = scenario.d2d_ue(pair);
    let rbs: Vec<usize> = (0..params.n_rbs).filter(|&n| cue_alloc.x[cue_row][n]).collect();
    if rbs.is_empty() {
        return SharedRates { cue_rate_bps: 0.0, d2d_rate_bps: 0.0, cue_power_scale: 1.0 };
    }
    let p_d2d = params.ue_power_max_w() / rbs.len() as f64;
    let sigma2 = chan.noise_power_w;
    let caps = compute_caps(&cue_alloc.x, cue_problem);
    let gamma1: Vec<f64> = rbs
        .iter()
        .map(|&n| {
            let g_tx_relay = if scenario.ue_relay(tx) == relay {
                chan.h_ue_relay[tx][n]
            } else {
                chan.g_ue_relay[tx][relay][n]
            };
            // unit SINR of the CUE with the pair's transmitter added to its interference
            let base = cue_problem.gamma1[cue_row][n];
            1.0 / (1.0 / base + p_d2d * g_tx_relay / chan.h_ue_relay[cue][n])
        })
        .collect();
    let cue_rate_at = |scale: f64| -> f64 {
        rbs.iter()
            .zip(&gamma1)
            .map(|(&n, &g)| rb_rate_bps(scale * cue_alloc.p_ue[cue_row][n], g, params.rb_bandwidth_hz))
            .sum()
    };
    let max_scale = rbs
        .iter()
        .map(|&n| {
            let p = cue_alloc.p_ue[cue_row][n];
            if p > 0.0 { caps.effective(cue_row, n) / p } else { 1.0 }
        })
        .fold(f64::INFINITY, f64::min)
        .max(1.0);
    let q = params.cue_rate_req_bps;
    let scale = if cue_rate_at(1.0) >= q || cue_rate_at(max_scale) < q {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0, max_scale);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if cue_rate_at(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let d2d_rate = rbs
        .iter()
        .map(|&n| {
            let p_cue = scale * cue_alloc.p_ue[cue_row][n];
            let gamma_dd = chan.h_d2d_direct[pair][n] / (p_cue * chan.g_cue_d2drx[cue][pair][n] + sigma2);
            shannon_rate_bps(p_d2d, gamma_dd, params.rb_bandwidth_hz)
        })
        .sum();
    SharedRates { cue_rate_bps: cue_rate_at(scale), d2d_rate_bps: d2d_rate, cue_power_scale: scale }
}

/// Greedy matching: pairs in index order, candidate CUEs of the same relay
/// in index order, each CUE shared at most once.
pub fn solve_reference(
    scenario: &NetworkScenario,
    chan: &ChannelRealization,
    params: &SimParams,
    cue_solution: &NetworkSolution,
) -> ReferenceOutcome {
    let n_pairs = scenario.d2d_pairs.len();
    let mut partner = vec![None; n_pairs];
    let mut d2d_rates = vec![0.0; n_pairs];
    let mut cue_rates = vec![0.0; scenario.cues.len()];
    let mut taken = vec![false; scenario.cues.len()];

    for sol in &cue_solution.solutions {
        for (row, &u) in sol.allocation.members.iter().enumerate() {
            cue_rates[u] = sol.allocation.rates_bps[row];
        }
    }
    let meets = |r: f64, q: f64| r >= q * (1.0 - FEASIBILITY_RTOL);

    for (d, pair) in scenario.d2d_pairs.iter().enumerate() {
        let alloc = &cue_solution.solutions[pair.relay].allocation;
        for (row, &cue) in alloc.members.iter().enumerate() {
            debug_assert_eq!(scenario.ue_kind(cue), UeKind::Cellular);
            if taken[cue] {
                continue;
            }
            let problem = &cue_solution.problems[pair.relay];
            let r = shared_rates(scenario, chan, params, problem, alloc, row, d);
            if meets(r.cue_rate_bps, params.cue_rate_req_bps)
                && meets(r.d2d_rate_bps, params.d2d_rate_req_bps)
                && r.d2d_rate_bps > 0.0
            {
                taken[cue] = true;
                partner[d] = Some(cue);
                d2d_rates[d] = r.d2d_rate_bps;
                cue_rates[cue] = r.cue_rate_bps;
                break;
            }
        }
    }
    ReferenceOutcome {
        partner,
        d2d_rates_bps: d2d_rates,
        cue_rates_bps: cue_rates,
    }
}

/// Schedules the CUEs alone, then matches pairs onto them.
pub fn run_reference(
    scenario: &NetworkScenario,
    chan: &ChannelRealization,
    params: &SimParams,
    estimator: &dyn MinRateEstimator,
) -> Result<(NetworkSolution, ReferenceOutcome)> {
    let cue_members: Vec<Vec<usize>> = scenario
        .association
        .iter()
        .map(|m| m.iter().copied().filter(|&u| scenario.ue_kind(u) == UeKind::Cellular).collect())
        .collect();
    let cue_solution = solve_network_for(scenario, chan, params, estimator, &cue_members)?;
    let outcome = solve_reference(scenario, chan, params, &cue_solution);
    Ok((cue_solution, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::mpsolver::FixedMinRate;
    use crate::scenario::generate_scenario;

    fn setup(n_cues: usize, n_pairs: usize, seed: u64) -> (SimParams, NetworkScenario, ChannelRealization) {
        let p = SimParams { n_relays: 1, ..SimParams::default() };
        let s = generate_scenario(&p, n_cues, n_pairs, seed).unwrap();
        let c = draw_channel(&s, &p, seed).unwrap();
        (p, s, c)
    }

    #[test]
    fn strong_direct_link_is_admitted() {
        let (p, s, mut c) = setup(1, 1, 3);
        for n in 0..p.n_rbs {
            c.h_d2d_direct[0][n] = 1.0;
            c.h_ue_relay[0][n] = 1e-6;
        }
        let (_, out) = run_reference(&s, &c, &p, &FixedMinRate(5e4)).unwrap();
        assert_eq!(out.partner, vec![Some(0)]);
        assert!(out.d2d_rates_bps[0] >= p.d2d_rate_req_bps);
        assert!(out.cue_rates_bps[0] >= p.cue_rate_req_bps * (1.0 - 1e-9));
    }

    #[test]
    fn dead_direct_link_refrains() {
        let (p, s, mut c) = setup(1, 1, 3);
        for n in 0..p.n_rbs {
            c.h_d2d_direct[0][n] = 0.0;
        }
        let (_, out) = run_reference(&s, &c, &p, &FixedMinRate(5e4)).unwrap();
        assert_eq!(out.partner, vec![None]);
        assert_eq!(out.d2d_rates_bps, vec![0.0]);
    }

    #[test]
    fn one_cue_serves_at_most_one_pair() {
        let (p, s, mut c) = setup(1, 2, 5);
        for d in 0..2 {
            for n in 0..p.n_rbs {
                c.h_d2d_direct[d][n] = 1.0;
            }
        }
        for n in 0..p.n_rbs {
            c.h_ue_relay[0][n] = 1e-6;
        }
        let (_, out) = run_reference(&s, &c, &p, &FixedMinRate(5e4)).unwrap();
        assert_eq!(out.partner.iter().filter(|m| m.is_some()).count(), 1);
        assert_eq!(out.partner[0], Some(0));
        assert_eq!(out.d2d_rates_bps[1], 0.0);
    }

    #[test]
    fn admitted_pairs_meet_both_requirements() {
        let p = SimParams::default();
        for seed in 0..5 {
            let s = generate_scenario(&SimParams { d_dd_m: 30.0, ..p.clone() }, 15, 9, seed).unwrap();
            let c = draw_channel(&s, &p, seed).unwrap();
            let est = crate::mpsolver::MonteCarloMinRate::new(2000, 1);
            let (sol, out) = run_reference(&s, &c, &p, &est).unwrap();
            let mut used = std::collections::HashSet::new();
            for (d, m) in out.partner.iter().enumerate() {
                if let Some(cue) = *m {
                    assert!(used.insert(cue));
                    assert!(out.d2d_rates_bps[d] >= p.d2d_rate_req_bps * (1.0 - 1e-9));
                    let relay = s.cues[cue].relay;
                    let alloc = &sol.solutions[relay].allocation;
                    let row = alloc.members.iter().position(|&u| u == cue).unwrap();
                    let r = shared_rates(&s, &c, &p, &sol.problems[relay], alloc, row, d);
                    assert_eq!(r.d2d_rate_bps, out.d2d_rates_bps[d]);
                    assert!(r.cue_rate_bps >= p.cue_rate_req_bps * (1.0 - 1e-9));
                    assert_eq!(r.cue_rate_bps, out.cue_rates_bps[cue]);
                } else {
                    assert_eq!(out.d2d_rates_bps[d], 0.0);
                }
            }
        }
    }
}
