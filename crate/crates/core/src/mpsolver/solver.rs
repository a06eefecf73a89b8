//! Per-relay allocation loop: rates from current powers, UE-to-RB messages,
//! RB-to-UE messages, marginals, RB decision, power update, aggregate rate.

use serde::{Deserialize, Serialize};

use super::kappa::{required_rb_count, MinRateEstimator};
use super::messages::{decide_allocation, rb_to_ue_messages, ue_to_rb_messages, SortWork};
use crate::error::Result;
use crate::params::SimParams;
use crate::powerctl::{compute_caps, power_update, PowerStep};
use crate::ratemodel::{AllocationState, RelayProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub omega: f64,
    pub epsilon: f64,
    pub t_max: usize,
}

impl SolverConfig {
    pub fn from_params(params: &SimParams) -> Self {
        Self {
            omega: params.omega,
            epsilon: params.epsilon,
            t_max: params.t_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageState {
    pub psi: Vec<Vec<f64>>,
    pub psi_tilde: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    /// Iterations run.
    pub iteration: usize,
    pub converged: bool,
    /// Aggregate relay rate after each iteration, bps.
    pub rate_trace: Vec<f64>,
}

impl MessageState {
    fn zeros(k: usize, n: usize) -> Self {
        Self {
            psi: vec![vec![0.0; n]; k],
            psi_tilde: vec![vec![0.0; n]; k],
            tau: vec![vec![0.0; n]; k],
            iteration: 0,
            converged: false,
            rate_trace: Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.psi, &self.psi_tilde, &self.tau]
            .iter()
            .all(|m| m.iter().flatten().all(|v| v.is_finite()))
    }
}

/// Work counters, one entry per iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCounters {
    /// Scalar messages (UE-to-RB plus RB-to-UE) updated per iteration.
    pub message_updates: Vec<usize>,
    /// Sorts run by each member, per iteration.
    pub sorts_per_member: Vec<Vec<usize>>,
    /// Longest vector sorted over the whole run.
    pub max_sort_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaySolution {
    pub allocation: AllocationState,
    pub messages: MessageState,
    pub kappa: Vec<usize>,
    /// Sum of required RB counts exceeds the RBs available.
    pub oversubscribed: bool,
    pub counters: OpCounters,
}

impl RelaySolution {
    pub fn objective(&self) -> f64 {
        self.allocation.total_rate_bps()
    }
}

/// Required RB count of every member, estimated at `P_ue^max / N` and the
/// member's mean unit SINR over RBs.
pub fn relay_kappas(problem: &RelayProblem, estimator: &dyn MinRateEstimator) -> Result<Vec<usize>> {
    let n_rbs = problem.n_rbs();
    let p = problem.limits.ue_power_max_w / n_rbs as f64;
    (0..problem.n_members())
        .map(|i| {
            let mean = problem.gamma1[i].iter().sum::<f64>() / n_rbs as f64;
            let r_min = estimator.min_rate_bps(mean, problem.n_members(), p, problem.limits.rb_bandwidth_hz);
            required_rb_count(problem.rate_req_bps[i], r_min, n_rbs)
        })
        .collect()
}

/// Runs the allocation loop for one relay.
///
/// UE-to-RB messages of iteration `t + 1` are built from the RB-to-UE
/// messages of iteration `t`; RB-to-UE messages are then built from the fresh
/// UE-to-RB messages. Convergence is declared once two consecutive aggregate
/// rates differ by less than `epsilon`.
pub fn solve_relay(
    problem: &RelayProblem,
    kappa: &[usize],
    config: &SolverConfig,
    initial_p_ue: Option<&[Vec<f64>]>,
) -> RelaySolution {
    let k = problem.n_members();
    let n_rbs = problem.n_rbs();
    let lim = &problem.limits;
    let p_init = lim.ue_power_max_w / n_rbs as f64;
    let mut p: Vec<Vec<f64>> = match initial_p_ue {
        Some(p0) => p0.to_vec(),
        None => vec![vec![p_init; n_rbs]; k],
    };
    let mut msg = MessageState::zeros(k, n_rbs);
    let mut counters = OpCounters::default();
    let mut x = vec![vec![false; n_rbs]; k];

    while msg.iteration < config.t_max {
        let rates: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..n_rbs).map(|n| problem.rb_rate(i, n, p[i][n])).collect())
            .collect();

        let mut sorts = Vec::with_capacity(k);
        for i in 0..k {
            let mut work = SortWork::default();
            msg.psi[i] = ue_to_rb_messages(&rates[i], &msg.psi_tilde[i], kappa[i].max(1), config.omega, &mut work);
            sorts.push(work.sorts);
            counters.max_sort_len = counters.max_sort_len.max(work.longest);
        }
        for n in 0..n_rbs {
            let column: Vec<f64> = (0..k).map(|i| msg.psi[i][n]).collect();
            for (i, v) in rb_to_ue_messages(&column, config.omega).into_iter().enumerate() {
                msg.psi_tilde[i][n] = v;
            }
        }
        for i in 0..k {
            for n in 0..n_rbs {
                msg.tau[i][n] = msg.psi[i][n] + msg.psi_tilde[i][n];
            }
        }
        counters.message_updates.push(2 * k * n_rbs);
        counters.sorts_per_member.push(sorts);

        x = decide_allocation(&msg.tau);
        let caps = compute_caps(&x, problem);
        for i in 0..k {
            let assigned = x[i].iter().filter(|&&b| b).count();
            if assigned == 0 {
                continue;
            }
            let rate_now: f64 = (0..n_rbs).filter(|&n| x[i][n]).map(|n| rates[i][n]).sum();
            for n in (0..n_rbs).filter(|&n| x[i][n]) {
                let step = PowerStep {
                    p_now_w: p[i][n],
                    rate_now_bps: rate_now,
                    q_bps: problem.rate_req_bps[i],
                    assigned_rbs: assigned,
                    rb_bandwidth_hz: lim.rb_bandwidth_hz,
                    p_init_w: p_init,
                };
                p[i][n] = power_update(step, caps.effective(i, n), caps.p_tilde_w);
            }
        }

        let total = problem.objective(&x, &p);
        msg.iteration += 1;
        if let Some(&prev) = msg.rate_trace.last() {
            if (total - prev).abs() < config.epsilon {
                msg.converged = true;
            }
        }
        msg.rate_trace.push(total);
        if msg.converged {
            break;
        }
    }

    let p_emitted: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..n_rbs).map(|n| if x[i][n] { p[i][n] } else { 0.0 }).collect())
        .collect();
    let oversubscribed = kappa.iter().sum::<usize>() > n_rbs;
    RelaySolution {
        allocation: problem.allocation(x, p_emitted),
        messages: msg,
        kappa: kappa.to_vec(),
        oversubscribed,
        counters,
    }
}
