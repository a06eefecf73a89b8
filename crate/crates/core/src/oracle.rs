//! Exhaustive search over RB assignments and a discrete power grid for
//! small relay problems. Ground truth for the message-passing solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpsolver::RelaySolution;
use crate::ratemodel::{exceeds, RelayProblem, FEASIBILITY_RTOL};

/// Largest `|U_l| * N` the oracle accepts.
pub const MAX_PRODUCT: usize = 12;
/// Largest power grid the oracle accepts.
pub const MAX_GRID: usize = 4;
/// Cap on leaves visited, so an admissible shape cannot run for hours.
pub const MAX_LEAVES: f64 = 5e7;

/// `{0, 1/4, 1/2, 1} * P_ue^max / N`.
pub fn default_grid(problem: &RelayProblem) -> Vec<f64> {
    let base = problem.limits.ue_power_max_w / problem.n_rbs() as f64;
    [0.0, 0.25, 0.5, 1.0].iter().map(|f| f * base).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub x: Vec<Vec<bool>>,
    pub p_ue: Vec<Vec<f64>>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Best point meeting every constraint including the rate requirements.
    pub qos_optimum: Option<OraclePoint>,
    /// Best point meeting the hard constraints, rate requirements ignored.
    pub relaxed_optimum: OraclePoint,
}

impl OracleResult {
    /// The QoS optimum when one exists, else the best-effort one.
    pub fn best(&self) -> &OraclePoint {
        self.qos_optimum.as_ref().unwrap_or(&self.relaxed_optimum)
    }

    /// No point meets every rate requirement.
    pub fn qos_infeasible(&self) -> bool {
        self.qos_optimum.is_none()
    }
}

struct Search<'a> {
    prob: &'a RelayProblem,
    grid: &'a [f64],
    /// RB -> (member, power) choice, `None` for an idle RB.
    choice: Vec<Option<(usize, f64)>>,
    ue_used: Vec<f64>,
    relay_used: f64,
    rates: Vec<f64>,
    objective: f64,
    best_qos: Option<OraclePoint>,
    best_relaxed: Option<OraclePoint>,
}

impl Search<'_> {
    fn point(&self) -> OraclePoint {
        let k = self.prob.n_members();
        let n_rbs = self.prob.n_rbs();
        let mut x = vec![vec![false; n_rbs]; k];
        let mut p = vec![vec![0.0; n_rbs]; k];
        for (n, c) in self.choice.iter().enumerate() {
            if let Some((i, pw)) = *c {
                x[i][n] = true;
                p[i][n] = pw;
            }
        }
        OraclePoint { x, p_ue: p, objective: self.objective }
    }

    fn leaf(&mut self) {
        if self.best_relaxed.as_ref().is_none_or(|b| self.objective > b.objective) {
            self.best_relaxed = Some(self.point());
        }
        let qos = self
            .rates
            .iter()
            .zip(&self.prob.rate_req_bps)
            .all(|(&r, &q)| r >= q * (1.0 - FEASIBILITY_RTOL));
        if qos && self.best_qos.as_ref().is_none_or(|b| self.objective > b.objective) {
            self.best_qos = Some(self.point());
        }
    }

    fn visit(&mut self, n: usize) {
        if n == self.prob.n_rbs() {
            self.leaf();
            return;
        }
        self.choice[n] = None;
        self.visit(n + 1);
        let lim = self.prob.limits;
        for i in 0..self.prob.n_members() {
            for &pw in self.grid {
                let coupling = self.prob.coupling(i, n);
                let relay_p = coupling * pw;
                if exceeds(pw * self.prob.g_ref1[i][n], lim.i_th1_w)
                    || exceeds(relay_p * self.prob.g_ref2[i][n], lim.i_th2_w)
                    || exceeds(self.ue_used[i] + pw, lim.ue_power_max_w)
                    || exceeds(self.relay_used + relay_p, lim.relay_power_max_w)
                {
                    continue;
                }
                let r = self.prob.rb_rate(i, n, pw);
                let saved = (self.ue_used[i], self.relay_used, self.rates[i], self.objective);
                self.ue_used[i] += pw;
                self.relay_used += relay_p;
                self.rates[i] += r;
                self.objective += r;
                self.choice[n] = Some((i, pw));
                self.visit(n + 1);
                (self.ue_used[i], self.relay_used, self.rates[i], self.objective) = saved;
            }
        }
        self.choice[n] = None;
    }
}

/// Enumerates every exclusive assignment and grid power combination.
///
/// Ties keep the first maximizer in enumeration order: RBs in index order,
/// idle before assigned, members by index, grid powers in the given order.
pub fn exhaustive_solve(problem: &RelayProblem, grid: &[f64]) -> Result<OracleResult> {
    let k = problem.n_members();
    let n_rbs = problem.n_rbs();
    let leaves = (1.0 + (k * grid.len()) as f64).powi(n_rbs as i32);
    if k * n_rbs > MAX_PRODUCT || grid.len() > MAX_GRID || leaves > MAX_LEAVES {
        return Err(Error::OracleTooLarge { ues: k, rbs: n_rbs, grid: grid.len() });
    }
    if grid.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidParam { name: "power_grid", reason: "entries must be finite and nonnegative".into() });
    }
    let mut s = Search {
        prob: problem,
        grid,
        choice: vec![None; n_rbs],
        ue_used: vec![0.0; k],
        relay_used: 0.0,
        rates: vec![0.0; k],
        objective: 0.0,
        best_qos: None,
        best_relaxed: None,
    };
    s.visit(0);
    Ok(OracleResult {
        qos_optimum: s.best_qos,
        relaxed_optimum: s.best_relaxed.expect("the all-idle point is always feasible"),
    })
}

/// Largest grid point not above `p` (relative slack 1e-12); zero if none.
pub fn snap_down(p: f64, grid: &[f64]) -> f64 {
    grid.iter()
        .copied()
        .filter(|&g| g <= p * (1.0 + 1e-12))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    /// Objective of the solver's allocation with powers snapped to the grid.
    pub snapped_objective: f64,
    /// Oracle optimum within the same feasibility class as the snapped point.
    pub oracle_objective: f64,
    /// The snapped point meets every rate requirement.
    pub snapped_meets_qos: bool,
    pub converged: bool,
}

impl OracleComparison {
    pub fn dominated(&self) -> bool {
        self.snapped_objective <= self.oracle_objective * (1.0 + 1e-9) + 1e-9
    }

    pub fn matches(&self) -> bool {
        let scale = self.oracle_objective.abs().max(1e-300);
        (self.oracle_objective - self.snapped_objective).abs() <= 1e-9 * scale
    }
}

/// Snaps the solver's powers to `grid` and compares with the oracle optimum
/// of the same feasibility class.
pub fn compare_with_oracle(problem: &RelayProblem, solution: &RelaySolution, grid: &[f64]) -> Result<OracleComparison> {
    let oracle = exhaustive_solve(problem, grid)?;
    let a = &solution.allocation;
    let p: Vec<Vec<f64>> = a
        .p_ue
        .iter()
        .zip(&a.x)
        .map(|(row, xr)| row.iter().zip(xr).map(|(&v, &on)| if on { snap_down(v, grid) } else { 0.0 }).collect())
        .collect();
    let rates = problem.member_rates(&a.x, &p);
    let meets = rates
        .iter()
        .zip(&problem.rate_req_bps)
        .all(|(&r, &q)| r >= q * (1.0 - FEASIBILITY_RTOL));
    let oracle_objective = if meets {
        oracle.qos_optimum.as_ref().map_or(f64::NEG_INFINITY, |o| o.objective)
    } else {
        oracle.relaxed_optimum.objective
    };
    Ok(OracleComparison {
        snapped_objective: problem.objective(&a.x, &p),
        oracle_objective,
        snapped_meets_qos: meets,
        converged: solution.messages.converged,
    })
}
