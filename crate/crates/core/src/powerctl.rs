//! Rate-tracking power update on assigned RBs with interference-aware
//! clamping.
//!
//! Each assigned RB's UE power is scaled by `(2^q - 1) / (2^r - 1)` where
//! `q` and `r` are the UE's required and current rates expressed in
//! bit/s/Hz over its assigned band. If the scaled power would break the
//! admissible bound, the UE falls back to `min(p_tilde, bound)`.

use serde::{Deserialize, Serialize};

use crate::ratemodel::RelayProblem;

/// Floor on `2^r - 1` in the update denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCaps {
    /// `P_ue^max / (#assigned RBs)`, or `P_ue^max / N` with none assigned.
    pub p_ue_rb_max: Vec<f64>,
    /// Interference-safe UE power per member and RB; `+inf` when both
    /// reference gains are zero.
    pub varpi: Vec<Vec<f64>>,
    /// Largest UE power whose coupled relay power fits `P_relay^max / N`.
    pub relay_rb_bound: Vec<Vec<f64>>,
    pub p_tilde_w: f64,
}

impl PowerCaps {
    /// Bound every emitted power must respect: budget share, interference
    /// caps and the relay's per-RB budget.
    pub fn effective(&self, i: usize, n: usize) -> f64 {
        self.p_ue_rb_max[i].min(self.varpi[i][n]).min(self.relay_rb_bound[i][n])
    }
}

/// `min(I_th1 / g_ref1, (gamma2 / gamma1) * I_th2 / g_ref2)`, with a zero
/// reference gain leaving that term inactive.
pub fn varpi(i_th1_w: f64, g_ref1: f64, i_th2_w: f64, g_ref2: f64, gamma1: f64, gamma2: f64) -> f64 {
    let hop1 = if g_ref1 > 0.0 { i_th1_w / g_ref1 } else { f64::INFINITY };
    let hop2 = if g_ref2 > 0.0 { gamma2 / gamma1 * i_th2_w / g_ref2 } else { f64::INFINITY };
    hop1.min(hop2)
}

pub fn compute_caps(x: &[Vec<bool>], problem: &RelayProblem) -> PowerCaps {
    let lim = &problem.limits;
    let n_rbs = problem.n_rbs();
    let relay_rb = lim.relay_power_max_w / n_rbs as f64;
    let p_ue_rb_max = x
        .iter()
        .map(|row| {
            let k = row.iter().filter(|&&b| b).count();
            lim.ue_power_max_w / if k == 0 { n_rbs } else { k } as f64
        })
        .collect();
    let mut vp = Vec::with_capacity(problem.n_members());
    let mut rb = Vec::with_capacity(problem.n_members());
    for i in 0..problem.n_members() {
        let mut vrow = Vec::with_capacity(n_rbs);
        let mut rrow = Vec::with_capacity(n_rbs);
        for n in 0..n_rbs {
            let (g1, g2) = (problem.gamma1[i][n], problem.gamma2[i][n]);
            vrow.push(varpi(lim.i_th1_w, problem.g_ref1[i][n], lim.i_th2_w, problem.g_ref2[i][n], g1, g2));
            rrow.push(if g1 > 0.0 { g2 / g1 * relay_rb } else { f64::INFINITY });
        }
        vp.push(vrow);
        rb.push(rrow);
    }
    PowerCaps {
        p_ue_rb_max,
        varpi: vp,
        relay_rb_bound: rb,
        p_tilde_w: lim.p_tilde_w,
    }
}

/// Inputs to one per-RB power step.
#[derive(Debug, Clone, Copy)]
pub struct PowerStep {
    pub p_now_w: f64,
    /// UE aggregate rate over its assigned RBs at the current powers.
    pub rate_now_bps: f64,
    pub q_bps: f64,
    /// Number of RBs assigned to the UE (at least 1 here).
    pub assigned_rbs: usize,
    pub rb_bandwidth_hz: f64,
    /// Power used when there is nothing to scale: `P_ue^max / N`.
    pub p_init_w: f64,
}

/// One GDCPC step for an assigned RB; never exceeds `bound_w`.
pub fn power_update(step: PowerStep, bound_w: f64, p_tilde_w: f64) -> f64 {
    let PowerStep { p_now_w, rate_now_bps, q_bps, assigned_rbs, rb_bandwidth_hz, p_init_w } = step;
    if q_bps <= 0.0 {
        // No target to track: the objective alone asks for as much power as allowed.
        return bound_w;
    }
    if rate_now_bps <= 0.0 {
        return if p_now_w <= 0.0 { p_init_w.min(bound_w) } else { p_tilde_w.min(bound_w) };
    }
    let band = assigned_rbs.max(1) as f64 * rb_bandwidth_hz;
    let q = q_bps / band;
    let r = rate_now_bps / band;
    let num = q.exp2() - 1.0;
    let den = (r.exp2() - 1.0).max(DENOMINATOR_FLOOR);
    let candidate = num / den * p_now_w;
    if candidate <= bound_w {
        candidate
    } else {
        p_tilde_w.min(bound_w)
    }
}
