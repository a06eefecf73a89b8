//! Unit-power SINRs, per-RB rates under two-hop power coupling, and the
//! feasibility check of a relay allocation.
//!
//! Relay power is tied to UE power so both hops see the same SNR:
//! `p_relay = (gamma1 / gamma2) * p_ue`. The end-to-end rate on an RB then
//! collapses to `0.5 * B * log2(1 + p_ue * gamma1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::params::SimParams;
use crate::scenario::{NetworkScenario, UeKind};

/// Relative slack applied to every feasibility comparison.
pub const FEASIBILITY_RTOL: f64 = 1e-9;

/// SINR per watt of transmit power on each hop, indexed `[u][n]` by
/// global UE id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSinrTable {
    pub gamma1: Vec<Vec<f64>>,
    pub gamma2: Vec<Vec<f64>>,
    pub interference1: Vec<Vec<f64>>,
    pub interference2: Vec<Vec<f64>>,
}

/// RB indicators and powers of one relay. Rows follow `members`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationState {
    pub relay: usize,
    /// Global UE ids served by this relay.
    pub members: Vec<usize>,
    pub x: Vec<Vec<bool>>,
    pub p_ue: Vec<Vec<f64>>,
    pub p_relay: Vec<Vec<f64>>,
    /// Achieved end-to-end rate per member, bps.
    pub rates_bps: Vec<f64>,
}

impl AllocationState {
    pub fn empty(relay: usize, members: Vec<usize>, n_rbs: usize) -> Self {
        let k = members.len();
        Self {
            relay,
            members,
            x: vec![vec![false; n_rbs]; k],
            p_ue: vec![vec![0.0; n_rbs]; k],
            p_relay: vec![vec![0.0; n_rbs]; k],
            rates_bps: vec![0.0; k],
        }
    }

    pub fn n_rbs(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn assigned_count(&self, i: usize) -> usize {
        self.x[i].iter().filter(|&&b| b).count()
    }

    pub fn total_rate_bps(&self) -> f64 {
        self.rates_bps.iter().sum()
    }
}

/// Interference estimate before any relay has scheduled: each relay hands RB
/// `n` to member `n mod |U_l|`, UEs transmit at `P_ue^max / N` and relays at
/// `P_relay^max / N` on every RB.
pub fn initial_allocations(scenario: &NetworkScenario, params: &SimParams) -> Vec<AllocationState> {
    round_robin_allocations(&scenario.association, params)
}

/// [`initial_allocations`] over an arbitrary member list per relay.
pub fn round_robin_allocations(members: &[Vec<usize>], params: &SimParams) -> Vec<AllocationState> {
    let n_rbs = params.n_rbs;
    let p_ue = params.ue_power_max_w() / n_rbs as f64;
    let p_relay = params.relay_power_max_w() / n_rbs as f64;
    members
        .iter()
        .enumerate()
        .map(|(l, members)| {
            let mut a = AllocationState::empty(l, members.clone(), n_rbs);
            if !members.is_empty() {
                for n in 0..n_rbs {
                    let i = n % members.len();
                    a.x[i][n] = true;
                    a.p_ue[i][n] = p_ue;
                    a.p_relay[i][n] = p_relay;
                }
            }
            a
        })
        .collect()
}

/// Unit SINRs of every UE given the other relays' allocations.
///
/// `allocations` is indexed by relay; a UE never sees interference from its
/// own relay's entry. First-hop interference comes from co-RB UEs of other
/// relays. On the second hop a CUE's relay-eNB link is hit by other relays'
/// transmissions toward D2D receivers, while a D2D receiver is hit by every
/// other relay's second-hop transmission.
pub fn unit_sinrs(
    chan: &ChannelRealization,
    scenario: &NetworkScenario,
    allocations: &[AllocationState],
) -> UnitSinrTable {
    let n_rbs = chan.n_rbs;
    let n_ues = scenario.n_ues();
    let sigma2 = chan.noise_power_w;
    let mut table = UnitSinrTable {
        gamma1: vec![vec![0.0; n_rbs]; n_ues],
        gamma2: vec![vec![0.0; n_rbs]; n_ues],
        interference1: vec![vec![0.0; n_rbs]; n_ues],
        interference2: vec![vec![0.0; n_rbs]; n_ues],
    };
    for u in 0..n_ues {
        let l = scenario.ue_relay(u);
        let kind = scenario.ue_kind(u);
        let pair = scenario.d2d_index(u);
        for n in 0..n_rbs {
            let mut i1 = 0.0;
            let mut i2 = 0.0;
            for alloc in allocations.iter().filter(|a| a.relay != l) {
                let j = alloc.relay;
                for (row, &v) in alloc.members.iter().enumerate() {
                    if !alloc.x[row][n] {
                        continue;
                    }
                    i1 += alloc.p_ue[row][n] * chan.g_ue_relay[v][l][n];
                    match (kind, pair) {
                        (UeKind::D2d, Some(d)) => {
                            i2 += alloc.p_relay[row][n] * chan.g_relay_d2drx[j][d][n];
                        }
                        _ => {
                            if scenario.ue_kind(v) == UeKind::D2d {
                                i2 += alloc.p_relay[row][n] * chan.h_relay_enb[j][n];
                            }
                        }
                    }
                }
            }
            let h2 = match pair {
                Some(d) => chan.h_relay_d2drx[d][n],
                None => chan.h_relay_enb[l][n],
            };
            table.interference1[u][n] = i1;
            table.interference2[u][n] = i2;
            table.gamma1[u][n] = chan.h_ue_relay[u][n] / (i1 + sigma2);
            table.gamma2[u][n] = h2 / (i2 + sigma2);
        }
    }
    table
}

/// Two-hop rate on one RB under power coupling, bps.
pub fn rb_rate_bps(p_ue_w: f64, gamma1: f64, rb_bandwidth_hz: f64) -> f64 {
    0.5 * rb_bandwidth_hz * (p_ue_w * gamma1).ln_1p() / std::f64::consts::LN_2
}

/// Half the weaker of two single-hop Shannon rates.
pub fn e2e_rate_bps(r1: f64, r2: f64) -> f64 {
    0.5 * r1.min(r2)
}

/// Single-hop Shannon rate `B log2(1 + p * gamma)`.
pub fn shannon_rate_bps(p_w: f64, gamma: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (p_w * gamma).ln_1p() / std::f64::consts::LN_2
}

/// Power and interference limits shared by every UE of a relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayLimits {
    pub n_rbs: usize,
    pub rb_bandwidth_hz: f64,
    pub ue_power_max_w: f64,
    pub relay_power_max_w: f64,
    pub i_th1_w: f64,
    pub i_th2_w: f64,
    pub p_tilde_w: f64,
}

impl RelayLimits {
    pub fn from_params(params: &SimParams) -> Self {
        Self {
            n_rbs: params.n_rbs,
            rb_bandwidth_hz: params.rb_bandwidth_hz,
            ue_power_max_w: params.ue_power_max_w(),
            relay_power_max_w: params.relay_power_max_w(),
            i_th1_w: params.i_th1_w(),
            i_th2_w: params.i_th2_w(),
            p_tilde_w: params.p_tilde_w(),
        }
    }
}

/// Everything one relay needs to allocate its RBs, rows indexed by local
/// member position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayProblem {
    pub relay: usize,
    pub members: Vec<usize>,
    pub gamma1: Vec<Vec<f64>>,
    pub gamma2: Vec<Vec<f64>>,
    pub g_ref1: Vec<Vec<f64>>,
    pub g_ref2: Vec<Vec<f64>>,
    pub rate_req_bps: Vec<f64>,
    pub limits: RelayLimits,
}

impl RelayProblem {
    pub fn build(
        relay: usize,
        scenario: &NetworkScenario,
        chan: &ChannelRealization,
        sinr: &UnitSinrTable,
        params: &SimParams,
    ) -> Self {
        Self::build_for(relay, scenario.association[relay].clone(), scenario, chan, sinr, params)
    }

    /// Like [`RelayProblem::build`] but restricted to `members`.
    pub fn build_for(
        relay: usize,
        members: Vec<usize>,
        scenario: &NetworkScenario,
        chan: &ChannelRealization,
        sinr: &UnitSinrTable,
        params: &SimParams,
    ) -> Self {
        let pick = |t: &Vec<Vec<f64>>| members.iter().map(|&u| t[u].clone()).collect::<Vec<_>>();
        let rate_req_bps = members
            .iter()
            .map(|&u| match scenario.ue_kind(u) {
                UeKind::Cellular => params.cue_rate_req_bps,
                UeKind::D2d => params.d2d_rate_req_bps,
            })
            .collect();
        Self {
            relay,
            gamma1: pick(&sinr.gamma1),
            gamma2: pick(&sinr.gamma2),
            g_ref1: pick(&chan.g_ref_hop1),
            g_ref2: pick(&chan.g_ref_hop2),
            members,
            rate_req_bps,
            limits: RelayLimits::from_params(params),
        }
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_rbs(&self) -> usize {
        self.limits.n_rbs
    }

    /// `gamma1 / gamma2`: relay watts per UE watt on this RB.
    pub fn coupling(&self, i: usize, n: usize) -> f64 {
        self.gamma1[i][n] / self.gamma2[i][n]
    }

    pub fn rb_rate(&self, i: usize, n: usize, p_ue_w: f64) -> f64 {
        rb_rate_bps(p_ue_w, self.gamma1[i][n], self.limits.rb_bandwidth_hz)
    }

    /// P2 objective: sum of member rates over assigned RBs.
    pub fn objective(&self, x: &[Vec<bool>], p_ue: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_members() {
            for n in 0..self.n_rbs() {
                if x[i][n] {
                    total += self.rb_rate(i, n, p_ue[i][n]);
                }
            }
        }
        total
    }

    pub fn member_rates(&self, x: &[Vec<bool>], p_ue: &[Vec<f64>]) -> Vec<f64> {
        (0..self.n_members())
            .map(|i| (0..self.n_rbs()).filter(|&n| x[i][n]).map(|n| self.rb_rate(i, n, p_ue[i][n])).fold(0.0, |a, r| a + r))
            .collect()
    }

    /// Builds a full allocation from indicators and UE powers, deriving relay
    /// powers and rates. Relay power is zero on unassigned RBs.
    pub fn allocation(&self, x: Vec<Vec<bool>>, p_ue: Vec<Vec<f64>>) -> AllocationState {
        let p_relay = (0..self.n_members())
            .map(|i| {
                (0..self.n_rbs())
                    .map(|n| if x[i][n] { self.coupling(i, n) * p_ue[i][n] } else { 0.0 })
                    .collect()
            })
            .collect();
        let rates_bps = self.member_rates(&x, &p_ue);
        AllocationState {
            relay: self.relay,
            members: self.members.clone(),
            x,
            p_ue,
            p_relay,
            rates_bps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    /// Breaks a hard constraint; the allocation must not be emitted.
    Hard,
    /// Rate requirement missed; reported, not disqualifying.
    Qos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeasibilityViolation {
    RbShared { rb: usize, holders: Vec<usize> },
    NegativePower { member: usize, rb: usize },
    UePowerBudget { member: usize, used_w: f64, max_w: f64 },
    RelayPowerBudget { used_w: f64, max_w: f64 },
    Hop1Cap { rb: usize, interference_w: f64, cap_w: f64 },
    Hop2Cap { rb: usize, interference_w: f64, cap_w: f64 },
    Coupling { member: usize, rb: usize },
    Qos { member: usize, rate_bps: f64, required_bps: f64 },
}

impl FeasibilityViolation {
    pub fn severity(&self) -> Severity {
        match self {
            FeasibilityViolation::Qos { .. } => Severity::Qos,
            _ => Severity::Hard,
        }
    }
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FeasibilityViolation::*;
        match self {
            RbShared { rb, holders } => write!(f, "RB {rb} held by members {holders:?}"),
            NegativePower { member, rb } => write!(f, "member {member} has negative power on RB {rb}"),
            UePowerBudget { member, used_w, max_w } => {
                write!(f, "member {member} uses {used_w:.4e} W > budget {max_w:.4e} W")
            }
            RelayPowerBudget { used_w, max_w } => write!(f, "relay uses {used_w:.4e} W > budget {max_w:.4e} W"),
            Hop1Cap { rb, interference_w, cap_w } => {
                write!(f, "RB {rb}: hop-1 interference {interference_w:.4e} W > {cap_w:.4e} W")
            }
            Hop2Cap { rb, interference_w, cap_w } => {
                write!(f, "RB {rb}: hop-2 interference {interference_w:.4e} W > {cap_w:.4e} W")
            }
            Coupling { member, rb } => write!(f, "member {member}, RB {rb}: relay power not coupled to UE power"),
            Qos { member, rate_bps, required_bps } => {
                write!(f, "member {member} gets {rate_bps:.1} bps < required {required_bps:.1} bps")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<FeasibilityViolation>,
}

impl FeasibilityReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn hard(&self) -> impl Iterator<Item = &FeasibilityViolation> {
        self.violations.iter().filter(|v| v.severity() == Severity::Hard)
    }

    pub fn hard_ok(&self) -> bool {
        self.hard().next().is_none()
    }

    pub fn qos_ok(&self) -> bool {
        self.violations.iter().all(|v| v.severity() != Severity::Qos)
    }
}

pub(crate) fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + FEASIBILITY_RTOL * rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE)
}

/// Checks an allocation against every constraint of the relay problem.
pub fn check_feasibility(alloc: &AllocationState, problem: &RelayProblem) -> FeasibilityReport {
    use FeasibilityViolation::*;
    let mut v = Vec::new();
    let k = problem.n_members();
    let n_rbs = problem.n_rbs();
    let lim = &problem.limits;

    for n in 0..n_rbs {
        let holders: Vec<usize> = (0..k).filter(|&i| alloc.x[i][n]).collect();
        if holders.len() > 1 {
            v.push(RbShared { rb: n, holders });
        }
    }
    for i in 0..k {
        for n in 0..n_rbs {
            if alloc.p_ue[i][n] < 0.0 || alloc.p_relay[i][n] < 0.0 {
                v.push(NegativePower { member: i, rb: n });
            }
        }
    }
    for i in 0..k {
        let used: f64 = (0..n_rbs).filter(|&n| alloc.x[i][n]).map(|n| alloc.p_ue[i][n]).sum();
        if exceeds(used, lim.ue_power_max_w) {
            v.push(UePowerBudget { member: i, used_w: used, max_w: lim.ue_power_max_w });
        }
    }
    let relay_used: f64 = (0..k)
        .flat_map(|i| (0..n_rbs).map(move |n| (i, n)))
        .filter(|&(i, n)| alloc.x[i][n])
        .map(|(i, n)| problem.coupling(i, n) * alloc.p_ue[i][n])
        .sum();
    if exceeds(relay_used, lim.relay_power_max_w) {
        v.push(RelayPowerBudget { used_w: relay_used, max_w: lim.relay_power_max_w });
    }
    for n in 0..n_rbs {
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        for i in (0..k).filter(|&i| alloc.x[i][n]) {
            i1 += alloc.p_ue[i][n] * problem.g_ref1[i][n];
            i2 += problem.coupling(i, n) * alloc.p_ue[i][n] * problem.g_ref2[i][n];
        }
        if exceeds(i1, lim.i_th1_w) {
            v.push(Hop1Cap { rb: n, interference_w: i1, cap_w: lim.i_th1_w });
        }
        if exceeds(i2, lim.i_th2_w) {
            v.push(Hop2Cap { rb: n, interference_w: i2, cap_w: lim.i_th2_w });
        }
    }
    for i in 0..k {
        for n in (0..n_rbs).filter(|&n| alloc.x[i][n]) {
            let expected = problem.coupling(i, n) * alloc.p_ue[i][n];
            if (alloc.p_relay[i][n] - expected).abs() > 1e-12 * expected.abs().max(f64::MIN_POSITIVE) {
                v.push(Coupling { member: i, rb: n });
            }
        }
    }
    let rates = problem.member_rates(&alloc.x, &alloc.p_ue);
    for (i, &rate) in rates.iter().enumerate() {
        let q = problem.rate_req_bps[i];
        if rate < q * (1.0 - FEASIBILITY_RTOL) {
            v.push(Qos { member: i, rate_bps: rate, required_bps: q });
        }
    }
    FeasibilityReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::scenario::generate_scenario;
    use proptest::prelude::*;

    fn tiny_problem() -> RelayProblem {
        RelayProblem {
            relay: 0,
            members: vec![0, 1],
            gamma1: vec![vec![1e3, 2e3], vec![3e3, 4e3]],
            gamma2: vec![vec![2e3, 2e3], vec![1e3, 4e3]],
            g_ref1: vec![vec![1e-9; 2]; 2],
            g_ref2: vec![vec![1e-9; 2]; 2],
            rate_req_bps: vec![1e3, 1e3],
            limits: RelayLimits {
                n_rbs: 2,
                rb_bandwidth_hz: 180e3,
                ue_power_max_w: 0.2,
                relay_power_max_w: 1.0,
                i_th1_w: 1e-10,
                i_th2_w: 1e-10,
                p_tilde_w: 1e-3,
            },
        }
    }

    #[test]
    fn rb_rate_examples() {
        assert_eq!(rb_rate_bps(0.0, 5.0, 180e3), 0.0);
        assert!((rb_rate_bps(1.0, 1.0, 180e3) - 90_000.0).abs() < 1e-9);
        assert!((rb_rate_bps(1.0, 3.0, 180e3) - 180_000.0).abs() < 1e-9);
    }

    #[test]
    fn e2e_examples() {
        assert_eq!(e2e_rate_bps(2.0, 4.0), 1.0);
        assert_eq!(e2e_rate_bps(4.0, 4.0), 2.0);
        assert_eq!(e2e_rate_bps(0.0, 5.0), 0.0);
    }

    #[test]
    fn interference_free_limit() {
        let p = SimParams::default();
        let s = generate_scenario(&p, 15, 9, 1).unwrap();
        let chan = draw_channel(&s, &p, 1).unwrap();
        let silent: Vec<_> = s
            .association
            .iter()
            .enumerate()
            .map(|(l, m)| AllocationState::empty(l, m.clone(), p.n_rbs))
            .collect();
        let t = unit_sinrs(&chan, &s, &silent);
        for u in 0..s.n_ues() {
            for n in 0..p.n_rbs {
                assert_eq!(t.gamma1[u][n], chan.h_ue_relay[u][n] / chan.noise_power_w);
                assert_eq!(t.interference1[u][n], 0.0);
            }
        }
    }

    #[test]
    fn single_interferer_adds_to_noise() {
        let p = SimParams { n_rbs: 2, ..SimParams::default() };
        let s = generate_scenario(&p, 3, 0, 4).unwrap();
        let mut chan = draw_channel(&s, &p, 4).unwrap();
        // CUE 1 (relay 1) transmits on RB 0 at 0.1 W toward relay 0 with g = 1e-9
        chan.g_ue_relay[1][0][0] = 1e-9;
        let mut allocs: Vec<_> = s
            .association
            .iter()
            .enumerate()
            .map(|(l, m)| AllocationState::empty(l, m.clone(), p.n_rbs))
            .collect();
        allocs[1].x[0][0] = true;
        allocs[1].p_ue[0][0] = 0.1;
        let t = unit_sinrs(&chan, &s, &allocs);
        assert!((t.interference1[0][0] - 1e-10).abs() < 1e-22);
        let expected = chan.h_ue_relay[0][0] / (1e-10 + chan.noise_power_w);
        assert!((t.gamma1[0][0] / expected - 1.0).abs() < 1e-12);
        assert_eq!(t.interference1[0][1], 0.0);
    }

    #[test]
    fn second_hop_numerator_depends_on_kind() {
        let p = SimParams::default();
        let s = generate_scenario(&p, 3, 3, 2).unwrap();
        let chan = draw_channel(&s, &p, 2).unwrap();
        let silent: Vec<_> = s
            .association
            .iter()
            .enumerate()
            .map(|(l, m)| AllocationState::empty(l, m.clone(), p.n_rbs))
            .collect();
        let t = unit_sinrs(&chan, &s, &silent);
        let cue = s.association[0][0];
        let d2d = s.association[0][1];
        assert_eq!(s.ue_kind(d2d), UeKind::D2d);
        for n in 0..p.n_rbs {
            assert_eq!(t.gamma2[cue][n], chan.h_relay_enb[0][n] / chan.noise_power_w);
            let d = s.d2d_index(d2d).unwrap();
            assert_eq!(t.gamma2[d2d][n], chan.h_relay_d2drx[d][n] / chan.noise_power_w);
        }
    }

    #[test]
    fn sinr_reproducible_from_parts() {
        let p = SimParams::default();
        let s = generate_scenario(&p, 15, 9, 5).unwrap();
        let chan = draw_channel(&s, &p, 5).unwrap();
        let t = unit_sinrs(&chan, &s, &initial_allocations(&s, &p));
        for u in 0..s.n_ues() {
            for n in 0..p.n_rbs {
                let g = chan.h_ue_relay[u][n] / (t.interference1[u][n] + chan.noise_power_w);
                assert!((t.gamma1[u][n] / g - 1.0).abs() < 1e-12);
                assert!(t.interference1[u][n] > 0.0 && t.gamma2[u][n].is_finite());
            }
        }
    }

    #[test]
    fn zero_allocation_only_misses_qos() {
        let prob = tiny_problem();
        let a = prob.allocation(vec![vec![false; 2]; 2], vec![vec![0.0; 2]; 2]);
        let r = check_feasibility(&a, &prob);
        assert_eq!(r.violations.len(), 2);
        assert!(r.hard_ok());
        assert!(!r.qos_ok());
    }

    #[test]
    fn shared_rb_is_flagged() {
        let prob = tiny_problem();
        let x = vec![vec![true, false], vec![true, false]];
        let a = prob.allocation(x, vec![vec![1e-3, 0.0], vec![1e-3, 0.0]]);
        let r = check_feasibility(&a, &prob);
        assert!(r.violations.contains(&FeasibilityViolation::RbShared { rb: 0, holders: vec![0, 1] }));
    }

    #[test]
    fn caps_and_budgets_are_checked() {
        let prob = tiny_problem();
        // 0.15 W * 1e-9 = 1.5e-10 > 1e-10 on hop 1
        let a = prob.allocation(vec![vec![true, false], vec![false, true]], vec![vec![0.15, 0.0], vec![0.0, 0.05]]);
        let r = check_feasibility(&a, &prob);
        assert!(r.hard().any(|v| matches!(v, FeasibilityViolation::Hop1Cap { rb: 0, .. })));
        let a = prob.allocation(vec![vec![true, true], vec![false, false]], vec![vec![0.15, 0.1], vec![0.0, 0.0]]);
        let r = check_feasibility(&a, &prob);
        assert!(r.hard().any(|v| matches!(v, FeasibilityViolation::UePowerBudget { member: 0, .. })));
    }

    #[test]
    fn coupling_breach_is_flagged() {
        let prob = tiny_problem();
        let mut a = prob.allocation(vec![vec![true, false], vec![false, true]], vec![vec![1e-3, 0.0], vec![0.0, 1e-3]]);
        assert!(check_feasibility(&a, &prob).hard_ok());
        a.p_relay[0][0] *= 1.001;
        assert!(!check_feasibility(&a, &prob).hard_ok());
    }

    proptest! {
        #[test]
        fn coupled_rate_equals_half_min_of_hops(p in 1e-6f64..1.0, g1 in 1e-2f64..1e8, g2 in 1e-2f64..1e8) {
            let b = 180e3;
            let p_relay = g1 / g2 * p;
            let r1 = shannon_rate_bps(p, g1, b);
            let r2 = shannon_rate_bps(p_relay, g2, b);
            let lhs = e2e_rate_bps(r1, r2);
            let rhs = rb_rate_bps(p, g1, b);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
            prop_assert!((p_relay * g2 / (p * g1) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn rate_monotone(p in 0.0f64..1.0, dp in 0.0f64..1.0, g in 0.0f64..1e9, dg in 0.0f64..1e9) {
            prop_assert!(rb_rate_bps(p + dp, g, 180e3) >= rb_rate_bps(p, g, 180e3));
            prop_assert!(rb_rate_bps(p, g + dg, 180e3) >= rb_rate_bps(p, g, 180e3));
        }

        #[test]
        fn e2e_symmetric(a in 0.0f64..1e9, b in 0.0f64..1e9) {
            prop_assert_eq!(e2e_rate_bps(a, b), e2e_rate_bps(b, a));
        }
    }
}
