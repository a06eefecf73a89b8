//! Link gains for one snapshot: distance-dependent path loss, log-normal
//! shadowing (one draw per link, frequency flat) and Rayleigh fading (one
//! unit-mean exponential power draw per link per RB).
//!
//! Tensor layout conventions:
//! - `[u][n]`: global UE id, RB.
//! - `[u][l][n]`: UE transmitter `u` toward relay `l`.
//! - `[l][d][n]`: relay `l` toward the receiver of D2D pair `d`.
//!
//! Cross-gain tensors keep a slot for the serving relay so indexing stays
//! dense; that slot is zero and the direct link lives in the `h_*` tensors.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::scenario::{NetworkScenario, Point};

fn check_domain(distance_km: f64, fading_power: f64) -> Result<()> {
    if !(distance_km > 0.0 && distance_km.is_finite()) {
        return Err(Error::PathLossDomain { what: "distance_km", value: distance_km });
    }
    if !(fading_power > 0.0 && fading_power.is_finite()) {
        return Err(Error::PathLossDomain { what: "fading_power", value: fading_power });
    }
    Ok(())
}

/// UE-relay (and relay-D2D receiver) path loss in dB.
///
/// `fading_power` is the Rayleigh power gain; it enters as a gain, so the
/// loss drops by `10 log10(fading_power)`.
pub fn path_loss_access_db(distance_km: f64, shadow_db: f64, fading_power: f64) -> Result<f64> {
    check_domain(distance_km, fading_power)?;
    Ok(103.8 + 20.9 * distance_km.log10() + shadow_db - 10.0 * fading_power.log10())
}

/// Relay-eNB path loss in dB. Same conventions as [`path_loss_access_db`].
pub fn path_loss_backhaul_db(distance_km: f64, shadow_db: f64, fading_power: f64) -> Result<f64> {
    check_domain(distance_km, fading_power)?;
    Ok(100.7 + 23.5 * distance_km.log10() + shadow_db - 10.0 * fading_power.log10())
}

pub fn gain_from_path_loss(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LinkClass {
    Access,
    Backhaul,
}

/// Per-snapshot, per-RB link gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub n_rbs: usize,
    /// Thermal noise per RB, watts.
    pub noise_power_w: f64,
    /// UE transmitter to its serving relay, `[u][n]`.
    pub h_ue_relay: Vec<Vec<f64>>,
    /// Relay to eNB, `[l][n]`. Also the interference gain from relay `l`
    /// toward the eNB.
    pub h_relay_enb: Vec<Vec<f64>>,
    /// Serving relay to D2D receiver, `[d][n]` by pair index.
    pub h_relay_d2drx: Vec<Vec<f64>>,
    /// UE transmitter to non-serving relays, `[u][l][n]`.
    pub g_ue_relay: Vec<Vec<Vec<f64>>>,
    /// Relay to receivers of D2D pairs it does not serve, `[l][d][n]`.
    pub g_relay_d2drx: Vec<Vec<Vec<f64>>>,
    /// Strongest first-hop victim gain per UE, `[u][n]`; zero when no
    /// neighbouring relay exists.
    pub g_ref_hop1: Vec<Vec<f64>>,
    /// Strongest second-hop victim gain per UE (shared by all UEs of a
    /// relay), `[u][n]`; zero when no foreign D2D receiver exists.
    pub g_ref_hop2: Vec<Vec<f64>>,
    /// Direct D2D transmitter to receiver, `[d][n]`; used by the relay-free
    /// reference scheme.
    pub h_d2d_direct: Vec<Vec<f64>>,
    /// CUE transmitter to D2D receiver, `[c][d][n]`; reference scheme only.
    pub g_cue_d2drx: Vec<Vec<Vec<f64>>>,
    /// No neighbouring relay: first-hop interference caps are inactive.
    pub hop1_caps_inactive: bool,
    /// No foreign D2D receiver: second-hop interference caps are inactive.
    pub hop2_caps_inactive: bool,
}

struct LinkDrawer<'a> {
    rng: ChaCha8Rng,
    params: &'a SimParams,
    shadow_access: Normal<f64>,
    shadow_backhaul: Normal<f64>,
}

impl LinkDrawer<'_> {
    /// One shadowing draw, then one fading draw per RB.
    fn link(&mut self, a: Point, b: Point, class: LinkClass) -> Result<Vec<f64>> {
        let d_km = a.distance(&b) / 1000.0;
        let shadow = match class {
            LinkClass::Access => self.shadow_access.sample(&mut self.rng),
            LinkClass::Backhaul => self.shadow_backhaul.sample(&mut self.rng),
        };
        (0..self.params.n_rbs)
            .map(|_| {
                let fading: f64 = Exp1.sample(&mut self.rng);
                // Exp1 can return exactly 0 only with negligible probability; keep the
                // path loss finite anyway.
                let fading = fading.max(f64::MIN_POSITIVE);
                let pl = match class {
                    LinkClass::Access => path_loss_access_db(d_km, shadow, fading)?,
                    LinkClass::Backhaul => path_loss_backhaul_db(d_km, shadow, fading)?,
                };
                Ok(gain_from_path_loss(pl))
            })
            .collect()
    }
}

/// Draws every link gain the rate model and the reference scheme read.
pub fn draw_channel(scenario: &NetworkScenario, params: &SimParams, rng_seed: u64) -> Result<ChannelRealization> {
    params.validate()?;
    let n_rbs = params.n_rbs;
    let n_relays = scenario.n_relays();
    let n_ues = scenario.n_ues();
    let n_pairs = scenario.d2d_pairs.len();
    let n_cues = scenario.cues.len();
    let mut drawer = LinkDrawer {
        rng: ChaCha8Rng::seed_from_u64(rng_seed),
        params,
        shadow_access: Normal::new(0.0, params.shadow_sigma_ue_relay_db).expect("validated sigma"),
        shadow_backhaul: Normal::new(0.0, params.shadow_sigma_relay_enb_db).expect("validated sigma"),
    };
    let zeros = vec![0.0; n_rbs];

    let mut h_ue_relay = Vec::with_capacity(n_ues);
    let mut g_ue_relay = Vec::with_capacity(n_ues);
    for u in 0..n_ues {
        let tx = scenario.tx_position(u);
        let own = scenario.ue_relay(u);
        let mut row = Vec::with_capacity(n_relays);
        for (l, relay) in scenario.relays.iter().enumerate() {
            if l == own {
                h_ue_relay.push(drawer.link(tx, *relay, LinkClass::Access)?);
                row.push(zeros.clone());
            } else {
                row.push(drawer.link(tx, *relay, LinkClass::Access)?);
            }
        }
        g_ue_relay.push(row);
    }

    let h_relay_enb = scenario
        .relays
        .iter()
        .map(|r| drawer.link(*r, scenario.enb_position, LinkClass::Backhaul))
        .collect::<Result<Vec<_>>>()?;

    let mut h_relay_d2drx = vec![Vec::new(); n_pairs];
    let mut g_relay_d2drx = vec![vec![Vec::new(); n_pairs]; n_relays];
    for (l, relay) in scenario.relays.iter().enumerate() {
        for (d, pair) in scenario.d2d_pairs.iter().enumerate() {
            let gains = drawer.link(*relay, pair.rx, LinkClass::Access)?;
            if pair.relay == l {
                h_relay_d2drx[d] = gains;
                g_relay_d2drx[l][d] = zeros.clone();
            } else {
                g_relay_d2drx[l][d] = gains;
            }
        }
    }

    let h_d2d_direct = scenario
        .d2d_pairs
        .iter()
        .map(|p| drawer.link(p.tx, p.rx, LinkClass::Access))
        .collect::<Result<Vec<_>>>()?;
    let mut g_cue_d2drx = Vec::with_capacity(n_cues);
    for cue in &scenario.cues {
        let row = scenario
            .d2d_pairs
            .iter()
            .map(|p| drawer.link(cue.position, p.rx, LinkClass::Access))
            .collect::<Result<Vec<_>>>()?;
        g_cue_d2drx.push(row);
    }

    let mut chan = ChannelRealization {
        n_rbs,
        noise_power_w: params.noise_power_w(),
        h_ue_relay,
        h_relay_enb,
        h_relay_d2drx,
        g_ue_relay,
        g_relay_d2drx,
        g_ref_hop1: Vec::new(),
        g_ref_hop2: Vec::new(),
        h_d2d_direct,
        g_cue_d2drx,
        hop1_caps_inactive: n_relays < 2,
        hop2_caps_inactive: false,
    };
    chan.g_ref_hop1 = reference_gains_hop1(scenario, &chan);
    chan.g_ref_hop2 = reference_gains_hop2(scenario, &chan);
    chan.hop2_caps_inactive = (0..n_relays).all(|l| scenario.d2d_pairs.iter().all(|p| p.relay == l));
    Ok(chan)
}

/// Strongest gain from each UE toward any relay other than its own.
pub fn reference_gains_hop1(scenario: &NetworkScenario, chan: &ChannelRealization) -> Vec<Vec<f64>> {
    (0..scenario.n_ues())
        .map(|u| {
            let own = scenario.ue_relay(u);
            (0..chan.n_rbs)
                .map(|n| {
                    (0..scenario.n_relays())
                        .filter(|&l| l != own)
                        .map(|l| chan.g_ue_relay[u][l][n])
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

/// Strongest gain from each UE's relay toward a D2D receiver served elsewhere.
pub fn reference_gains_hop2(scenario: &NetworkScenario, chan: &ChannelRealization) -> Vec<Vec<f64>> {
    (0..scenario.n_ues())
        .map(|u| {
            let own = scenario.ue_relay(u);
            (0..chan.n_rbs)
                .map(|n| {
                    scenario
                        .d2d_pairs
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.relay != own)
                        .map(|(d, _)| chan.g_relay_d2drx[own][d][n])
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

impl ChannelRealization {
    /// Describes every broken invariant; empty when the realization is sound.
    pub fn check_invariants(&self, scenario: &NetworkScenario) -> Vec<String> {
        let mut out = Vec::new();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.noise_power_w) {
            out.push(format!("noise power {} not positive", self.noise_power_w));
        }
        let mut check = |name: &str, idx: String, v: f64| {
            if !positive(v) {
                out.push(format!("{name}{idx} = {v}"));
            }
        };
        for (u, row) in self.h_ue_relay.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                check("h_ue_relay", format!("[{u}][{n}]"), v);
            }
            let own = scenario.ue_relay(u);
            for l in (0..scenario.n_relays()).filter(|&l| l != own) {
                for (n, &v) in self.g_ue_relay[u][l].iter().enumerate() {
                    check("g_ue_relay", format!("[{u}][{l}][{n}]"), v);
                }
            }
        }
        for (l, row) in self.h_relay_enb.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                check("h_relay_enb", format!("[{l}][{n}]"), v);
            }
        }
        for (d, row) in self.h_relay_d2drx.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                check("h_relay_d2drx", format!("[{d}][{n}]"), v);
            }
        }
        if reference_gains_hop1(scenario, self) != self.g_ref_hop1 {
            out.push("g_ref_hop1 does not match the max over cross gains".into());
        }
        if reference_gains_hop2(scenario, self) != self.g_ref_hop2 {
            out.push("g_ref_hop2 does not match the max over cross gains".into());
        }
        out
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Draws `count` fading powers; exposed for distribution checks.
pub fn sample_fading<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| Exp1.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::generate_scenario;

    #[test]
    fn access_path_loss_values() {
        assert!((path_loss_access_db(1.0, 0.0, 1.0).unwrap() - 103.8).abs() < 1e-12);
        assert!((path_loss_access_db(0.1, 0.0, 1.0).unwrap() - 82.9).abs() < 1e-12);
        assert!((path_loss_access_db(0.1, 10.0, 1.0).unwrap() - 92.9).abs() < 1e-12);
    }

    #[test]
    fn backhaul_path_loss_values() {
        assert!((path_loss_backhaul_db(1.0, 0.0, 1.0).unwrap() - 100.7).abs() < 1e-12);
        let expected = 100.7 + 23.5 * 0.125f64.log10();
        assert!((path_loss_backhaul_db(0.125, 0.0, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 79.478).abs() < 1e-3);
        assert!((path_loss_backhaul_db(0.125, 6.0, 1.0).unwrap() - (expected + 6.0)).abs() < 1e-12);
    }

    #[test]
    fn stronger_fading_lowers_loss() {
        let weak = path_loss_access_db(0.1, 0.0, 0.5).unwrap();
        let strong = path_loss_access_db(0.1, 0.0, 2.0).unwrap();
        assert!(strong < weak);
        let g = gain_from_path_loss(path_loss_access_db(0.1, 0.0, 2.0).unwrap());
        let g1 = gain_from_path_loss(82.9);
        assert!((g / g1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_domain_errors() {
        assert!(path_loss_access_db(0.0, 0.0, 1.0).is_err());
        assert!(path_loss_access_db(-1.0, 0.0, 1.0).is_err());
        assert!(path_loss_backhaul_db(1.0, 0.0, 0.0).is_err());
        assert!(path_loss_backhaul_db(1.0, 0.0, -2.0).is_err());
    }

    #[test]
    fn gain_conversion() {
        assert_eq!(gain_from_path_loss(0.0), 1.0);
        assert!((gain_from_path_loss(82.9) / 10f64.powf(-8.29) - 1.0).abs() < 1e-14);
        assert!((gain_from_path_loss(82.9) - 5.13e-9).abs() < 0.01e-9);
        assert!((gain_from_path_loss(100.0) - 1e-10).abs() < 1e-25);
    }

    #[test]
    fn draw_is_deterministic_and_sound() {
        let p = SimParams::default();
        let s = generate_scenario(&p, 15, 9, 3).unwrap();
        let a = draw_channel(&s, &p, 17).unwrap();
        let b = draw_channel(&s, &p, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.check_invariants(&s).is_empty(), "{:?}", a.check_invariants(&s));
        assert!(!a.hop1_caps_inactive && !a.hop2_caps_inactive);
        let c = draw_channel(&s, &p, 18).unwrap();
        assert_ne!(a.h_ue_relay, c.h_ue_relay);
    }

    #[test]
    fn reference_gain_is_max_of_two_neighbours() {
        let p = SimParams::default();
        let s = generate_scenario(&p, 15, 9, 8).unwrap();
        let chan = draw_channel(&s, &p, 2).unwrap();
        for u in 0..s.n_ues() {
            let own = s.ue_relay(u);
            let others: Vec<usize> = (0..3).filter(|&l| l != own).collect();
            assert_eq!(others.len(), 2);
            for n in 0..p.n_rbs {
                let m = chan.g_ue_relay[u][others[0]][n].max(chan.g_ue_relay[u][others[1]][n]);
                assert_eq!(chan.g_ref_hop1[u][n], m);
            }
        }
    }

    #[test]
    fn single_relay_has_no_victims() {
        let p = SimParams { n_relays: 1, ..SimParams::default() };
        let s = generate_scenario(&p, 2, 2, 1).unwrap();
        let chan = draw_channel(&s, &p, 1).unwrap();
        assert!(chan.hop1_caps_inactive && chan.hop2_caps_inactive);
        assert!(chan.g_ref_hop1.iter().flatten().all(|&g| g == 0.0));
        assert!(chan.g_ref_hop2.iter().flatten().all(|&g| g == 0.0));
    }
}
