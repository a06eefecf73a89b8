//! Simulation parameters. Defaults reproduce the reference deployment:
//! a 2.5 MHz carrier split into 13 LTE resource blocks, three relays at
//! 125 m from the eNB, 23 dBm UEs, 30 dBm relays, and -70 dBm interference
//! thresholds on both hops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light used for propagation delay, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 3.0e8;

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Every tunable of a simulation run.
///
/// Field names double as keys in the flat `key = value` experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Number of resource blocks per relay cell.
    pub n_rbs: usize,
    pub rb_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    /// Total transmit power available at each relay.
    pub relay_power_dbm: f64,
    /// Total transmit power available at each UE.
    pub ue_power_dbm: f64,
    pub cue_rate_req_bps: f64,
    pub d2d_rate_req_bps: f64,
    pub shadow_sigma_relay_enb_db: f64,
    pub shadow_sigma_ue_relay_db: f64,
    pub interference_threshold_hop1_dbm: f64,
    pub interference_threshold_hop2_dbm: f64,
    /// Message damping weight, in (0, 1]. 1 means undamped.
    pub omega: f64,
    /// Convergence tolerance on the per-relay aggregate rate, bps.
    pub epsilon: f64,
    pub t_max: usize,
    /// Fallback power used when the rate-tracking step overshoots its cap.
    pub p_tilde_dbm: f64,
    pub n_relays: usize,
    pub cell_side_m: f64,
    pub relay_cell_radius_m: f64,
    pub enb_relay_distance_m: f64,
    pub min_ue_relay_distance_m: f64,
    /// Radius around the relay within which D2D endpoints are dropped.
    pub d_rd_m: f64,
    /// Separation between the two endpoints of a D2D pair.
    pub d_dd_m: f64,
    pub schedule_time_ms: f64,
    pub decode_time_ms: f64,
    pub packet_size_bytes: usize,
    /// Monte-Carlo draws for the per-RB minimum rate estimate.
    pub rate_floor_draws: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_rbs: 13,
            rb_bandwidth_hz: 180e3,
            noise_psd_dbm_hz: -174.0,
            relay_power_dbm: 30.0,
            ue_power_dbm: 23.0,
            cue_rate_req_bps: 128e3,
            d2d_rate_req_bps: 256e3,
            shadow_sigma_relay_enb_db: 6.0,
            shadow_sigma_ue_relay_db: 10.0,
            interference_threshold_hop1_dbm: -70.0,
            interference_threshold_hop2_dbm: -70.0,
            omega: 1.0,
            epsilon: 1.0,
            t_max: 200,
            p_tilde_dbm: 0.0,
            n_relays: 3,
            cell_side_m: 700.0,
            relay_cell_radius_m: 200.0,
            enb_relay_distance_m: 125.0,
            min_ue_relay_distance_m: 10.0,
            d_rd_m: 80.0,
            d_dd_m: 140.0,
            schedule_time_ms: 0.10,
            decode_time_ms: 0.173,
            packet_size_bytes: 1500,
            rate_floor_draws: 10_000,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rbs == 0 {
            return Err(invalid("n_rbs", "must be at least 1"));
        }
        if self.n_relays == 0 {
            return Err(invalid("n_relays", "must be at least 1"));
        }
        let finite = [
            ("rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("relay_power_dbm", self.relay_power_dbm),
            ("ue_power_dbm", self.ue_power_dbm),
            ("p_tilde_dbm", self.p_tilde_dbm),
            ("interference_threshold_hop1_dbm", self.interference_threshold_hop1_dbm),
            ("interference_threshold_hop2_dbm", self.interference_threshold_hop2_dbm),
            ("cue_rate_req_bps", self.cue_rate_req_bps),
            ("d2d_rate_req_bps", self.d2d_rate_req_bps),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.rb_bandwidth_hz <= 0.0 {
            return Err(invalid("rb_bandwidth_hz", "must be positive"));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(invalid("omega", format!("must lie in (0, 1], got {}", self.omega)));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if self.t_max == 0 {
            return Err(invalid("t_max", "must be at least 1"));
        }
        if self.cue_rate_req_bps < 0.0 || self.d2d_rate_req_bps < 0.0 {
            return Err(invalid("rate requirement", "must be nonnegative"));
        }
        if !(self.d_dd_m >= 0.0) {
            return Err(invalid("d_dd_m", "must be nonnegative"));
        }
        if !(self.min_ue_relay_distance_m > 0.0) {
            return Err(invalid("min_ue_relay_distance_m", "must be positive"));
        }
        if !(self.d_rd_m > 0.0 && self.relay_cell_radius_m > 0.0 && self.cell_side_m > 0.0) {
            return Err(invalid("geometry", "radii and cell side must be positive"));
        }
        if self.shadow_sigma_relay_enb_db < 0.0 || self.shadow_sigma_ue_relay_db < 0.0 {
            return Err(invalid("shadow sigma", "must be nonnegative"));
        }
        if self.rate_floor_draws == 0 {
            return Err(invalid("rate_floor_draws", "must be at least 1"));
        }
        Ok(())
    }

    /// Thermal noise per RB, watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_w(self.noise_psd_dbm_hz) * self.rb_bandwidth_hz
    }

    pub fn ue_power_max_w(&self) -> f64 {
        dbm_to_w(self.ue_power_dbm)
    }

    pub fn relay_power_max_w(&self) -> f64 {
        dbm_to_w(self.relay_power_dbm)
    }

    pub fn p_tilde_w(&self) -> f64 {
        dbm_to_w(self.p_tilde_dbm)
    }

    pub fn i_th1_w(&self) -> f64 {
        dbm_to_w(self.interference_threshold_hop1_dbm)
    }

    pub fn i_th2_w(&self) -> f64 {
        dbm_to_w(self.interference_threshold_hop2_dbm)
    }

    pub fn packet_bits(&self) -> f64 {
        self.packet_size_bytes as f64 * 8.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimParams::default().validate().unwrap();
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_w(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_w(0.0) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_w(23.0) - 0.199_526_231_496_888).abs() < 1e-12);
        assert!((w_to_dbm(dbm_to_w(-70.0)) + 70.0).abs() < 1e-9);
    }

    #[test]
    fn noise_power_per_rb() {
        // -174 dBm/Hz over 180 kHz
        let p = SimParams::default();
        let expected = 10f64.powf(-20.4) * 180e3;
        assert!((p.noise_power_w() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn rejects_bad_omega() {
        for omega in [0.0, -0.5, 1.5, f64::NAN] {
            let p = SimParams {
                omega,
                ..SimParams::default()
            };
            assert!(p.validate().is_err(), "omega {omega}");
        }
    }

    #[test]
    fn rejects_zero_rbs_and_bad_distances() {
        let p = SimParams {
            n_rbs: 0,
            ..SimParams::default()
        };
        assert!(p.validate().is_err());
        let p = SimParams {
            min_ue_relay_distance_m: 0.0,
            ..SimParams::default()
        };
        assert!(p.validate().is_err());
        let p = SimParams {
            d_dd_m: -1.0,
            ..SimParams::default()
        };
        assert!(p.validate().is_err());
    }
}
