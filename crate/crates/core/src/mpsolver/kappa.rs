//! Minimum number of RBs a UE needs to meet its rate requirement.
//!
//! `kappa = ceil(Q / r_min)`, where `r_min` is the expected rate a UE draws
//! from one RB when it competes with `|U_l| - 1` others and wins the RB only
//! if its fading draw is the strongest:
//!
//! `r_min = 0.5 * B * E[log2(1 + P * g * G_u) * 1{G_u >= max_j G_j}]`
//!
//! with `G ~ Exp(1)` i.i.d., `P = P_ue^max / N` and `g` the UE's mean unit
//! SINR over RBs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Estimates the expected per-RB rate of a UE facing contention.
pub trait MinRateEstimator: Send + Sync {
    fn min_rate_bps(&self, mean_unit_sinr: f64, n_contenders: usize, power_w: f64, rb_bandwidth_hz: f64) -> f64;
}

/// Monte-Carlo estimate with common random numbers across calls.
#[derive(Debug, Clone)]
pub struct MonteCarloMinRate {
    pub draws: usize,
    pub seed: u64,
}

impl MonteCarloMinRate {
    pub fn new(draws: usize, seed: u64) -> Self {
        Self { draws, seed }
    }
}

impl MinRateEstimator for MonteCarloMinRate {
    fn min_rate_bps(&self, mean_unit_sinr: f64, n_contenders: usize, power_w: f64, rb_bandwidth_hz: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let others = n_contenders.saturating_sub(1) as f64;
        let snr = power_w * mean_unit_sinr;
        let mut acc = 0.0;
        for _ in 0..self.draws {
            let own: f64 = Exp1.sample(&mut rng);
            // The max of `others` unit exponentials has CDF (1 - e^-x)^others.
            let v: f64 = rng.random();
            let best_other = if others > 0.0 { -(-v.powf(1.0 / others)).ln_1p() } else { 0.0 };
            if own >= best_other {
                acc += (snr * own).ln_1p() / std::f64::consts::LN_2;
            }
        }
        0.5 * rb_bandwidth_hz * acc / self.draws as f64
    }
}

/// Numerical integration of the same expectation:
/// `int_0^inf log2(1 + s x) (1 - e^-x)^(K-1) e^-x dx`.
#[derive(Debug, Clone)]
pub struct QuadratureMinRate {
    pub upper: f64,
    pub intervals: usize,
}

impl Default for QuadratureMinRate {
    fn default() -> Self {
        Self { upper: 60.0, intervals: 6000 }
    }
}

impl MinRateEstimator for QuadratureMinRate {
    fn min_rate_bps(&self, mean_unit_sinr: f64, n_contenders: usize, power_w: f64, rb_bandwidth_hz: f64) -> f64 {
        let snr = power_w * mean_unit_sinr;
        let others = n_contenders.saturating_sub(1) as i32;
        let f = |x: f64| (snr * x).ln_1p() / std::f64::consts::LN_2 * (-(-x).exp_m1()).powi(others) * (-x).exp();
        // composite Simpson
        let m = self.intervals + self.intervals % 2;
        let h = self.upper / m as f64;
        let mut s = f(0.0) + f(self.upper);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        0.5 * rb_bandwidth_hz * s * h / 3.0
    }
}

/// Fixed estimate, for tests and hand-built instances.
#[derive(Debug, Clone, Copy)]
pub struct FixedMinRate(pub f64);

impl MinRateEstimator for FixedMinRate {
    fn min_rate_bps(&self, _: f64, _: usize, _: f64, _: f64) -> f64 {
        self.0
    }
}

/// `ceil(q / r_min)` clamped to `[0, n_rbs]`.
pub fn required_rb_count(q_bps: f64, r_min_bps: f64, n_rbs: usize) -> Result<usize> {
    if q_bps <= 0.0 {
        return Ok(0);
    }
    if !(r_min_bps > 0.0) {
        return Err(Error::ZeroRateFloor { q_bps });
    }
    let k = (q_bps / r_min_bps).ceil();
    Ok(if k >= n_rbs as f64 { n_rbs } else { k as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_examples() {
        assert_eq!(required_rb_count(0.0, 1e5, 13).unwrap(), 0);
        assert_eq!(required_rb_count(1e5, 1e5, 13).unwrap(), 1);
        assert_eq!(required_rb_count(2.5e5, 1e5, 13).unwrap(), 3);
        assert_eq!(required_rb_count(1e9, 1e5, 13).unwrap(), 13);
        assert!(required_rb_count(1.0, 0.0, 13).is_err());
    }

    #[test]
    fn lone_ue_gets_the_full_expectation() {
        // One contender: E[log2(1 + s G)] with G ~ Exp(1); at s -> 0 this is s / ln 2.
        let q = QuadratureMinRate::default();
        let r = q.min_rate_bps(1e-6, 1, 1.0, 2.0);
        assert!((r / (1e-6 / std::f64::consts::LN_2) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn contention_scales_low_snr_rate() {
        // At low SNR the integrand is linear, so the winner's expected share
        // is E[G 1{G is max of K}] = H_K / K (harmonic number over K).
        let q = QuadratureMinRate::default();
        let base = q.min_rate_bps(1e-6, 1, 1.0, 2.0);
        let k4 = q.min_rate_bps(1e-6, 4, 1.0, 2.0);
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((k4 / base - h4 / 4.0).abs() < 1e-4);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let mc = MonteCarloMinRate::new(200_000, 11);
        let q = QuadratureMinRate::default();
        for (s, k) in [(1e2, 1), (1e3, 6), (5e4, 8), (10.0, 3)] {
            let a = mc.min_rate_bps(s, k, 1.0, 180e3);
            let b = q.min_rate_bps(s, k, 1.0, 180e3);
            assert!((a / b - 1.0).abs() < 0.02, "snr {s} k {k}: mc {a} quad {b}");
        }
    }

    #[test]
    fn more_contenders_less_rate() {
        let q = QuadratureMinRate::default();
        let rates: Vec<f64> = (1..10).map(|k| q.min_rate_bps(1e3, k, 1.0, 180e3)).collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
    }
}
