//! Rate statistics, rate gain, end-to-end delay and empirical CCDF.

use crate::error::{Error, Result};
use crate::params::{SimParams, SPEED_OF_LIGHT_M_S};

pub fn avg_rate_bps(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::Empty("avg_rate_bps"));
    }
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// `(r_prop - r_ref) / r_ref * 100`; `None` when the reference rate is zero.
pub fn rate_gain_pct(r_prop: f64, r_ref: f64) -> Option<f64> {
    (r_ref > 0.0).then(|| (r_prop - r_ref) / r_ref * 100.0)
}

fn delivery_ms(bits: f64, rate_bps: f64, dist_m: f64) -> f64 {
    (bits / rate_bps + dist_m / SPEED_OF_LIGHT_M_S) * 1e3
}

/// Schedule, first-hop delivery, decode at the relay, second-hop delivery.
/// Infinite when either hop carries no rate.
pub fn delay_two_hop_ms(rate1_bps: f64, rate2_bps: f64, dist1_m: f64, dist2_m: f64, params: &SimParams) -> f64 {
    if !(rate1_bps > 0.0 && rate2_bps > 0.0) {
        return f64::INFINITY;
    }
    let bits = params.packet_bits();
    params.schedule_time_ms
        + delivery_ms(bits, rate1_bps, dist1_m)
        + params.decode_time_ms
        + delivery_ms(bits, rate2_bps, dist2_m)
}

/// Schedule plus one delivery. Infinite at zero rate.
pub fn delay_one_hop_ms(rate_bps: f64, dist_m: f64, params: &SimParams) -> f64 {
    if !(rate_bps > 0.0) {
        return f64::INFINITY;
    }
    params.schedule_time_ms + delivery_ms(params.packet_bits(), rate_bps, dist_m)
}

/// Fraction of samples strictly above each grid point.
pub fn ccdf(samples: &[f64], t_grid: &[f64]) -> Vec<(f64, f64)> {
    if samples.is_empty() {
        return t_grid.iter().map(|&t| (t, 0.0)).collect();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            let at_or_below = sorted.partition_point(|&s| s <= t);
            (t, (sorted.len() - at_or_below) as f64 / n)
        })
        .collect()
}

pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn averages() {
        assert_eq!(avg_rate_bps(&[2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(avg_rate_bps(&[7.0]).unwrap(), 7.0);
        assert_eq!(avg_rate_bps(&[1.25e5; 24]).unwrap(), 1.25e5);
        assert!(avg_rate_bps(&[]).is_err());
    }

    #[test]
    fn gains() {
        assert_eq!(rate_gain_pct(2.0, 1.0), Some(100.0));
        assert_eq!(rate_gain_pct(1.0, 1.0), Some(0.0));
        assert_eq!(rate_gain_pct(1.0, 2.0), Some(-50.0));
        assert_eq!(rate_gain_pct(1.0, 0.0), None);
    }

    #[test]
    fn delays() {
        let p = SimParams::default();
        let instant = delay_two_hop_ms(f64::MAX, f64::MAX, 0.0, 0.0, &p);
        assert!((instant - 0.273).abs() < 1e-12);
        // 12,000 bits at 120 Mbps is 0.1 ms; 100 m at c is 1/3 microsecond
        let d = delay_two_hop_ms(120e6, 120e6, 100.0, 100.0, &p);
        assert!((d - (0.273 + 2.0 * (0.1 + 100.0 / 3e8 * 1e3))).abs() < 1e-12);
        assert!((d - 0.4737).abs() < 1e-4);
        assert!(delay_two_hop_ms(0.0, 1e6, 1.0, 1.0, &p).is_infinite());
        assert!(delay_one_hop_ms(0.0, 1.0, &p).is_infinite());
        // equal deliveries: difference is decode plus the second delivery
        let two = delay_two_hop_ms(1e6, 1e6, 50.0, 50.0, &p);
        let one = delay_one_hop_ms(1e6, 50.0, &p);
        let second = 12_000.0 / 1e6 * 1e3 + 50.0 / 3e8 * 1e3;
        assert!((two - one - (0.173 + second)).abs() < 1e-12);
    }

    #[test]
    fn ccdf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(ccdf(&s, &[0.0]), vec![(0.0, 1.0)]);
        assert_eq!(ccdf(&s, &[2.0]), vec![(2.0, 1.0 / 3.0)]);
        assert_eq!(ccdf(&s, &[3.5]), vec![(3.5, 0.0)]);
        assert_eq!(ccdf(&s, &[3.0]), vec![(3.0, 0.0)]);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    proptest! {
        #[test]
        fn ccdf_is_monotone(samples in prop::collection::vec(0f64..10.0, 1..50),
                            mut grid in prop::collection::vec(-1f64..11.0, 1..30)) {
            grid.sort_by(f64::total_cmp);
            let c = ccdf(&samples, &grid);
            prop_assert!(c.windows(2).all(|w| w[1].1 <= w[0].1));
            prop_assert!(c.iter().all(|&(_, f)| (0.0..=1.0).contains(&f)));
            let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(ccdf(&samples, &[lo - 1.0])[0].1, 1.0);
            prop_assert_eq!(ccdf(&samples, &[hi])[0].1, 0.0);
        }
    }
}
