//! Network snapshots: eNB, relays, cellular UEs (CUEs) and D2D pairs.
//!
//! UEs are indexed globally. CUEs come first (relay-major), followed by D2D
//! pairs; a D2D pair counts as one UE whose transmitter talks to the relay
//! and whose receiver is served on the second hop.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimParams;

/// Attempts per node before placement gives up.
pub const PLACEMENT_BUDGET: usize = 10_000;

/// Relative tolerance on the D2D pair separation.
const SEPARATION_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn offset(&self, r: f64, angle: f64) -> Point {
        Point::new(self.x + r * angle.cos(), self.y + r * angle.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UeKind {
    Cellular,
    D2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    pub position: Point,
    pub relay: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dPair {
    pub tx: Point,
    pub rx: Point,
    pub relay: usize,
}

/// One network snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub enb_position: Point,
    pub relays: Vec<Point>,
    pub cues: Vec<Cue>,
    pub d2d_pairs: Vec<D2dPair>,
    /// Global UE ids served by each relay.
    pub association: Vec<Vec<usize>>,
}

impl NetworkScenario {
    pub fn n_ues(&self) -> usize {
        self.cues.len() + self.d2d_pairs.len()
    }

    pub fn n_relays(&self) -> usize {
        self.relays.len()
    }

    pub fn ue_kind(&self, ue: usize) -> UeKind {
        if ue < self.cues.len() {
            UeKind::Cellular
        } else {
            UeKind::D2d
        }
    }

    /// Relay that owns `ue`, as recorded on the UE itself.
    pub fn ue_relay(&self, ue: usize) -> usize {
        match self.d2d_index(ue) {
            None => self.cues[ue].relay,
            Some(d) => self.d2d_pairs[d].relay,
        }
    }

    /// Index into `d2d_pairs` for a D2D UE.
    pub fn d2d_index(&self, ue: usize) -> Option<usize> {
        ue.checked_sub(self.cues.len())
    }

    pub fn d2d_ue(&self, pair: usize) -> usize {
        self.cues.len() + pair
    }

    /// Position of the UE's transmitter (the CUE itself or the D2D tx).
    pub fn tx_position(&self, ue: usize) -> Point {
        match self.d2d_index(ue) {
            None => self.cues[ue].position,
            Some(d) => self.d2d_pairs[d].tx,
        }
    }

    pub fn d2d_rx_position(&self, ue: usize) -> Option<Point> {
        self.d2d_index(ue).map(|d| self.d2d_pairs[d].rx)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn uniform_in_annulus<R: Rng>(rng: &mut R, center: Point, r_min: f64, r_max: f64) -> Point {
    let u: f64 = rng.random();
    let r = (u * (r_max * r_max - r_min * r_min) + r_min * r_min).sqrt();
    let theta = rng.random::<f64>() * 2.0 * PI;
    center.offset(r, theta)
}

fn inside_square(p: &Point, center: &Point, side: f64) -> bool {
    let half = side / 2.0;
    (p.x - center.x).abs() <= half && (p.y - center.y).abs() <= half
}

/// Drops relays, CUEs and D2D pairs for one snapshot.
///
/// Relays sit on a circle of radius `enb_relay_distance_m` at equal angular
/// spacing starting from angle 0. CUEs are uniform in their relay's cell,
/// D2D transmitters uniform within `d_rd_m` of the relay and receivers at
/// exactly `d_dd_m` from the transmitter in a uniformly random direction,
/// resampled until both endpoints satisfy the geometry constraints.
pub fn generate_scenario(
    params: &SimParams,
    n_cues: usize,
    n_d2d_pairs: usize,
    rng_seed: u64,
) -> Result<NetworkScenario> {
    params.validate()?;
    let n_relays = params.n_relays;
    if n_cues % n_relays != 0 {
        return Err(Error::UnevenSplit {
            what: "CUEs",
            count: n_cues,
            relays: n_relays,
        });
    }
    if n_d2d_pairs % n_relays != 0 {
        return Err(Error::UnevenSplit {
            what: "D2D pairs",
            count: n_d2d_pairs,
            relays: n_relays,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let enb = Point::new(0.0, 0.0);
    let relays: Vec<Point> = (0..n_relays)
        .map(|l| enb.offset(params.enb_relay_distance_m, 2.0 * PI * l as f64 / n_relays as f64))
        .collect();

    let min_d = params.min_ue_relay_distance_m;
    let mut cues = Vec::with_capacity(n_cues);
    for (l, relay) in relays.iter().enumerate() {
        for i in 0..n_cues / n_relays {
            let position = (0..PLACEMENT_BUDGET)
                .map(|_| uniform_in_annulus(&mut rng, *relay, min_d, params.relay_cell_radius_m))
                .find(|p| inside_square(p, &enb, params.cell_side_m))
                .ok_or_else(|| Error::PlacementFailed {
                    node: format!("CUE {i} of relay {l}"),
                    attempts: PLACEMENT_BUDGET,
                })?;
            cues.push(Cue { position, relay: l });
        }
    }

    let mut d2d_pairs = Vec::with_capacity(n_d2d_pairs);
    for (l, relay) in relays.iter().enumerate() {
        for i in 0..n_d2d_pairs / n_relays {
            let mut placed = None;
            if params.d_rd_m >= min_d {
                for _ in 0..PLACEMENT_BUDGET {
                    let tx = uniform_in_annulus(&mut rng, *relay, min_d, params.d_rd_m);
                    let theta = rng.random::<f64>() * 2.0 * PI;
                    let rx = tx.offset(params.d_dd_m, theta);
                    let rx_d = rx.distance(relay);
                    if rx_d <= params.d_rd_m
                        && rx_d >= min_d
                        && inside_square(&tx, &enb, params.cell_side_m)
                        && inside_square(&rx, &enb, params.cell_side_m)
                    {
                        placed = Some(D2dPair { tx, rx, relay: l });
                        break;
                    }
                }
            }
            let pair = placed.ok_or_else(|| Error::PlacementFailed {
                node: format!("D2D pair {i} of relay {l} (d_rd={} m, d_dd={} m)", params.d_rd_m, params.d_dd_m),
                attempts: PLACEMENT_BUDGET,
            })?;
            d2d_pairs.push(pair);
        }
    }

    let mut association = vec![Vec::new(); n_relays];
    for (u, cue) in cues.iter().enumerate() {
        association[cue.relay].push(u);
    }
    for (d, pair) in d2d_pairs.iter().enumerate() {
        association[pair.relay].push(n_cues + d);
    }

    Ok(NetworkScenario {
        enb_position: enb,
        relays,
        cues,
        d2d_pairs,
        association,
    })
}

/// A broken scenario invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UeNotAssociated { ue: usize },
    UeMultiplyAssociated { ue: usize, count: usize },
    UnknownUe { relay: usize, ue: usize },
    OwnerMismatch { ue: usize, listed: usize, owner: usize },
    D2dSeparation { pair: usize, actual_m: f64, expected_m: f64 },
    D2dOutsideRadius { pair: usize, endpoint: &'static str, distance_m: f64, radius_m: f64 },
    TooCloseToRelay { ue: usize, endpoint: &'static str, distance_m: f64, min_m: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UeNotAssociated { ue } => write!(f, "UE {ue} belongs to no relay"),
            Violation::UeMultiplyAssociated { ue, count } => {
                write!(f, "UE {ue} listed under {count} relays")
            }
            Violation::UnknownUe { relay, ue } => write!(f, "relay {relay} lists unknown UE {ue}"),
            Violation::OwnerMismatch { ue, listed, owner } => {
                write!(f, "UE {ue} listed under relay {listed} but owned by relay {owner}")
            }
            Violation::D2dSeparation { pair, actual_m, expected_m } => {
                write!(f, "D2D pair {pair} separation {actual_m} m, expected {expected_m} m")
            }
            Violation::D2dOutsideRadius { pair, endpoint, distance_m, radius_m } => write!(
                f,
                "D2D pair {pair} {endpoint} is {distance_m} m from its relay (radius {radius_m} m)"
            ),
            Violation::TooCloseToRelay { ue, endpoint, distance_m, min_m } => write!(
                f,
                "UE {ue} {endpoint} is {distance_m} m from its relay (minimum {min_m} m)"
            ),
        }
    }
}

/// Checks every scenario invariant; an empty list means the scenario is valid.
pub fn validate_scenario(s: &NetworkScenario, params: &SimParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = s.n_ues();
    let mut seen = vec![0usize; n];
    for (l, members) in s.association.iter().enumerate() {
        for &ue in members {
            if ue >= n {
                out.push(Violation::UnknownUe { relay: l, ue });
                continue;
            }
            seen[ue] += 1;
            let owner = s.ue_relay(ue);
            if owner != l {
                out.push(Violation::OwnerMismatch { ue, listed: l, owner });
            }
        }
    }
    for (ue, &count) in seen.iter().enumerate() {
        match count {
            0 => out.push(Violation::UeNotAssociated { ue }),
            1 => {}
            _ => out.push(Violation::UeMultiplyAssociated { ue, count }),
        }
    }

    let min_d = params.min_ue_relay_distance_m;
    let radius_tol = 1e-9 * params.d_rd_m.max(1.0);
    for (u, cue) in s.cues.iter().enumerate() {
        let Some(relay) = s.relays.get(cue.relay) else { continue };
        let d = cue.position.distance(relay);
        if d < min_d {
            out.push(Violation::TooCloseToRelay { ue: u, endpoint: "position", distance_m: d, min_m: min_d });
        }
    }
    for (p, pair) in s.d2d_pairs.iter().enumerate() {
        let ue = s.d2d_ue(p);
        let sep = pair.tx.distance(&pair.rx);
        let scale = params.d_dd_m.abs().max(f64::MIN_POSITIVE);
        let off = if params.d_dd_m > 0.0 {
            (sep - params.d_dd_m).abs() / scale
        } else {
            sep
        };
        if off > SEPARATION_RTOL {
            out.push(Violation::D2dSeparation { pair: p, actual_m: sep, expected_m: params.d_dd_m });
        }
        let Some(relay) = s.relays.get(pair.relay) else { continue };
        for (endpoint, pos) in [("tx", pair.tx), ("rx", pair.rx)] {
            let d = pos.distance(relay);
            if d > params.d_rd_m + radius_tol {
                out.push(Violation::D2dOutsideRadius { pair: p, endpoint, distance_m: d, radius_m: params.d_rd_m });
            }
            if d < min_d {
                out.push(Violation::TooCloseToRelay { ue, endpoint, distance_m: d, min_m: min_d });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> SimParams {
        SimParams::default()
    }

    #[test]
    fn default_layout_has_eight_ues_per_relay() {
        let s = generate_scenario(&table3(), 15, 9, 1).unwrap();
        assert_eq!(s.n_relays(), 3);
        for members in &s.association {
            assert_eq!(members.len(), 8);
            let d2d = members.iter().filter(|&&u| s.ue_kind(u) == UeKind::D2d).count();
            assert_eq!(d2d, 3);
        }
        assert!(validate_scenario(&s, &table3()).is_empty());
    }

    #[test]
    fn d2d_only_layout() {
        let s = generate_scenario(&table3(), 0, 3, 7).unwrap();
        for members in &s.association {
            assert_eq!(members.len(), 1);
        }
        assert!(validate_scenario(&s, &table3()).is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_scenario(&table3(), 15, 9, 42).unwrap();
        let b = generate_scenario(&table3(), 15, 9, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = generate_scenario(&table3(), 15, 9, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn relays_at_120_degrees() {
        let s = generate_scenario(&table3(), 3, 3, 0).unwrap();
        for (l, r) in s.relays.iter().enumerate() {
            assert!((r.distance(&s.enb_position) - 125.0).abs() < 1e-9);
            let angle = r.y.atan2(r.x).rem_euclid(2.0 * PI);
            let expected = 2.0 * PI * l as f64 / 3.0;
            assert!((angle - expected).abs() < 1e-9, "relay {l} at {angle}");
        }
    }

    #[test]
    fn uneven_split_rejected() {
        assert!(matches!(
            generate_scenario(&table3(), 14, 9, 1),
            Err(Error::UnevenSplit { .. })
        ));
        assert!(matches!(
            generate_scenario(&table3(), 15, 10, 1),
            Err(Error::UnevenSplit { .. })
        ));
    }

    #[test]
    fn infeasible_separation_errors() {
        let p = SimParams {
            d_rd_m: 60.0,
            d_dd_m: 2.0 * 60.0 + 200.0 + 1.0,
            ..table3()
        };
        assert!(matches!(
            generate_scenario(&p, 0, 3, 1),
            Err(Error::PlacementFailed { .. })
        ));
    }

    #[test]
    fn ue_too_close_is_one_violation() {
        let p = table3();
        let mut s = generate_scenario(&p, 3, 3, 5).unwrap();
        let relay = s.relays[s.cues[0].relay];
        s.cues[0].position = Point::new(relay.x + 5.0, relay.y);
        let v = validate_scenario(&s, &p);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::TooCloseToRelay { ue: 0, .. }));
    }

    #[test]
    fn shortened_pair_is_one_violation() {
        let p = table3();
        let mut s = generate_scenario(&p, 0, 3, 11).unwrap();
        // pull rx 0.1 m toward tx: separation 139.9 m, both endpoints stay in the disk
        let pair = &mut s.d2d_pairs[0];
        let (dx, dy) = (pair.rx.x - pair.tx.x, pair.rx.y - pair.tx.y);
        let scale = 139.9 / 140.0;
        pair.rx = Point::new(pair.tx.x + dx * scale, pair.tx.y + dy * scale);
        let v = validate_scenario(&s, &p);
        assert_eq!(v.len(), 1, "{v:?}");
        match v[0] {
            Violation::D2dSeparation { actual_m, .. } => assert!((actual_m - 139.9).abs() < 1e-9),
            ref other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn association_breaks_detected() {
        let p = table3();
        let mut s = generate_scenario(&p, 3, 3, 2).unwrap();
        let moved = s.association[0].pop().unwrap();
        s.association[1].push(moved);
        let v = validate_scenario(&s, &p);
        assert!(v.iter().any(|x| matches!(x, Violation::OwnerMismatch { .. })));
        s.association[1].pop();
        let v = validate_scenario(&s, &p);
        assert!(v.iter().any(|x| matches!(x, Violation::UeNotAssociated { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let s = generate_scenario(&table3(), 6, 3, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        s.save_json(&path).unwrap();
        assert_eq!(NetworkScenario::load_json(&path).unwrap(), s);
    }
}
