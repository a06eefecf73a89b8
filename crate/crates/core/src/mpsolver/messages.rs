//! Normalized max-sum messages for one relay's factor graph.
//!
//! A UE-to-RB message `psi[n]` is the log-likelihood difference, seen from
//! the UE's utility node, between taking and leaving RB `n`. An RB-to-UE
//! message `psi_tilde[u]` is the same difference seen from the RB's
//! exclusivity node. Their sum `tau` decides the assignment.

/// Work done while building UE-to-RB messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SortWork {
    pub sorts: usize,
    pub sorted_elements: usize,
    pub longest: usize,
}

/// `kappa`-th largest of `values` (1-based). Past the end, the smallest
/// entry; with no values at all, zero.
pub fn kth_largest(values: &mut [f64], kappa: usize) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    let k = kappa.max(1).min(values.len());
    values[k - 1]
}

/// UE-to-RB messages for one UE.
///
/// For each RB `n`, the competitors are `chi_j = rates[j] + psi_tilde[j]`
/// over `j != n`; the message is
/// `rates[n] - omega * <chi>_kappa + (1 - omega) * (rates[n] + psi_tilde[n])`.
pub fn ue_to_rb_messages(
    rates: &[f64],
    psi_tilde: &[f64],
    kappa: usize,
    omega: f64,
    work: &mut SortWork,
) -> Vec<f64> {
    let n_rbs = rates.len();
    let chi: Vec<f64> = rates.iter().zip(psi_tilde).map(|(r, t)| r + t).collect();
    let mut scratch = Vec::with_capacity(n_rbs.saturating_sub(1));
    (0..n_rbs)
        .map(|n| {
            scratch.clear();
            scratch.extend(chi.iter().enumerate().filter(|&(j, _)| j != n).map(|(_, &c)| c));
            if !scratch.is_empty() {
                work.sorts += 1;
                work.sorted_elements += scratch.len();
                work.longest = work.longest.max(scratch.len());
            }
            let kth = kth_largest(&mut scratch, kappa);
            rates[n] - omega * kth + (1.0 - omega) * (rates[n] + psi_tilde[n])
        })
        .collect()
}

/// Undamped UE-to-RB message, kept separate so the damped form can be
/// checked against it.
pub fn ue_to_rb_messages_undamped(rates: &[f64], psi_tilde: &[f64], kappa: usize) -> Vec<f64> {
    let n_rbs = rates.len();
    (0..n_rbs)
        .map(|n| {
            let mut others: Vec<f64> = (0..n_rbs).filter(|&j| j != n).map(|j| rates[j] + psi_tilde[j]).collect();
            rates[n] - kth_largest(&mut others, kappa)
        })
        .collect()
}

/// RB-to-UE messages for one RB: `-omega * max_{i != u} psi[i] - (1 - omega) * psi[u]`.
/// A UE without competitors receives zero from the max term.
pub fn rb_to_ue_messages(psi_column: &[f64], omega: f64) -> Vec<f64> {
    let (best, best_at, second) = top_two(psi_column);
    psi_column
        .iter()
        .enumerate()
        .map(|(u, &own)| {
            let competitor = if Some(u) == best_at { second } else { best };
            -omega * competitor.unwrap_or(0.0) - (1.0 - omega) * own
        })
        .collect()
}

pub fn rb_to_ue_messages_undamped(psi_column: &[f64]) -> Vec<f64> {
    (0..psi_column.len())
        .map(|u| {
            let m = psi_column
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != u)
                .map(|(_, &v)| v)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            -m.unwrap_or(0.0)
        })
        .collect()
}

fn top_two(values: &[f64]) -> (Option<f64>, Option<usize>, Option<f64>) {
    let mut best: Option<(f64, usize)> = None;
    let mut second: Option<f64> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            None => best = Some((v, i)),
            Some((b, _)) if v > b => {
                second = Some(b);
                best = Some((v, i));
            }
            Some(_) => second = Some(second.map_or(v, |s| s.max(v))),
        }
    }
    (best.map(|b| b.0), best.map(|b| b.1), second)
}

/// Assigns RB `n` to member `u` when `tau[u][n] >= 0`; if several members
/// qualify on one RB, the largest `tau` keeps it (lowest index on ties).
pub fn decide_allocation(tau: &[Vec<f64>]) -> Vec<Vec<bool>> {
    let k = tau.len();
    let n_rbs = tau.first().map_or(0, Vec::len);
    let mut x = vec![vec![false; n_rbs]; k];
    for n in 0..n_rbs {
        let mut winner: Option<usize> = None;
        for u in 0..k {
            if tau[u][n] >= 0.0 && winner.is_none_or(|w| tau[u][n] > tau[w][n]) {
                winner = Some(u);
            }
        }
        if let Some(u) = winner {
            x[u][n] = true;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_rb_worked_example() {
        let mut w = SortWork::default();
        let psi = ue_to_rb_messages(&[3.0, 1.0], &[0.0, 0.0], 1, 1.0, &mut w);
        assert_eq!(psi, vec![2.0, -2.0]);
        let tilde = rb_to_ue_messages(&psi, 1.0);
        assert_eq!(tilde, vec![2.0, -2.0]);
        // the same numbers read as one UE's tau row
        assert_eq!(decide_allocation(&[vec![4.0, -4.0]]), vec![vec![true, false]]);
    }

    #[test]
    fn symmetric_rates_give_zero_messages() {
        let mut w = SortWork::default();
        let psi = ue_to_rb_messages(&[5.0, 5.0, 5.0], &[0.0; 3], 1, 1.0, &mut w);
        assert_eq!(psi, vec![0.0; 3]);
        assert_eq!(w, SortWork { sorts: 3, sorted_elements: 6, longest: 2 });
    }

    #[test]
    fn rb_messages_edge_cases() {
        assert_eq!(rb_to_ue_messages(&[7.5], 1.0), vec![0.0]);
        assert_eq!(rb_to_ue_messages(&[1.0, 1.0, 1.0], 1.0), vec![-1.0; 3]);
        assert_eq!(rb_to_ue_messages(&[1.0, 4.0, 2.0], 1.0), vec![-4.0, -2.0, -4.0]);
    }

    #[test]
    fn kth_largest_conventions() {
        assert_eq!(kth_largest(&mut [1.0, 5.0, 3.0], 0), 5.0);
        assert_eq!(kth_largest(&mut [1.0, 5.0, 3.0], 2), 3.0);
        assert_eq!(kth_largest(&mut [1.0, 5.0, 3.0], 9), 1.0);
        assert_eq!(kth_largest(&mut [], 1), 0.0);
    }

    #[test]
    fn decisions() {
        assert_eq!(decide_allocation(&[vec![-1.0, -0.5]]), vec![vec![false, false]]);
        let x = decide_allocation(&[vec![3.0], vec![5.0]]);
        assert_eq!(x, vec![vec![false], vec![true]]);
        let x = decide_allocation(&[vec![2.0], vec![2.0]]);
        assert_eq!(x, vec![vec![true], vec![false]]);
        assert_eq!(decide_allocation(&[vec![0.0]]), vec![vec![true]]);
    }

    proptest! {
        #[test]
        fn unit_damping_matches_undamped(
            rates in prop::collection::vec(-1e6f64..1e6, 1..14),
            seed in prop::collection::vec(-1e6f64..1e6, 14),
            kappa in 0usize..15,
        ) {
            let tilde = &seed[..rates.len()];
            let mut w = SortWork::default();
            let a = ue_to_rb_messages(&rates, tilde, kappa, 1.0, &mut w);
            let b = ue_to_rb_messages_undamped(&rates, tilde, kappa);
            prop_assert_eq!(a, b);
            let c = rb_to_ue_messages(&rates, 1.0);
            let d = rb_to_ue_messages_undamped(&rates);
            prop_assert_eq!(c, d);
        }

        #[test]
        fn decision_is_exclusive(tau in prop::collection::vec(prop::collection::vec(-5f64..5.0, 6), 1..5)) {
            let x = decide_allocation(&tau);
            for n in 0..6 {
                prop_assert!((0..tau.len()).filter(|&u| x[u][n]).count() <= 1);
            }
        }

        #[test]
        fn single_ue_shift_invariance(rates in prop::collection::vec(0i64..1_000_000, 2..10), c in -100_000i64..100_000) {
            // Integer-valued rates keep the arithmetic exact.
            let base: Vec<f64> = rates.iter().map(|&r| r as f64).collect();
            let shifted: Vec<f64> = rates.iter().map(|&r| (r + c) as f64).collect();
            let zeros = vec![0.0; base.len()];
            for kappa in 1..base.len() {
                prop_assert_eq!(
                    ue_to_rb_messages_undamped(&base, &zeros, kappa),
                    ue_to_rb_messages_undamped(&shifted, &zeros, kappa)
                );
            }
        }
    }
}
