use std::fs;

use relaymp::experiment::{run_experiment, write_outputs, ExperimentConfig, Manifest};
use relaymp::metrics::rate_gain_pct;

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str("seeds = 2\nd_dd_m = [60, 100]\nconvergence_ues_per_relay = [4]").unwrap();
    cfg.params.rate_floor_draws = 2000;
    cfg
}

#[test]
fn outputs_are_written_and_reproducible() {
    let cfg = small();
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.records.len(), 4);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = write_outputs(&res, a.path()).unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    for name in &manifest.files {
        let x = fs::read_to_string(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read_to_string(b.path().join(name)).unwrap(), "{name} differs between runs");
        assert!(x.lines().count() >= 2, "{name} has no data rows");
    }

    let loaded = Manifest::load(a.path().join("manifest.json")).unwrap();
    assert_eq!(loaded, manifest);
    assert_eq!(loaded.seeds, vec![1, 2]);
    loaded.reproduce().unwrap();
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = small();
    let one = run_experiment(&ExperimentConfig { threads: Some(1), ..cfg.clone() }).unwrap();
    let four = run_experiment(&ExperimentConfig { threads: Some(4), ..cfg }).unwrap();
    assert_eq!(one.records, four.records);
    assert_eq!(one.aggregates, four.aggregates);
}

#[test]
fn tampered_manifest_is_rejected() {
    let res = run_experiment(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut m = write_outputs(&res, dir.path()).unwrap();
    m.config.seeds = 3;
    assert!(m.reproduce().is_err());
}

#[test]
fn gains_recompute_from_records() {
    let res = run_experiment(&small()).unwrap();
    for r in &res.records {
        assert_eq!(r.gain_pct, rate_gain_pct(r.prop_d2d_sum_bps, r.ref_d2d_sum_bps));
    }
    let c = &res.ccdf;
    assert!(c.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 <= w[0].2));
    assert!(c.iter().all(|&(_, a, b)| (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)));
}

#[test]
fn distance_sweep_gives_seventeen_rows() {
    let mut cfg = ExperimentConfig::from_toml_str("seeds = 1\nd_dd_start = 60\nd_dd_stop = 140\nd_dd_step = 5\nconvergence_ues_per_relay = []")
        .unwrap();
    cfg.params.rate_floor_draws = 1000;
    let res = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&res, dir.path()).unwrap();
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 17);
}

#[test]
fn single_seed_single_point() {
    let mut cfg = ExperimentConfig::from_toml_str("seeds = 1\nconvergence_ues_per_relay = []").unwrap();
    cfg.params.rate_floor_draws = 1000;
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a.records.len(), 1);
    assert_eq!(a, run_experiment(&cfg).unwrap());
}
