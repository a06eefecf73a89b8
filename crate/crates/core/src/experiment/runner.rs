//! Monte-Carlo snapshot loop over the sweep grid and seeds.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridPoint};
use crate::baseline::{run_reference, ReferenceOutcome};
use crate::channel::{draw_channel, ChannelRealization};
use crate::error::{Error, Result};
use crate::metrics::{avg_rate_bps, ccdf, delay_one_hop_ms, delay_two_hop_ms, median, rate_gain_pct};
use crate::mpsolver::{solve_network, MonteCarloMinRate, NetworkSolution};
use crate::params::SimParams;
use crate::ratemodel::shannon_rate_bps;
use crate::scenario::{generate_scenario, NetworkScenario};

const STREAM_SCENARIO: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_RATE_FLOOR: u64 = 2;

/// Independent sub-seed for one random stream of a run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scenario and channel of one seed.
pub fn snapshot(params: &SimParams, n_cues: usize, n_pairs: usize, seed: u64) -> Result<(NetworkScenario, ChannelRealization)> {
    let scenario = generate_scenario(params, n_cues, n_pairs, derive_seed(seed, STREAM_SCENARIO))?;
    let chan = draw_channel(&scenario, params, derive_seed(seed, STREAM_CHANNEL))?;
    Ok((scenario, chan))
}

pub fn rate_floor_estimator(params: &SimParams, seed: u64) -> MonteCarloMinRate {
    MonteCarloMinRate::new(params.rate_floor_draws, derive_seed(seed, STREAM_RATE_FLOOR))
}

/// Both schemes on one snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotOutcome {
    pub scenario: NetworkScenario,
    pub proposed: NetworkSolution,
    pub reference: ReferenceOutcome,
    /// Per-UE rates of the proposed scheme, global UE ids.
    pub ue_rates_bps: Vec<f64>,
    /// Per-pair relayed rates.
    pub prop_d2d_rates_bps: Vec<f64>,
    pub two_hop_delay_ms: Vec<f64>,
    pub one_hop_delay_ms: Vec<f64>,
}

pub fn evaluate_snapshot(params: &SimParams, n_cues: usize, n_pairs: usize, seed: u64) -> Result<SnapshotOutcome> {
    let (scenario, chan) = snapshot(params, n_cues, n_pairs, seed)?;
    let est = rate_floor_estimator(params, seed);
    let proposed = solve_network(&scenario, &chan, params, &est)?;
    let (_, reference) = run_reference(&scenario, &chan, params, &est)?;
    let ue_rates_bps = proposed.ue_rates(scenario.n_ues());
    let mut prop_d2d = Vec::with_capacity(n_pairs);
    let mut two_hop = Vec::with_capacity(n_pairs);
    let mut one_hop = Vec::with_capacity(n_pairs);
    for (d, pair) in scenario.d2d_pairs.iter().enumerate() {
        let u = scenario.d2d_ue(d);
        let l = pair.relay;
        prop_d2d.push(ue_rates_bps[u]);
        let sol = &proposed.solutions[l];
        let prob = &proposed.problems[l];
        let row = sol.allocation.members.iter().position(|&m| m == u).expect("pair served by its relay");
        let (mut r1, mut r2) = (0.0, 0.0);
        for n in (0..params.n_rbs).filter(|&n| sol.allocation.x[row][n]) {
            r1 += shannon_rate_bps(sol.allocation.p_ue[row][n], prob.gamma1[row][n], params.rb_bandwidth_hz);
            r2 += shannon_rate_bps(sol.allocation.p_relay[row][n], prob.gamma2[row][n], params.rb_bandwidth_hz);
        }
        let relay = scenario.relays[l];
        two_hop.push(delay_two_hop_ms(r1, r2, pair.tx.distance(&relay), relay.distance(&pair.rx), params));
        one_hop.push(delay_one_hop_ms(reference.d2d_rates_bps[d], pair.tx.distance(&pair.rx), params));
    }
    Ok(SnapshotOutcome {
        scenario,
        proposed,
        reference,
        ue_rates_bps,
        prop_d2d_rates_bps: prop_d2d,
        two_hop_delay_ms: two_hop,
        one_hop_delay_ms: one_hop,
    })
}

/// One row per (grid point, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub d_rd_m: f64,
    pub d_dd_m: f64,
    pub n_cues: usize,
    pub n_d2d_pairs: usize,
    pub ue_rates_bps: Vec<f64>,
    pub prop_d2d_sum_bps: f64,
    pub ref_d2d_sum_bps: f64,
    pub prop_d2d_mean_bps: f64,
    pub ref_d2d_mean_bps: f64,
    pub gain_pct: Option<f64>,
    pub avg_rate_bps: f64,
    pub pairs_admitted_ref: usize,
    /// Iterations used by the slowest relay.
    pub iterations: usize,
    pub converged: bool,
    pub two_hop_delay_ms: Vec<f64>,
    pub one_hop_delay_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAggregate {
    pub d_rd_m: f64,
    pub d_dd_m: f64,
    pub n_d2d_pairs: usize,
    pub prop_d2d_mean_bps: f64,
    pub ref_d2d_mean_bps: f64,
    /// Gain of the seed-summed D2D rates; `None` when the reference sum is zero.
    pub gain_pct: Option<f64>,
    /// Mean of the per-seed gains that are defined.
    pub mean_seed_gain_pct: Option<f64>,
    pub undefined_gains: usize,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub ues_per_relay: usize,
    pub iteration: usize,
    pub avg_rate_bps: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub ues_per_relay: usize,
    pub converged_fraction: f64,
    pub final_avg_rate_bps: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub median_two_hop_ms: Option<f64>,
    pub median_one_hop_ms: Option<f64>,
    pub median_offset_ms: Option<f64>,
    pub finite_two_hop: usize,
    pub finite_one_hop: usize,
    pub total_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub points: Vec<PointAggregate>,
    pub convergence: Vec<ConvergenceSummary>,
    pub delay: DelaySummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<SeedRecord>,
    pub convergence: Vec<ConvergenceRow>,
    pub ccdf: Vec<(f64, f64, f64)>,
    pub aggregates: Aggregates,
}

impl ExperimentConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed + i).collect()
    }
}

fn record(cfg: &ExperimentConfig, point: &GridPoint, seed: u64) -> Result<SeedRecord> {
    let params = cfg.params_at(point);
    let out = evaluate_snapshot(&params, cfg.n_cues, point.n_d2d_pairs, seed)?;
    let prop_sum: f64 = out.prop_d2d_rates_bps.iter().sum();
    let ref_sum: f64 = out.reference.d2d_rates_bps.iter().sum();
    let np = point.n_d2d_pairs.max(1) as f64;
    Ok(SeedRecord {
        seed,
        d_rd_m: point.d_rd_m,
        d_dd_m: point.d_dd_m,
        n_cues: cfg.n_cues,
        n_d2d_pairs: point.n_d2d_pairs,
        avg_rate_bps: avg_rate_bps(&out.ue_rates_bps).unwrap_or(0.0),
        prop_d2d_sum_bps: prop_sum,
        ref_d2d_sum_bps: ref_sum,
        prop_d2d_mean_bps: prop_sum / np,
        ref_d2d_mean_bps: ref_sum / np,
        gain_pct: rate_gain_pct(prop_sum, ref_sum),
        pairs_admitted_ref: out.reference.partner.iter().filter(|p| p.is_some()).count(),
        iterations: out.proposed.solutions.iter().map(|s| s.messages.iteration).max().unwrap_or(0),
        converged: out.proposed.solutions.iter().all(|s| s.messages.converged),
        ue_rates_bps: out.ue_rates_bps,
        two_hop_delay_ms: out.two_hop_delay_ms,
        one_hop_delay_ms: out.one_hop_delay_ms,
    })
}

/// Average per-UE rate after each iteration; relays that stopped early hold
/// their last value.
pub fn network_trace(solution: &NetworkSolution, n_ues: usize) -> Vec<f64> {
    let len = solution.solutions.iter().map(|s| s.messages.rate_trace.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let total: f64 = solution
                .solutions
                .iter()
                .filter_map(|s| {
                    let tr = &s.messages.rate_trace;
                    tr.get(t).or(tr.last()).copied()
                })
                .sum();
            total / n_ues.max(1) as f64
        })
        .collect()
}

/// Convergence traces for one UE count per relay.
pub fn convergence_run(cfg: &ExperimentConfig, ues_per_relay: usize) -> Result<(Vec<ConvergenceRow>, ConvergenceSummary)> {
    let params = &cfg.params;
    let relays = params.n_relays;
    let n_pairs = relays * cfg.convergence_d2d_per_relay;
    let n_cues = relays * (ues_per_relay - cfg.convergence_d2d_per_relay);
    let runs = cfg
        .seed_list()
        .into_par_iter()
        .map(|seed| {
            let (scenario, chan) = snapshot(params, n_cues, n_pairs, seed)?;
            let sol = solve_network(&scenario, &chan, params, &rate_floor_estimator(params, seed))?;
            let converged_at = sol
                .solutions
                .iter()
                .map(|s| s.messages.converged.then_some(s.messages.iteration))
                .try_fold(0usize, |acc, it| it.map(|i| acc.max(i)));
            Ok((network_trace(&sol, scenario.n_ues()), converged_at))
        })
        .collect::<Result<Vec<_>>>()?;
    let len = runs.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let seeds = runs.len() as f64;
    let rows = (0..len)
        .map(|t| ConvergenceRow {
            ues_per_relay,
            iteration: t + 1,
            avg_rate_bps: runs.iter().map(|(tr, _)| tr.get(t).or(tr.last()).copied().unwrap_or(0.0)).sum::<f64>() / seeds,
            converged_fraction: runs.iter().filter(|(_, c)| c.is_some_and(|i| i <= t + 1)).count() as f64 / seeds,
        })
        .collect();
    let summary = ConvergenceSummary {
        ues_per_relay,
        converged_fraction: runs.iter().filter(|(_, c)| c.is_some()).count() as f64 / seeds,
        final_avg_rate_bps: runs.iter().map(|(tr, _)| tr.last().copied().unwrap_or(0.0)).sum::<f64>() / seeds,
        mean_iterations: runs.iter().map(|(tr, _)| tr.len() as f64).sum::<f64>() / seeds,
    };
    Ok((rows, summary))
}

fn aggregate_points(cfg: &ExperimentConfig, records: &[SeedRecord]) -> Vec<PointAggregate> {
    let per_point = cfg.seeds;
    cfg.grid()
        .iter()
        .zip(records.chunks(per_point))
        .map(|(pt, recs)| {
            let n = recs.len() as f64;
            let gains: Vec<f64> = recs.iter().filter_map(|r| r.gain_pct).collect();
            let prop_sum: f64 = recs.iter().map(|r| r.prop_d2d_sum_bps).sum();
            let ref_sum: f64 = recs.iter().map(|r| r.ref_d2d_sum_bps).sum();
            PointAggregate {
                d_rd_m: pt.d_rd_m,
                d_dd_m: pt.d_dd_m,
                n_d2d_pairs: pt.n_d2d_pairs,
                prop_d2d_mean_bps: recs.iter().map(|r| r.prop_d2d_mean_bps).sum::<f64>() / n,
                ref_d2d_mean_bps: recs.iter().map(|r| r.ref_d2d_mean_bps).sum::<f64>() / n,
                gain_pct: rate_gain_pct(prop_sum, ref_sum),
                mean_seed_gain_pct: (!gains.is_empty()).then(|| gains.iter().sum::<f64>() / gains.len() as f64),
                undefined_gains: recs.len() - gains.len(),
                converged_fraction: recs.iter().filter(|r| r.converged).count() as f64 / n,
            }
        })
        .collect()
}

fn delay_summary(records: &[SeedRecord]) -> (DelaySummary, Vec<f64>, Vec<f64>) {
    let two: Vec<f64> = records.iter().flat_map(|r| r.two_hop_delay_ms.iter().copied()).collect();
    let one: Vec<f64> = records.iter().flat_map(|r| r.one_hop_delay_ms.iter().copied()).collect();
    let finite = |v: &[f64]| v.iter().copied().filter(|d| d.is_finite()).collect::<Vec<_>>();
    let (f2, f1) = (finite(&two), finite(&one));
    let (m2, m1) = (median(&f2), median(&f1));
    let summary = DelaySummary {
        median_two_hop_ms: m2,
        median_one_hop_ms: m1,
        median_offset_ms: m2.zip(m1).map(|(a, b)| a - b),
        finite_two_hop: f2.len(),
        finite_one_hop: f1.len(),
        total_pairs: two.len(),
    };
    (summary, two, one)
}

fn ccdf_table(two: &[f64], one: &[f64], step: f64) -> Vec<(f64, f64, f64)> {
    let hi = two.iter().chain(one).copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let count = (hi / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    let c2 = ccdf(two, &grid);
    let c1 = ccdf(one, &grid);
    grid.iter().zip(c2.iter().zip(&c1)).map(|(&t, (a, b))| (t, a.1, b.1)).collect()
}

/// Runs every grid point and seed, plus the convergence traces.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let work = || -> Result<ExperimentResult> {
        let jobs: Vec<(GridPoint, u64)> = cfg
            .grid()
            .into_iter()
            .flat_map(|pt| cfg.seed_list().into_iter().map(move |s| (pt, s)))
            .collect();
        let records = jobs
            .par_iter()
            .map(|(pt, seed)| record(cfg, pt, *seed))
            .collect::<Result<Vec<_>>>()?;
        let mut convergence = Vec::new();
        let mut conv_summary = Vec::new();
        for &u in &cfg.convergence_ues_per_relay {
            let (rows, s) = convergence_run(cfg, u)?;
            convergence.extend(rows);
            conv_summary.push(s);
        }
        let (delay, two, one) = delay_summary(&records);
        let ccdf = ccdf_table(&two, &one, cfg.ccdf_step_ms);
        Ok(ExperimentResult {
            aggregates: Aggregates {
                points: aggregate_points(cfg, &records),
                convergence: conv_summary,
                delay,
            },
            config: cfg.clone(),
            records,
            convergence,
            ccdf,
        })
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub grid: Vec<GridPoint>,
    pub files: Vec<String>,
    pub aggregates: Aggregates,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Reruns the recorded config and checks the aggregates match exactly.
    pub fn reproduce(&self) -> Result<ExperimentResult> {
        if self.config.hash_hex() != self.config_sha256 {
            return Err(Error::Config("manifest config does not match its recorded hash".into()));
        }
        let result = run_experiment(&self.config)?;
        if result.aggregates != self.aggregates {
            return Err(Error::Config("rerun aggregates differ from the manifest".into()));
        }
        Ok(result)
    }
}

pub const RECORDS_CSV: &str = "records.csv";
pub const RATES_CSV: &str = "rates.csv";
pub const GAIN_CSV: &str = "gain.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const DELAY_CCDF_CSV: &str = "delay_ccdf.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes one CSV per output table plus the manifest; returns the manifest.
pub fn write_outputs(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut w = writer(dir, RECORDS_CSV)?;
    w.write_record([
        "seed", "d_rd_m", "d_dd_m", "n_cues", "n_d2d_pairs", "avg_rate_bps", "prop_d2d_sum_bps", "ref_d2d_sum_bps",
        "gain_pct", "pairs_admitted_ref", "iterations", "converged", "ue_rates_bps", "two_hop_delay_ms",
        "one_hop_delay_ms",
    ])?;
    for r in &result.records {
        w.write_record([
            r.seed.to_string(),
            r.d_rd_m.to_string(),
            r.d_dd_m.to_string(),
            r.n_cues.to_string(),
            r.n_d2d_pairs.to_string(),
            r.avg_rate_bps.to_string(),
            r.prop_d2d_sum_bps.to_string(),
            r.ref_d2d_sum_bps.to_string(),
            opt(r.gain_pct),
            r.pairs_admitted_ref.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            join(&r.ue_rates_bps),
            join(&r.two_hop_delay_ms),
            join(&r.one_hop_delay_ms),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(RECORDS_CSV), e))?;

    let mut w = writer(dir, RATES_CSV)?;
    w.write_record(["d_rd_m", "d_dd_m", "n_d2d_pairs", "prop_d2d_mean_bps", "ref_d2d_mean_bps", "converged_fraction"])?;
    for p in &result.aggregates.points {
        w.write_record([
            p.d_rd_m.to_string(),
            p.d_dd_m.to_string(),
            p.n_d2d_pairs.to_string(),
            p.prop_d2d_mean_bps.to_string(),
            p.ref_d2d_mean_bps.to_string(),
            p.converged_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(RATES_CSV), e))?;

    let mut w = writer(dir, GAIN_CSV)?;
    w.write_record(["d_rd_m", "d_dd_m", "n_d2d_pairs", "gain_pct", "mean_seed_gain_pct", "undefined_gains"])?;
    for p in &result.aggregates.points {
        w.write_record([
            p.d_rd_m.to_string(),
            p.d_dd_m.to_string(),
            p.n_d2d_pairs.to_string(),
            opt(p.gain_pct),
            opt(p.mean_seed_gain_pct),
            p.undefined_gains.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(GAIN_CSV), e))?;

    let mut w = writer(dir, CONVERGENCE_CSV)?;
    for row in &result.convergence {
        w.serialize(row)?;
    }
    if result.convergence.is_empty() {
        w.write_record(["ues_per_relay", "iteration", "avg_rate_bps", "converged_fraction"])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(CONVERGENCE_CSV), e))?;

    let mut w = writer(dir, DELAY_CCDF_CSV)?;
    w.write_record(["t_ms", "ccdf_two_hop", "ccdf_one_hop"])?;
    for (t, a, b) in &result.ccdf {
        w.write_record([t.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(dir.join(DELAY_CCDF_CSV), e))?;

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: result.config.hash_hex(),
        config: result.config.clone(),
        seeds: result.config.seed_list(),
        grid: result.config.grid(),
        files: [RECORDS_CSV, RATES_CSV, GAIN_CSV, CONVERGENCE_CSV, DELAY_CCDF_CSV]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        aggregates: result.aggregates.clone(),
    };
    let path = dir.join(MANIFEST_JSON);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
