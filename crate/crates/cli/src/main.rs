use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use relaymp::experiment::{oracle_check, run_experiment, write_outputs, ExperimentConfig, Manifest};

#[derive(Parser)]
#[command(name = "relaymp", version, about = "Relay-aided D2D resource allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (flat TOML).
    config: PathBuf,
    /// Seeds per grid point; for oracle-check, the number of instances.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write CSVs plus a manifest.
    Run(Common),
    /// Parse and check a config without running it.
    Validate(Common),
    /// Compare the solver with exhaustive search on small instances.
    OracleCheck(Common),
    /// Rerun a manifest and check its aggregates are reproduced exactly.
    Reproduce {
        manifest: PathBuf,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config).with_context(|| format!("loading {}", c.config.display()))?;
    if let Some(s) = c.seeds {
        cfg.seeds = s;
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    cfg.validate().with_context(|| format!("validating {}", c.config.display()))?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.4} {unit}"))
}

fn run(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let result = run_experiment(&cfg)?;
    let manifest = write_outputs(&result, &c.out_dir).with_context(|| format!("writing to {}", c.out_dir.display()))?;
    println!("config sha256 {}", manifest.config_sha256);
    println!("{} records written to {}", result.records.len(), c.out_dir.display());
    for p in &manifest.aggregates.points {
        println!(
            "d_rd {:>6.1} m  d_dd {:>6.1} m  pairs {:>2}  prop {:>12.1} bps  ref {:>12.1} bps  gain {}",
            p.d_rd_m,
            p.d_dd_m,
            p.n_d2d_pairs,
            p.prop_d2d_mean_bps,
            p.ref_d2d_mean_bps,
            fmt_opt(p.gain_pct, "%")
        );
    }
    for s in &manifest.aggregates.convergence {
        println!(
            "{} UEs/relay: converged {:.0}%  final avg rate {:.1} bps",
            s.ues_per_relay,
            100.0 * s.converged_fraction,
            s.final_avg_rate_bps
        );
    }
    println!("median delay offset {}", fmt_opt(manifest.aggregates.delay.median_offset_ms, "ms"));
    Ok(())
}

fn validate(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    println!("ok: {} grid points x {} seeds", cfg.grid().len(), cfg.seeds);
    println!("config sha256 {}", cfg.hash_hex());
    Ok(())
}

fn oracle(c: &Common) -> Result<()> {
    let cfg = load(c)?;
    let count = c.seeds.unwrap_or(200);
    let work = || oracle_check(&cfg.params, count, cfg.base_seed);
    let (cases, s) = match cfg.threads {
        Some(t) => rayon_pool(t)?.install(work)?,
        None => work()?,
    };
    std::fs::create_dir_all(&c.out_dir).with_context(|| format!("creating {}", c.out_dir.display()))?;
    let path = c.out_dir.join("oracle.csv");
    write_oracle_csv(&path, &cases).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "{} instances, {} converged, {} matched ({:.1}%), {} dominance violations",
        s.instances,
        s.converged,
        s.matched,
        100.0 * s.match_fraction(),
        s.dominance_violations
    );
    Ok(())
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn write_oracle_csv(path: &Path, cases: &[relaymp::experiment::OracleCase]) -> Result<()> {
    let mut out = String::from("seed,n_rbs,n_members,converged,snapped_objective,oracle_objective,snapped_meets_qos,matches\n");
    for c in cases {
        let k = &c.comparison;
        out += &format!(
            "{},{},{},{},{},{},{},{}\n",
            c.seed,
            c.n_rbs,
            c.n_members,
            k.converged,
            k.snapped_objective,
            k.oracle_objective,
            k.snapped_meets_qos,
            k.matches()
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn reproduce(path: &Path) -> Result<()> {
    let m = Manifest::load(path).with_context(|| format!("loading {}", path.display()))?;
    m.reproduce()?;
    println!("aggregates reproduced exactly ({} grid points)", m.aggregates.points.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(c) => run(c),
        Command::Validate(c) => validate(c),
        Command::OracleCheck(c) => oracle(c),
        Command::Reproduce { manifest } => reproduce(manifest),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
