//! Experiment configuration: a flat TOML file whose keys are either
//! [`SimParams`] fields or the sweep keys below.
//!
//! ```toml
//! n_cues = 15
//! n_d2d_pairs = [9]
//! d_dd_start = 60
//! d_dd_stop = 140
//! d_dd_step = 5
//! sweep_mode = "paired"
//! seeds = 50
//! d_rd_m = 80
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// `d_rd[i]` runs with `d_dd[i]`; both lists must have the same length
    /// unless one of them has a single entry.
    Paired,
    /// Every `(d_rd, d_dd)` combination; geometrically impossible cells are
    /// skipped.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SimParams,
    pub n_cues: usize,
    pub n_d2d_pairs: Vec<usize>,
    pub d_rd_m: Vec<f64>,
    pub d_dd_m: Vec<f64>,
    pub sweep_mode: SweepMode,
    pub seeds: usize,
    pub base_seed: u64,
    /// UEs per relay for the convergence traces; each keeps
    /// `convergence_d2d_per_relay` pairs and fills the rest with CUEs.
    pub convergence_ues_per_relay: Vec<usize>,
    pub convergence_d2d_per_relay: usize,
    /// Grid step of the delay CCDF, ms.
    pub ccdf_step_ms: f64,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = SimParams::default();
        Self {
            n_cues: 15,
            n_d2d_pairs: vec![9],
            d_rd_m: vec![params.d_rd_m],
            d_dd_m: vec![params.d_dd_m],
            sweep_mode: SweepMode::Paired,
            seeds: 50,
            base_seed: 1,
            convergence_ues_per_relay: vec![6, 8],
            convergence_d2d_per_relay: 3,
            ccdf_step_ms: 0.5,
            threads: None,
            params,
        }
    }
}

/// One cell of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d_rd_m: f64,
    pub d_dd_m: f64,
    pub n_d2d_pairs: usize,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn take_usize(t: &mut toml::Table, key: &str) -> Result<Option<usize>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
        Some(v) => Err(cfg_err(format!("`{key}` must be a nonnegative integer, got {v}"))),
    }
}

fn take_f64(t: &mut toml::Table, key: &str) -> Result<Option<f64>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
        Some(toml::Value::Float(f)) => Ok(Some(f)),
        Some(v) => Err(cfg_err(format!("`{key}` must be a number, got {v}"))),
    }
}

fn take_usize_list(t: &mut toml::Table, key: &str) -> Result<Option<Vec<usize>>> {
    match t.remove(key) {
        None => Ok(None),
        Some(toml::Value::Integer(i)) if i >= 0 => Ok(Some(vec![i as usize])),
        Some(toml::Value::Array(a)) => a
            .into_iter()
            .map(|v| match v {
                toml::Value::Integer(i) if i >= 0 => Ok(i as usize),
                other => Err(cfg_err(format!("`{key}` entries must be nonnegative integers, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(v) => Err(cfg_err(format!("`{key}` must be an integer or a list of integers, got {v}"))),
    }
}

/// Inclusive arithmetic range; the stop value is kept when it lies on the
/// grid up to rounding.
pub fn sweep_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(cfg_err(format!("bad sweep {start}..{stop} step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// An explicit list under `{prefix}_m`, or a start/stop/step triple. A
/// scalar `{prefix}_m` stays with the parameters.
fn take_sweep(t: &mut toml::Table, prefix: &str) -> Result<Option<Vec<f64>>> {
    let key = format!("{prefix}_m");
    if let Some(toml::Value::Array(a)) = t.get(&key) {
        let list = a
            .iter()
            .map(|v| match v {
                toml::Value::Integer(i) => Ok(*i as f64),
                toml::Value::Float(f) => Ok(*f),
                other => Err(cfg_err(format!("`{key}` entries must be numbers, got {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let first = *list.first().ok_or_else(|| cfg_err(format!("`{key}` must not be empty")))?;
        t.insert(key, toml::Value::Float(first));
        if t.contains_key(&format!("{prefix}_start")) {
            return Err(cfg_err(format!("give either a `{prefix}_m` list or a `{prefix}_start` sweep, not both")));
        }
        return Ok(Some(list));
    }
    let start = take_f64(t, &format!("{prefix}_start"))?;
    let stop = take_f64(t, &format!("{prefix}_stop"))?;
    let step = take_f64(t, &format!("{prefix}_step"))?;
    match (start, stop, step) {
        (None, None, None) => Ok(None),
        (Some(a), Some(b), Some(s)) => sweep_range(a, b, s).map(Some),
        _ => Err(cfg_err(format!("`{prefix}_start`, `{prefix}_stop` and `{prefix}_step` go together"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut t: toml::Table = text.parse().map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = take_usize(&mut t, "n_cues")? {
            cfg.n_cues = v;
        }
        if let Some(v) = take_usize_list(&mut t, "n_d2d_pairs")? {
            cfg.n_d2d_pairs = v;
        }
        let d_rd = take_sweep(&mut t, "d_rd")?;
        let d_dd = take_sweep(&mut t, "d_dd")?;
        if let Some(v) = t.remove("sweep_mode") {
            cfg.sweep_mode = match v.as_str() {
                Some("paired") => SweepMode::Paired,
                Some("product") => SweepMode::Product,
                _ => return Err(cfg_err(format!("`sweep_mode` must be \"paired\" or \"product\", got {v}"))),
            };
        }
        if let Some(v) = take_usize(&mut t, "seeds")? {
            cfg.seeds = v;
        }
        if let Some(v) = take_usize(&mut t, "base_seed")? {
            cfg.base_seed = v as u64;
        }
        if let Some(v) = take_usize_list(&mut t, "convergence_ues_per_relay")? {
            cfg.convergence_ues_per_relay = v;
        }
        if let Some(v) = take_usize(&mut t, "convergence_d2d_per_relay")? {
            cfg.convergence_d2d_per_relay = v;
        }
        if let Some(v) = take_f64(&mut t, "ccdf_step_ms")? {
            cfg.ccdf_step_ms = v;
        }
        cfg.threads = take_usize(&mut t, "threads")?;
        cfg.params = toml::Value::Table(t)
            .try_into()
            .map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        cfg.d_rd_m = d_rd.unwrap_or_else(|| vec![cfg.params.d_rd_m]);
        cfg.d_dd_m = d_dd.unwrap_or_else(|| vec![cfg.params.d_dd_m]);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.seeds == 0 {
            return Err(cfg_err("`seeds` must be at least 1"));
        }
        if self.n_d2d_pairs.is_empty() || self.d_rd_m.is_empty() || self.d_dd_m.is_empty() {
            return Err(cfg_err("sweep lists must not be empty"));
        }
        if self.sweep_mode == SweepMode::Paired
            && self.d_rd_m.len() != self.d_dd_m.len()
            && self.d_rd_m.len() != 1
            && self.d_dd_m.len() != 1
        {
            return Err(cfg_err(format!(
                "paired sweep needs equal lengths, got {} d_rd values and {} d_dd values",
                self.d_rd_m.len(),
                self.d_dd_m.len()
            )));
        }
        if !(self.ccdf_step_ms > 0.0) {
            return Err(cfg_err("`ccdf_step_ms` must be positive"));
        }
        if self.threads == Some(0) {
            return Err(cfg_err("`threads` must be at least 1"));
        }
        if self.convergence_ues_per_relay.iter().any(|&u| u < self.convergence_d2d_per_relay) {
            return Err(cfg_err("`convergence_ues_per_relay` entries must cover the D2D pairs per relay"));
        }
        Ok(())
    }

    /// Sweep cells in output order: pair counts outermost, then distances.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut dist = Vec::new();
        match self.sweep_mode {
            SweepMode::Paired => {
                let len = self.d_rd_m.len().max(self.d_dd_m.len());
                for i in 0..len {
                    let rd = self.d_rd_m[i.min(self.d_rd_m.len() - 1)];
                    let dd = self.d_dd_m[i.min(self.d_dd_m.len() - 1)];
                    dist.push((rd, dd));
                }
            }
            SweepMode::Product => {
                for &rd in &self.d_rd_m {
                    for &dd in &self.d_dd_m {
                        // both endpoints lie within d_rd of the relay
                        if dd <= 2.0 * rd {
                            dist.push((rd, dd));
                        }
                    }
                }
            }
        }
        self.n_d2d_pairs
            .iter()
            .flat_map(|&np| dist.iter().map(move |&(d_rd_m, d_dd_m)| GridPoint { d_rd_m, d_dd_m, n_d2d_pairs: np }))
            .collect()
    }

    /// Parameters with the grid cell's distances substituted.
    pub fn params_at(&self, point: &GridPoint) -> SimParams {
        SimParams {
            d_rd_m: point.d_rd_m,
            d_dd_m: point.d_dd_m,
            ..self.params.clone()
        }
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
