use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("{count} {what} cannot be split evenly over {relays} relays")]
    UnevenSplit {
        what: &'static str,
        count: usize,
        relays: usize,
    },

    #[error("could not place {node} after {attempts} attempts (geometry infeasible?)")]
    PlacementFailed { node: String, attempts: usize },

    #[error("path loss undefined for {what} = {value}")]
    PathLossDomain { what: &'static str, value: f64 },

    #[error("minimum per-RB rate estimate is zero; rate requirement {q_bps} bps unattainable")]
    ZeroRateFloor { q_bps: f64 },

    #[error("oracle dimension guard exceeded: {ues} UEs x {rbs} RBs with {grid} grid points")]
    OracleTooLarge { ues: usize, rbs: usize, grid: usize },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
