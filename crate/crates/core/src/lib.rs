//! Relay-aided D2D resource allocation by max-sum message passing.
//!
//! Each relay assigns resource blocks and transmit powers to the cellular
//! and D2D UEs it serves. The crate covers snapshot generation, channel
//! draws, the rate model, the per-relay message-passing solver with its
//! power control, a relay-free reference scheme, an exhaustive oracle for
//! small instances, and an experiment runner.

pub mod baseline;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod mpsolver;
pub mod oracle;
pub mod params;
pub mod powerctl;
pub mod ratemodel;
pub mod scenario;

pub use error::{Error, Result};
pub use params::SimParams;
