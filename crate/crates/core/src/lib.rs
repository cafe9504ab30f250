//! Markov-chain throughput model for a millimeter-wave link that suffers
//! transient blockage and re-steers onto suboptimal sectors.
//!
//! The analytic path is [`scenario::validate`] → [`chain::build_chain`] →
//! [`chain::stationary`] → [`metrics::summarize`], bundled by
//! [`analysis::analyze`]. Two seeded simulators in [`simulate`] check the
//! chain abstraction, and [`trace`] fits the chain's levels and recovery
//! probabilities from measured throughput series.

pub mod analysis;
pub mod chain;
pub mod config;
pub mod error;
pub mod metrics;
pub mod probability;
pub mod scenario;
pub mod simulate;
pub mod sweep;
pub mod throughput;
pub mod trace;

pub use analysis::{analyze, Analysis};
pub use chain::{build_chain, stationary, MarkovChain, StateLabel, StationaryDistribution};
pub use error::{Error, Result, Violation};
pub use metrics::{summarize, ThroughputSummary};
pub use scenario::{
    BlockageProcess, LinkRates, QueueParams, Scenario, ScenarioConfig, SuboptimalExit,
    SweepPolicy, TimingParams,
};
