//! Long-run throughput statistics of a chain.

use crate::error::{Error, Result};

/// Stationary mean and fluctuation of the per-slot throughput.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputSummary {
    pub mean: f64,
    pub variance: f64,
    /// Fluctuation, in the same unit as `mean`.
    pub std_dev: f64,
}

pub fn summarize(pi: &[f64], thp: &[f64]) -> Result<ThroughputSummary> {
    if pi.len() != thp.len() {
        return Err(Error::domain(format!(
            "distribution has {} states but throughput vector has {}",
            pi.len(),
            thp.len()
        )));
    }
    let mean: f64 = pi.iter().zip(thp).map(|(p, x)| p * x).sum();
    let variance: f64 = pi.iter().zip(thp).map(|(p, x)| p * (x - mean).powi(2)).sum();
    Ok(ThroughputSummary {
        mean,
        variance,
        std_dev: variance.sqrt(),
    })
}
