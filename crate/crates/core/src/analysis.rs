use crate::chain::{assemble, stationary, ChainInputs, MarkovChain, StationaryDistribution};
use crate::error::Result;
use crate::metrics::{summarize, ThroughputSummary};
use crate::scenario::Scenario;
use crate::throughput::{BlockageOutcome, StateThroughput};

/// Every intermediate of the analytic model for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub states: Vec<StateThroughput>,
    pub blockage: BlockageOutcome,
    pub p_c: f64,
    pub chain: MarkovChain,
    pub stationary: StationaryDistribution,
    pub summary: ThroughputSummary,
}

impl Analysis {
    /// Long-run share of time in the blockage state.
    pub fn pi_blocked(&self) -> f64 {
        self.stationary.pi[self.chain.blocked_index()]
    }
}

pub fn analyze(scenario: &Scenario) -> Result<Analysis> {
    let inputs = ChainInputs::from_scenario(scenario)?;
    let chain = assemble(&inputs.params)?;
    let stationary = stationary(&chain)?;
    let summary = summarize(&stationary.pi, &chain.throughput)?;
    Ok(Analysis {
        states: inputs.states,
        blockage: inputs.blockage,
        p_c: inputs.p_c,
        chain,
        stationary,
        summary,
    })
}
