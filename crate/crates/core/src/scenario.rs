//! Scenario parameters and the quantities derived from them before any
//! Markov modelling happens: physical block duration, channel access time,
//! sweep overhead factor and offered load.
//!
//! All values are SI base units (seconds, bits, bits/second, radians).

use std::f64::consts::PI;

use crate::error::{Error, Result, Violation};

/// MAC timing and the Markov slot length.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingParams {
    pub t_difs: f64,
    pub t_sifs: f64,
    pub t_ack: f64,
    /// CSMA/CA backoff slot.
    pub t_slot_mac: f64,
    pub cw_min: u32,
    /// Air time consumed by one sector level sweep.
    pub t_sweep: f64,
    /// Markov time-slot.
    pub slot: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            t_difs: 13e-6,
            t_sifs: 3e-6,
            t_ack: 6e-6,
            t_slot_mac: 5e-6,
            cw_min: 15,
            t_sweep: 4e-3,
            slot: 1e-3,
        }
    }
}

/// Gaussian inter-blockage statistics and the crossing geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockageProcess {
    /// Mean time between blockage onsets.
    pub mu: f64,
    /// Standard deviation of the time between onsets.
    pub sigma: f64,
    /// Beamwidth in radians.
    pub alpha: f64,
    /// Distance from the transmitter at which the link is crossed.
    pub d: f64,
    /// Crossing speed.
    pub v: f64,
}

impl Default for BlockageProcess {
    fn default() -> Self {
        Self {
            mu: 10.0,
            sigma: 0.1,
            alpha: 20f64.to_radians(),
            d: 1.5,
            v: 1.0,
        }
    }
}

/// Per-sector PHY rates and the probabilities of landing on each sector
/// after a blockage. Index 0 is the best sector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRates {
    pub mcs_levels: Vec<f64>,
    pub p_recover: Vec<f64>,
}

impl LinkRates {
    pub fn n_sectors(&self) -> usize {
        self.mcs_levels.len()
    }

    pub fn best(&self) -> f64 {
        self.mcs_levels[0]
    }
}

impl Default for LinkRates {
    fn default() -> Self {
        Self {
            mcs_levels: vec![3.85e9, 1.925e9, 1.155e9],
            p_recover: vec![1.0 / 3.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueParams {
    /// Queue capacity in bits.
    pub q: f64,
    /// Largest aggregated frame in bits.
    pub a_max: f64,
    /// Offered-load knob; 1 means the best sector aggregates exactly `a_max`.
    pub a_factor: f64,
}

impl Default for QueueParams {
    fn default() -> Self {
        Self {
            q: 793.5e3 * 8.0,
            a_max: 79.35e3 * 8.0,
            a_factor: 1.0,
        }
    }
}

/// Periodic sector sweep schedule. `ssi` may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPolicy {
    pub ssi: f64,
}

impl SweepPolicy {
    pub fn never() -> Self {
        Self { ssi: f64::INFINITY }
    }
}

impl Default for SweepPolicy {
    fn default() -> Self {
        Self::never()
    }
}

/// How the suboptimal-sector rows of the chain spread the sweep-preemption
/// probability `p_C` over time slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuboptimalExit {
    /// `p_C` splits each sojourn: mean dwell `max(p_C·μ, 1)` slots, leaving to
    /// the best sector with probability `1 − p_C` and to blockage with `p_C`.
    #[default]
    PerSojourn,
    /// `p_C` applied every slot: to the best sector `1 − p_C`, stay
    /// `p_C·(1 − 1/μ)`, to blockage `p_C/μ`.
    PerSlot,
}

impl SuboptimalExit {
    pub fn as_str(self) -> &'static str {
        match self {
            SuboptimalExit::PerSojourn => "sojourn",
            SuboptimalExit::PerSlot => "per_slot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sojourn" => Some(SuboptimalExit::PerSojourn),
            "per_slot" => Some(SuboptimalExit::PerSlot),
            _ => None,
        }
    }
}

/// Full parameterization of one link scenario. `Default` is the evaluation
/// parameter set with μ = 10 s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioConfig {
    pub timing: TimingParams,
    pub blockage: BlockageProcess,
    pub rates: LinkRates,
    pub queue: QueueParams,
    pub sweep: SweepPolicy,
    pub sl_exit: SuboptimalExit,
}

/// A config that passed [`validate`], with its derived quantities attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Physical block duration `t`.
    pub block_duration: f64,
    /// Channel access time `t_acc`.
    pub access_time: f64,
    /// Beacon/sweep overhead factor `f`.
    pub overhead: f64,
    /// Offered load `l`.
    pub load: f64,
}

impl Scenario {
    pub fn mu_slots(&self) -> f64 {
        self.config.blockage.mu / self.config.timing.slot
    }
}

/// Time the link stays shadowed while a person walks through the beam:
/// the beam's width at distance `d` divided by the walking speed.
pub fn physical_block_duration(blockage: &BlockageProcess) -> f64 {
    2.0 * blockage.d * (blockage.alpha / 2.0).tan() / blockage.v
}

/// DIFS plus mean backoff plus SIFS plus ACK, collision free.
pub fn channel_access_time(timing: &TimingParams) -> f64 {
    timing.t_difs + f64::from(timing.cw_min) / 2.0 * timing.t_slot_mac + timing.t_sifs + timing.t_ack
}

/// Air-time inflation from periodic sweeps, `S / (S − t_sweep)`.
pub fn overhead_factor(sweep: &SweepPolicy, timing: &TimingParams) -> Result<f64> {
    if sweep.ssi.is_infinite() {
        return Ok(1.0);
    }
    if !(sweep.ssi > timing.t_sweep) {
        return Err(Error::domain(format!(
            "ssi ({} s) must exceed t_sweep ({} s): the sweep would consume the whole interval",
            sweep.ssi, timing.t_sweep
        )));
    }
    Ok(sweep.ssi / (sweep.ssi - timing.t_sweep))
}

/// Load at which the queue fixed point on a sector of rate `best_mcs`
/// equals `a_factor · a_max`.
pub fn offered_load(a_factor: f64, a_max: f64, best_mcs: f64, access_time: f64, overhead: f64) -> f64 {
    let frame = a_factor * a_max;
    frame / (overhead * (access_time + frame / best_mcs))
}

pub fn load_from_aggregation_factor(config: &ScenarioConfig) -> Result<f64> {
    let f = overhead_factor(&config.sweep, &config.timing)?;
    let t_acc = channel_access_time(&config.timing);
    Ok(offered_load(
        config.queue.a_factor,
        config.queue.a_max,
        config.rates.best(),
        t_acc,
        f,
    ))
}

/// Checks every invariant and attaches the derived quantities. All
/// violations are collected, not only the first.
pub fn validate(config: &ScenarioConfig) -> Result<Scenario> {
    let mut v = Vec::new();
    let positive = |v: &mut Vec<Violation>, field: &str, x: f64| {
        if !(x > 0.0 && x.is_finite()) {
            v.push(Violation::new(field, format!("{field} must be positive (got {x})")));
        }
    };

    let tm = &config.timing;
    positive(&mut v, "t_difs", tm.t_difs);
    positive(&mut v, "t_sifs", tm.t_sifs);
    positive(&mut v, "t_ack", tm.t_ack);
    positive(&mut v, "t_slot_mac", tm.t_slot_mac);
    positive(&mut v, "t_sweep", tm.t_sweep);
    positive(&mut v, "slot", tm.slot);

    let b = &config.blockage;
    positive(&mut v, "mu", b.mu);
    positive(&mut v, "sigma", b.sigma);
    positive(&mut v, "d", b.d);
    positive(&mut v, "v", b.v);
    if !(b.alpha > 0.0 && b.alpha < PI) {
        v.push(Violation::new("alpha", format!("alpha must lie in (0, pi) radians (got {})", b.alpha)));
    }
    if b.mu > 0.0 && tm.slot > 0.0 && !(b.mu / tm.slot > 1.0) {
        v.push(Violation::new(
            "mu",
            format!("mu must span more than one slot (mu/slot = {})", b.mu / tm.slot),
        ));
    }

    let r = &config.rates;
    if r.mcs_levels.is_empty() {
        v.push(Violation::new("mcs_levels", "mcs_levels needs at least one rate"));
    }
    if r.mcs_levels.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        v.push(Violation::new("mcs_levels", "every mcs level must be positive"));
    }
    if r.mcs_levels.windows(2).any(|w| !(w[0] > w[1])) {
        v.push(Violation::new("mcs_levels", "mcs_levels must be strictly descending"));
    }
    if r.p_recover.len() != r.mcs_levels.len() {
        v.push(Violation::new(
            "p_recover",
            format!(
                "p_recover has {} entries but mcs_levels has {}",
                r.p_recover.len(),
                r.mcs_levels.len()
            ),
        ));
    }
    if r.p_recover.iter().any(|p| !(0.0..=1.0).contains(p)) {
        v.push(Violation::new("p_recover", "every p_recover entry must lie in [0, 1]"));
    }
    let total: f64 = r.p_recover.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        v.push(Violation::new(
            "p_recover",
            format!("p_recover must sum to 1 (got {total})"),
        ));
    }

    let qp = &config.queue;
    positive(&mut v, "q", qp.q);
    positive(&mut v, "a_max", qp.a_max);
    if qp.a_max > qp.q {
        v.push(Violation::new("a_max", format!("a_max ({}) must not exceed q ({})", qp.a_max, qp.q)));
    }
    if !(0.0..=1.0).contains(&qp.a_factor) {
        v.push(Violation::new("a_factor", format!("a_factor must lie in [0, 1] (got {})", qp.a_factor)));
    }

    let ssi = config.sweep.ssi;
    if ssi.is_nan() || ssi <= 0.0 {
        v.push(Violation::new("ssi", format!("ssi must be positive or inf (got {ssi})")));
    } else if ssi.is_finite() && tm.t_sweep > 0.0 && ssi <= tm.t_sweep {
        v.push(Violation::new(
            "ssi",
            format!("ssi ({ssi}) must exceed t_sweep ({})", tm.t_sweep),
        ));
    }

    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }

    let overhead = overhead_factor(&config.sweep, tm)?;
    let access_time = channel_access_time(tm);
    let load = offered_load(qp.a_factor, qp.a_max, r.best(), access_time, overhead);
    if !(load < r.best()) {
        return Err(Error::Invalid(vec![Violation::new(
            "a_factor",
            format!("derived load {load} must stay below the best mcs {}", r.best()),
        )]));
    }

    Ok(Scenario {
        config: config.clone(),
        block_duration: physical_block_duration(b),
        access_time,
        overhead,
        load,
    })
}
