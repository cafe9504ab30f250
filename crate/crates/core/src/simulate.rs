//! Seeded simulators.
//!
//! [`simulate_chain`] walks the slotted chain itself. [`simulate_events`] is
//! independent of the chain: it plays out Gaussian blockage arrivals,
//! periodic sweeps and a frame-by-frame aggregating transmit queue in
//! continuous time, so it can check the closed forms the chain is built on.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chain::{csv_float, csv_io, MarkovChain};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Throughput series bin, the sampling interval of iperf-style traces.
pub const DEFAULT_BIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    /// Start of the bin.
    pub time_s: f64,
    pub throughput_bps: f64,
}

/// Bookkeeping of the event simulator. All bit counts are exact integers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub bits_arrived: u64,
    pub bits_delivered: u64,
    pub bits_dropped: u64,
    pub bits_queued_end: u64,
    pub frames: u64,
    pub blockages: u64,
    /// Consecutive pairs of blockage onsets.
    pub onset_pairs: u64,
    /// Pairs with no sweep scheduled between the two onsets.
    pub pairs_without_sweep: u64,
    pub sweeps_effective: u64,
    pub sweeps_during_blockage: u64,
}

impl EventCounters {
    /// Share of blockages that arrived before the next sweep could rescue
    /// the link.
    pub fn preemption_fraction(&self) -> Option<f64> {
        (self.onset_pairs > 0).then(|| self.pairs_without_sweep as f64 / self.onset_pairs as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub duration_s: f64,
    pub n_slots: Option<u64>,
    /// Share of time per chain state (`L_H`, `SL_i`…, `B`).
    pub occupancy: Vec<f64>,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub series: Vec<SeriesPoint>,
    pub seed: u64,
    pub events: Option<EventCounters>,
}

impl SimulationResult {
    pub fn write_series_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "throughput_bps"]).map_err(csv_io)?;
        for p in &self.series {
            w.write_record([csv_float(p.time_s), csv_float(p.throughput_bps)])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn simulate_chain(chain: &MarkovChain, n_slots: u64, seed: u64) -> Result<SimulationResult> {
    simulate_chain_binned(chain, n_slots, seed, DEFAULT_BIN)
}

/// Random walk on the chain, one state per slot, starting in `L_H`.
///
/// The empirical variance is the per-slot throughput variance, the quantity
/// the stationary summary predicts.
pub fn simulate_chain_binned(
    chain: &MarkovChain,
    n_slots: u64,
    seed: u64,
    bin_s: f64,
) -> Result<SimulationResult> {
    if n_slots == 0 {
        return Err(Error::domain("need at least one slot"));
    }
    if !(bin_s > 0.0) {
        return Err(Error::domain("bin width must be positive"));
    }
    let n = chain.len();
    let cumulative: Vec<Vec<f64>> = chain
        .matrix
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let bin_slots = ((bin_s / chain.slot).round() as u64).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n];
    let mut series = Vec::with_capacity((n_slots / bin_slots) as usize + 1);
    let mut bin_sum = 0.0;
    let mut state = 0usize;
    for slot in 0..n_slots {
        counts[state] += 1;
        bin_sum += chain.throughput[state];
        if (slot + 1) % bin_slots == 0 {
            series.push(SeriesPoint {
                time_s: (slot + 1 - bin_slots) as f64 * chain.slot,
                throughput_bps: bin_sum / bin_slots as f64,
            });
            bin_sum = 0.0;
        }
        let u: f64 = rng.random();
        let row = &cumulative[state];
        state = row
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| chain.matrix[state].iter().rposition(|&p| p > 0.0).unwrap_or(state));
    }

    let total = n_slots as f64;
    let occupancy: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mean: f64 = occupancy.iter().zip(&chain.throughput).map(|(o, x)| o * x).sum();
    let variance: f64 = occupancy
        .iter()
        .zip(&chain.throughput)
        .map(|(o, x)| o * (x - mean).powi(2))
        .sum();
    Ok(SimulationResult {
        duration_s: total * chain.slot,
        n_slots: Some(n_slots),
        occupancy,
        empirical_mean: mean,
        empirical_variance: variance,
        series,
        seed,
        events: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventOptions {
    pub duration_s: f64,
    pub seed: u64,
    pub bin_s: f64,
    /// Sector the link starts on (0 is the best).
    pub initial_state: usize,
}

impl EventOptions {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        Self {
            duration_s,
            seed,
            bin_s: DEFAULT_BIN,
            initial_state: 0,
        }
    }
}

pub fn simulate_events(scenario: &Scenario, duration_s: f64, seed: u64) -> Result<SimulationResult> {
    simulate_events_with(scenario, &EventOptions::new(duration_s, seed))
}

/// Transmit queue fed by a constant-rate source, in integer bits.
struct Queue {
    load: f64,
    capacity: u64,
    arrived: u64,
    level: u64,
    dropped: u64,
}

impl Queue {
    /// Credits everything the source has produced up to `now`; whatever
    /// does not fit is dropped.
    fn accrue(&mut self, now: f64) {
        let target = (self.load * now).floor() as u64;
        if target > self.arrived {
            self.level += target - self.arrived;
            self.arrived = target;
            if self.level > self.capacity {
                self.dropped += self.level - self.capacity;
                self.level = self.capacity;
            }
        }
    }
}

struct OnsetTracker {
    seen_any: bool,
    swept: bool,
}

impl OnsetTracker {
    fn onset(&mut self, c: &mut EventCounters) {
        c.blockages += 1;
        if self.seen_any {
            c.onset_pairs += 1;
            if !self.swept {
                c.pairs_without_sweep += 1;
            }
        }
        self.seen_any = true;
        self.swept = false;
    }
}

/// Continuous-time event simulation of one scenario.
///
/// Each channel access costs `t_acc`, then everything queued up to `a_max`
/// goes out at the current sector's rate. Blockage onsets are spaced by
/// Gaussian gaps redrawn when negative; while blocked nothing is served and
/// sweeps have no effect, and on unblocking the sector is drawn from
/// `p_recover`. A sweep on an unblocked link returns it to the best sector
/// and occupies the air for `t_sweep`.
pub fn simulate_events_with(scenario: &Scenario, opts: &EventOptions) -> Result<SimulationResult> {
    let cfg = &scenario.config;
    let end = opts.duration_s;
    if !(end > 0.0 && end.is_finite()) {
        return Err(Error::domain("simulation duration must be positive and finite"));
    }
    if !(opts.bin_s > 0.0) {
        return Err(Error::domain("bin width must be positive"));
    }
    let mcs = &cfg.rates.mcs_levels;
    let n = mcs.len();
    if opts.initial_state >= n {
        return Err(Error::domain(format!("initial state {} out of range", opts.initial_state)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gap_dist =
        Normal::new(cfg.blockage.mu, cfg.blockage.sigma).map_err(|e| Error::domain(e.to_string()))?;
    let gap = |rng: &mut ChaCha8Rng| loop {
        let g = gap_dist.sample(rng);
        if g >= 0.0 {
            break g;
        }
    };
    let recover = WeightedIndex::new(&cfg.rates.p_recover).map_err(|e| Error::domain(e.to_string()))?;

    let t_block = scenario.block_duration;
    let t_acc = scenario.access_time;
    let t_sweep = cfg.timing.t_sweep;
    let ssi = cfg.sweep.ssi;
    let a_max = cfg.queue.a_max.floor() as u64;
    let mut queue = Queue {
        load: scenario.load,
        capacity: cfg.queue.q.floor() as u64,
        arrived: 0,
        level: 0,
        dropped: 0,
    };

    let n_bins = (end / opts.bin_s).ceil() as usize;
    let mut bins = vec![0u64; n_bins.max(1)];
    let mut time_in = vec![0.0; n + 1];
    let mut counters = EventCounters::default();
    let mut tracker = OnsetTracker { seen_any: false, swept: false };

    let mut now = 0.0;
    let mut state = opts.initial_state;
    let mut next_onset = gap(&mut rng);
    let mut next_sweep = ssi;

    while now < end {
        if next_onset <= now && next_onset <= next_sweep {
            // blocked from the end of the in-flight frame
            tracker.onset(&mut counters);
            let mut block_end = now + t_block;
            next_onset += gap(&mut rng);
            loop {
                if next_onset.min(next_sweep) >= block_end {
                    break;
                }
                if next_onset <= next_sweep {
                    tracker.onset(&mut counters);
                    block_end = block_end.max(next_onset + t_block);
                    next_onset += gap(&mut rng);
                } else {
                    tracker.swept = true;
                    counters.sweeps_during_blockage += 1;
                    next_sweep += ssi;
                }
            }
            queue.accrue(block_end);
            time_in[n] += block_end - now;
            now = block_end;
            state = recover.sample(&mut rng);
            continue;
        }
        if next_sweep <= now {
            tracker.swept = true;
            counters.sweeps_effective += 1;
            state = 0;
            time_in[0] += t_sweep;
            now += t_sweep;
            next_sweep += ssi;
            continue;
        }

        let start = now;
        now += t_acc;
        queue.accrue(now);
        let frame = queue.level.min(a_max);
        if frame == 0 {
            if queue.load <= 0.0 {
                now = now.max(next_onset.min(next_sweep).min(end));
            }
            time_in[state] += now - start;
            continue;
        }
        now += frame as f64 / mcs[state];
        queue.level -= frame;
        counters.bits_delivered += frame;
        counters.frames += 1;
        let bin = ((now / opts.bin_s) as usize).min(bins.len() - 1);
        bins[bin] += frame;
        time_in[state] += now - start;
    }
    queue.accrue(now);

    counters.bits_arrived = queue.arrived;
    counters.bits_dropped = queue.dropped;
    counters.bits_queued_end = queue.level;

    let elapsed = now;
    let total_time: f64 = time_in.iter().sum();
    let occupancy = time_in.iter().map(|t| t / total_time).collect();
    let series: Vec<SeriesPoint> = bins
        .iter()
        .enumerate()
        .map(|(i, &bits)| SeriesPoint {
            time_s: i as f64 * opts.bin_s,
            throughput_bps: bits as f64 / opts.bin_s,
        })
        .collect();
    let full = ((end / opts.bin_s).floor() as usize).clamp(1, series.len());
    let bin_mean = series[..full].iter().map(|p| p.throughput_bps).sum::<f64>() / full as f64;
    let variance = series[..full]
        .iter()
        .map(|p| (p.throughput_bps - bin_mean).powi(2))
        .sum::<f64>()
        / full as f64;

    Ok(SimulationResult {
        duration_s: elapsed,
        n_slots: None,
        occupancy,
        empirical_mean: counters.bits_delivered as f64 / elapsed,
        empirical_variance: variance,
        series,
        seed: opts.seed,
        events: Some(counters),
    })
}
