//! The slotted Markov chain over `[L_H, SL_1 .. SL_{N−1}, B]` and its
//! stationary distribution.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::probability::{sweep_preemption_probability, PreemptionInputs};
use crate::scenario::{Scenario, SuboptimalExit};
use crate::throughput::{blockage_effect, state_throughput, BlockageOutcome, StateThroughput};

const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    Best,
    /// Suboptimal sector `i`, numbered from 1.
    Suboptimal(usize),
    Blocked,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Best => f.write_str("L_H"),
            StateLabel::Suboptimal(i) => write!(f, "SL_{i}"),
            StateLabel::Blocked => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub labels: Vec<StateLabel>,
    /// Row-stochastic transition probabilities per slot.
    pub matrix: Vec<Vec<f64>>,
    /// Throughput credited while in each state; the last entry is the
    /// blockage state.
    pub throughput: Vec<f64>,
    /// Slot length in seconds.
    pub slot: f64,
}

/// Everything needed to lay out the transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    /// Mean time between blockages, in slots.
    pub mu_slots: f64,
    /// Probability that a blockage beats the next sweep.
    pub p_c: f64,
    /// Mean residence in the blockage state, in slots (clamped to ≥ 1).
    pub blocked_dwell_slots: f64,
    pub p_recover: Vec<f64>,
    /// Throughput of each sector state, best first.
    pub sector_throughput: Vec<f64>,
    pub blocked_throughput: f64,
    pub sl_exit: SuboptimalExit,
    pub slot: f64,
}

/// The intermediate results behind a scenario's chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInputs {
    pub states: Vec<StateThroughput>,
    pub blockage: BlockageOutcome,
    pub p_c: f64,
    pub params: ChainParams,
}

impl ChainInputs {
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let cfg = &s.config;
        let mu_slots = s.mu_slots();
        if !(mu_slots > 1.0) {
            return Err(Error::domain(format!("mu spans {mu_slots} slots; need more than one")));
        }
        let states: Vec<StateThroughput> = cfg
            .rates
            .mcs_levels
            .iter()
            .map(|&mcs| {
                state_throughput(s.load, mcs, s.access_time, s.overhead, cfg.queue.a_max, cfg.queue.q)
            })
            .collect();
        let capacities: Vec<f64> = states.iter().map(|st| st.capacity).collect();
        let blockage = blockage_effect(s.block_duration, s.load, cfg.queue.q, &capacities, &cfg.rates.p_recover);
        let p_c = sweep_preemption_probability(&PreemptionInputs {
            mu: cfg.blockage.mu,
            sigma: cfg.blockage.sigma,
            s: cfg.sweep.ssi,
        });
        let params = ChainParams {
            mu_slots,
            p_c,
            blocked_dwell_slots: (blockage.t_b_mean / cfg.timing.slot).max(1.0),
            p_recover: cfg.rates.p_recover.clone(),
            sector_throughput: states.iter().map(|st| st.throughput).collect(),
            blocked_throughput: blockage.thp_b,
            sl_exit: cfg.sl_exit,
            slot: cfg.timing.slot,
        };
        Ok(Self {
            states,
            blockage,
            p_c,
            params,
        })
    }
}

pub fn build_chain(scenario: &Scenario) -> Result<MarkovChain> {
    assemble(&ChainInputs::from_scenario(scenario)?.params)
}

/// Lays out the transition matrix.
///
/// * `L_H`: stay `1 − 1/μ`, to `B` `1/μ`.
/// * `SL_i`: see [`SuboptimalExit`].
/// * `B`: stay `1 − 1/T_B`, to sector `j` `p_j/T_B`.
pub fn assemble(p: &ChainParams) -> Result<MarkovChain> {
    let n = p.sector_throughput.len();
    if n == 0 || p.p_recover.len() != n {
        return Err(Error::domain("need one recovery probability per sector state"));
    }
    if !(p.mu_slots > 1.0) {
        return Err(Error::domain(format!("mu spans {} slots; need more than one", p.mu_slots)));
    }
    if !(0.0..=1.0).contains(&p.p_c) {
        return Err(Error::domain(format!("p_C = {} is not a probability", p.p_c)));
    }
    let size = n + 1;
    let blocked = n;
    let leave = 1.0 / p.mu_slots;
    let mut matrix = vec![vec![0.0; size]; size];

    matrix[0][0] = 1.0 - leave;
    matrix[0][blocked] = leave;

    for i in 1..n {
        let row = &mut matrix[i];
        match p.sl_exit {
            SuboptimalExit::PerSlot => {
                row[0] = 1.0 - p.p_c;
                row[i] = p.p_c * (1.0 - leave);
                row[blocked] = p.p_c * leave;
            }
            SuboptimalExit::PerSojourn => {
                let dwell = (p.p_c * p.mu_slots).max(1.0);
                row[0] = (1.0 - p.p_c) / dwell;
                row[i] = 1.0 - 1.0 / dwell;
                row[blocked] = p.p_c / dwell;
            }
        }
    }

    let t_b = p.blocked_dwell_slots.max(1.0);
    matrix[blocked][blocked] = 1.0 - 1.0 / t_b;
    for (j, &pj) in p.p_recover.iter().enumerate() {
        matrix[blocked][j] += pj / t_b;
    }

    for (r, row) in matrix.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE || row.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Numerical(format!("row {r} is not stochastic (sum {sum})")));
        }
    }

    let mut labels = vec![StateLabel::Best];
    labels.extend((1..n).map(StateLabel::Suboptimal));
    labels.push(StateLabel::Blocked);
    let mut throughput = p.sector_throughput.clone();
    throughput.push(p.blocked_throughput);

    Ok(MarkovChain {
        labels,
        matrix,
        throughput,
        slot: p.slot,
    })
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn blocked_index(&self) -> usize {
        self.len() - 1
    }

    /// `‖πP − π‖∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| {
                let flow: f64 = (0..self.len()).map(|i| pi[i] * self.matrix[i][j]).sum();
                (flow - pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Matrix dump: a header row of state labels, then one row per state.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["state".to_string()];
        header.extend(self.labels.iter().map(ToString::to_string));
        w.write_record(&header).map_err(csv_io)?;
        for (label, row) in self.labels.iter().zip(&self.matrix) {
            let mut rec = vec![label.to_string()];
            rec.extend(row.iter().copied().map(csv_float));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv: {other:?}")),
    }
}

/// Shortest round-trip text, in exponent form for very large or small values.
pub(crate) fn csv_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

/// Solves `π = πP`, `Σπ = 1` directly: Gaussian elimination with partial
/// pivoting on `Pᵀ − I` with its last row replaced by the normalization.
pub fn stationary(chain: &MarkovChain) -> Result<StationaryDistribution> {
    let n = chain.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(n).enumerate() {
            *cell = chain.matrix[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for cell in a[n - 1].iter_mut() {
        *cell = 1.0;
    }

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Numerical(format!("singular balance system at column {col}")));
        }
        a.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=n {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r][c] * pi[c]).sum();
        pi[r] = (a[r][n] - tail) / a[r][r];
    }

    // unreachable states come back as ±rounding noise
    for x in pi.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-12 {
                return Err(Error::Numerical(format!("negative stationary mass {x}")));
            }
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);

    let residual = chain.residual(&pi);
    if residual > 1e-10 {
        return Err(Error::Numerical(format!("stationary residual {residual:e} exceeds 1e-10")));
    }
    Ok(StationaryDistribution { pi })
}
