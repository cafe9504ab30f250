//! Parameter grids over a base scenario, evaluated analytically or by the
//! event simulator, with CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::analyze;
use crate::chain::{csv_float, csv_io};
use crate::config::parse_number;
use crate::error::{Error, Result, Violation};
use crate::probability::{sweep_preemption_probability, PreemptionInputs};
use crate::scenario::{validate, ScenarioConfig};
use crate::simulate::simulate_events;

pub const CSV_HEADER: [&str; 7] = ["param", "mu_s", "mean_bps", "std_bps", "variance", "pi_B", "p_C"];

/// Simulated runs last this many mean inter-blockage times by default.
pub const DEFAULT_SIM_BLOCKAGES: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    AFactor,
    Ssi,
    Speed,
    Mu,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::AFactor => "a_factor",
            SweepParameter::Ssi => "ssi",
            SweepParameter::Speed => "v",
            SweepParameter::Mu => "mu",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParameter::AFactor => cfg.queue.a_factor = value,
            SweepParameter::Ssi => cfg.sweep.ssi = value,
            SweepParameter::Speed => cfg.blockage.v = value,
            SweepParameter::Mu => cfg.blockage.mu = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a_factor" => Ok(SweepParameter::AFactor),
            "ssi" => Ok(SweepParameter::Ssi),
            "v" => Ok(SweepParameter::Speed),
            "mu" => Ok(SweepParameter::Mu),
            other => Err(Error::domain(format!(
                "unknown sweep parameter `{other}` (expected a_factor, ssi, v or mu)"
            ))),
        }
    }
}

fn number(raw: &str) -> Result<f64> {
    parse_number(raw).ok_or_else(|| Error::domain(format!("`{raw}` is not a number")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        log: bool,
    },
}

impl SweepValues {
    /// Parses `a,b,c`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(number)
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepValues::List(values))
    }

    /// Parses `min:max:count` or `min:max:count:log`.
    pub fn parse_range(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::domain(format!("range `{s}` must be min:max:count[:log]"));
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let min = number(parts[0])?;
        let max = number(parts[1])?;
        let count = parts[2].parse::<usize>().map_err(|_| bad())?;
        let log = match parts.get(3) {
            None | Some(&"lin") => false,
            Some(&"log") => true,
            Some(_) => return Err(bad()),
        };
        Ok(SweepValues::Range { min, max, count, log })
    }

    /// Grid points in order.
    pub fn points(&self) -> Result<Vec<f64>> {
        let points = match *self {
            SweepValues::List(ref v) => v.clone(),
            SweepValues::Range { min, max, count, log } => {
                if count == 0 {
                    return Err(Error::domain("range count must be at least 1"));
                }
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::domain(format!("range needs finite min ≤ max (got {min}:{max})")));
                }
                if log && min <= 0.0 {
                    return Err(Error::domain("log range needs min > 0"));
                }
                if count == 1 {
                    vec![min]
                } else {
                    let steps = (count - 1) as f64;
                    (0..count)
                        .map(|i| {
                            let u = i as f64 / steps;
                            if i + 1 == count {
                                max
                            } else if log {
                                (min.ln() + u * (max.ln() - min.ln())).exp()
                            } else {
                                min + u * (max - min)
                            }
                        })
                        .collect()
                }
            }
        };
        if points.is_empty() {
            return Err(Error::domain("sweep values are empty"));
        }
        if points.iter().any(|x| x.is_nan()) {
            return Err(Error::domain("sweep values contain NaN"));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: SweepValues,
    /// Second axis; each μ gets the full grid. Without it the base μ is used.
    pub cross_mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMode {
    Analytic,
    /// Event simulation; `None` runs for [`DEFAULT_SIM_BLOCKAGES`] × μ.
    Simulate { duration_s: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub mu_s: f64,
    pub mean_bps: f64,
    pub std_bps: f64,
    pub variance: f64,
    pub pi_b: f64,
    pub p_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_io)?;
        for r in &self.rows {
            w.write_record([
                csv_float(r.param),
                csv_float(r.mu_s),
                csv_float(r.mean_bps),
                csv_float(r.std_bps),
                csv_float(r.variance),
                csv_float(r.pi_b),
                csv_float(r.p_c),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows sharing one μ, in grid order.
    pub fn slice(&self, mu: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.mu_s == mu).collect()
    }
}

/// Evaluates every grid point of `spec` on top of `base`.
///
/// Grid points run in parallel; rows come back in grid order (μ outer,
/// parameter inner). In simulate mode point `i` uses seed `seed + i`, and
/// the analytic mode ignores the seed. Every point is validated before any
/// is evaluated, so an out-of-range value fails the whole sweep.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec, mode: SweepMode, seed: u64) -> Result<SweepResult> {
    let values = spec.values.points()?;
    let mus = match &spec.cross_mu {
        Some(list) if list.is_empty() => return Err(Error::domain("mu list is empty")),
        Some(list) => list.clone(),
        None => vec![base.blockage.mu],
    };

    let mut scenarios = Vec::with_capacity(mus.len() * values.len());
    let mut violations = Vec::new();
    for &mu in &mus {
        for &value in &values {
            let mut cfg = base.clone();
            cfg.blockage.mu = mu;
            spec.parameter.apply(&mut cfg, value);
            match validate(&cfg) {
                Ok(s) => scenarios.push((value, s)),
                Err(Error::Invalid(vs)) => violations.extend(vs.into_iter().map(|v| Violation {
                    field: format!("{}={value}, mu={mu}: {}", spec.parameter, v.field),
                    message: v.message,
                })),
                Err(e) => violations.push(Violation {
                    field: format!("{}={value}, mu={mu}", spec.parameter),
                    message: e.to_string(),
                }),
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }

    let rows = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, (value, scenario))| {
            let blockage = &scenario.config.blockage;
            let p_c = sweep_preemption_probability(&PreemptionInputs::new(
                blockage.mu,
                blockage.sigma,
                scenario.config.sweep.ssi,
            )?);
            let (mean, variance, pi_b) = match mode {
                SweepMode::Analytic => {
                    let a = analyze(scenario)?;
                    (a.summary.mean, a.summary.variance, a.pi_blocked())
                }
                SweepMode::Simulate { duration_s } => {
                    let duration = duration_s.unwrap_or(DEFAULT_SIM_BLOCKAGES * blockage.mu);
                    let r = simulate_events(scenario, duration, seed.wrapping_add(i as u64))?;
                    let pi_b = r.occupancy.last().copied().unwrap_or(0.0);
                    (r.empirical_mean, r.empirical_variance, pi_b)
                }
            };
            Ok(SweepRow {
                param: *value,
                mu_s: blockage.mu,
                mean_bps: mean,
                std_bps: variance.sqrt(),
                variance,
                pi_b,
                p_c,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        parameter: spec.parameter,
        rows,
    })
}
