//! Fitting chain parameters to a measured throughput trace: the number of
//! post-blockage throughput levels, their values, and how often the link
//! settles on each one after a blockage.

use std::io::Read;

use crate::error::{Error, Result};
use crate::scenario::LinkRates;

/// Samples below this share of the trace maximum count as blockage dips.
pub const DEFAULT_BLOCKAGE_THRESHOLD: f64 = 0.3;
/// A k-cluster fit is only preferred over k−1 clusters when it removes at
/// least half of the within-cluster variance.
pub const ELBOW_RATIO: f64 = 0.5;
/// Consecutive samples on one level needed to call it the recovered level.
pub const STABLE_RUN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time_s: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputTrace {
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    /// Level throughputs, descending.
    pub levels: Vec<f64>,
    pub p_recover: Vec<f64>,
    pub n_states: usize,
}

impl EmpiricalModel {
    /// Levels become the per-sector rates of a scenario.
    pub fn to_link_rates(&self) -> LinkRates {
        LinkRates {
            mcs_levels: self.levels.clone(),
            p_recover: self.p_recover.clone(),
        }
    }

    /// Config lines for the fitted model. No periodic sweeps are visible in
    /// a trace, so `ssi` is infinite.
    pub fn to_config_fragment(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        format!(
            "# fitted from trace: {} level(s)\nmcs_levels = {}\np_recover = {}\nssi = inf\n",
            self.n_states,
            list(&self.levels),
            list(&self.p_recover)
        )
    }
}

/// Reads the `time_s,throughput_bps` CSV format.
pub fn load_trace<R: Read>(source: R) -> Result<ThroughputTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header_err = |message: String| Error::Parse { line: 1, message };
    let headers = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "throughput_bps"] {
        return Err(header_err(format!(
            "expected header `time_s,throughput_bps`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut samples: Vec<Sample> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("{name} `{raw}` is not a finite number"),
                })
        };
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let time_s = field(0, "time_s")?;
        let throughput_bps = field(1, "throughput_bps")?;
        if throughput_bps < 0.0 {
            return Err(Error::Parse {
                line,
                message: format!("negative throughput {throughput_bps}"),
            });
        }
        if let Some(prev) = samples.last() {
            if !(time_s > prev.time_s) {
                return Err(Error::Parse {
                    line,
                    message: format!("time must be strictly increasing ({time_s} after {})", prev.time_s),
                });
            }
        }
        samples.push(Sample { time_s, throughput_bps });
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(ThroughputTrace { samples })
}

/// One-dimensional k-means result on sorted data.
#[derive(Debug, Clone, PartialEq)]
struct Clustering {
    centers: Vec<f64>,
    wcss: f64,
}

/// Lloyd's algorithm seeded at evenly spaced quantiles. `sorted` must be
/// ascending; clusters stay contiguous ranges of it, so centers stay sorted.
fn kmeans_1d(sorted: &[f64], k: usize) -> Clustering {
    let n = sorted.len();
    let mut centers: Vec<f64> = (0..k)
        .map(|i| sorted[(((i as f64 + 0.5) / k as f64) * n as f64) as usize])
        .collect();
    let mut assign = vec![0usize; n];
    for _ in 0..200 {
        let mut changed = false;
        let mut c = 0;
        for (i, &x) in sorted.iter().enumerate() {
            while c + 1 < k && (centers[c + 1] - x).abs() < (x - centers[c]).abs() {
                c += 1;
            }
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&x, &a) in sorted.iter().zip(&assign) {
            sums[a] += x;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let mut counts = vec![0usize; k];
    for &a in &assign {
        counts[a] += 1;
    }
    let wcss = sorted
        .iter()
        .zip(&assign)
        .map(|(&x, &a)| (x - centers[a]).powi(2))
        .sum();
    let centers = centers
        .into_iter()
        .zip(counts)
        .filter(|&(_, c)| c > 0)
        .map(|(x, _)| x)
        .collect();
    Clustering { centers, wcss }
}

fn nearest(levels: &[f64], x: f64) -> usize {
    levels
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map_or(0, |(i, _)| i)
}

/// Fits the post-blockage levels and the recovery probabilities.
///
/// Dips below `blockage_threshold × max` are set aside, the rest is
/// clustered for k = 1..=`max_levels`, and k is the one with the largest
/// relative drop in within-cluster variance, provided the drop removes at
/// least half of it. After each dip the first level held for
/// [`STABLE_RUN`] samples counts as the recovery target. A trace without
/// any dip falls back to the time share of each level.
pub fn extract_levels(
    trace: &ThroughputTrace,
    max_levels: usize,
    blockage_threshold: f64,
) -> Result<EmpiricalModel> {
    if max_levels == 0 {
        return Err(Error::domain("max_levels must be at least 1"));
    }
    if trace.samples.len() < 10 * max_levels {
        return Err(Error::domain(format!(
            "trace has {} samples; fitting up to {max_levels} levels needs at least {}",
            trace.samples.len(),
            10 * max_levels
        )));
    }
    if !(0.0..1.0).contains(&blockage_threshold) {
        return Err(Error::domain("blockage_threshold must lie in [0, 1)"));
    }

    let values: Vec<f64> = trace.samples.iter().map(|s| s.throughput_bps).collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    let cut = blockage_threshold * peak;
    let is_dip = |x: f64| x < cut;

    let mut plateau: Vec<f64> = values.iter().copied().filter(|&x| !is_dip(x)).collect();
    plateau.sort_by(f64::total_cmp);
    let distinct = 1 + plateau.windows(2).filter(|w| w[0] != w[1]).count();

    let mut best = kmeans_1d(&plateau, 1);
    let mut best_ratio = ELBOW_RATIO;
    let mut prev_wcss = best.wcss;
    for k in 2..=max_levels.min(distinct) {
        if prev_wcss <= 0.0 {
            break;
        }
        let fit = kmeans_1d(&plateau, k);
        let ratio = fit.wcss / prev_wcss;
        prev_wcss = fit.wcss;
        if ratio < best_ratio {
            best_ratio = ratio;
            best = fit;
        }
    }

    let mut levels = best.centers;
    levels.reverse();
    let n_states = levels.len();

    let labels: Vec<Option<usize>> = values
        .iter()
        .map(|&x| (!is_dip(x)).then(|| nearest(&levels, x)))
        .collect();

    let mut recoveries = vec![0usize; n_states];
    let mut i = 0;
    while i < labels.len() {
        if labels[i].is_some() {
            i += 1;
            continue;
        }
        while i < labels.len() && labels[i].is_none() {
            i += 1;
        }
        // first level held STABLE_RUN samples before the next dip
        let mut run_label = None;
        let mut run_len = 0;
        while i < labels.len() {
            let Some(l) = labels[i] else { break };
            if Some(l) == run_label {
                run_len += 1;
            } else {
                run_label = Some(l);
                run_len = 1;
            }
            i += 1;
            if run_len == STABLE_RUN {
                recoveries[l] += 1;
                break;
            }
        }
    }

    let total: usize = recoveries.iter().sum();
    let p_recover = if total > 0 {
        recoveries.iter().map(|&c| c as f64 / total as f64).collect()
    } else {
        let mut counts = vec![0usize; n_states];
        for l in labels.iter().flatten() {
            counts[*l] += 1;
        }
        let total: usize = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };

    Ok(EmpiricalModel {
        levels,
        p_recover,
        n_states,
    })
}
