//! Dwell-time probabilities of the slotted chain and the probability `p_C`
//! that a blockage arrives before the next periodic sector sweep.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Error function, absolute error below 1e-10 over the whole real line.
///
/// Maclaurin series below 2.5, continued fraction for `erfc` above.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        erf_series(x)
    } else if x < 6.5 {
        1.0 - erfc_continued_fraction(x)
    } else {
        // erfc(6.5) < 4e-20
        1.0
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    // term_n = (-1)^n x^(2n+1) / n!
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Geometric-dwell parameter of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellParams {
    pub p_stay: f64,
}

impl DwellParams {
    pub fn new(p_stay: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p_stay) {
            return Err(Error::domain(format!("p_stay must lie in [0, 1), got {p_stay}")));
        }
        Ok(Self { p_stay })
    }

    pub fn mean_dwell(&self) -> f64 {
        1.0 / (1.0 - self.p_stay)
    }
}

/// Per-slot stay probability of a state whose mean dwell is
/// `mean_dwell_slots`; the inverse of `T = 1/(1 − p_S)`.
///
/// A dwell of exactly one slot is accepted and yields 0.
pub fn stay_probability(mean_dwell_slots: f64) -> Result<f64> {
    if !(mean_dwell_slots >= 1.0) {
        return Err(Error::domain(format!(
            "mean dwell of {mean_dwell_slots} slots is shorter than one slot"
        )));
    }
    Ok(1.0 - 1.0 / mean_dwell_slots)
}

/// Probability of staying exactly `k` slots: `p^(k−1)·(1 − p)`.
pub fn dwell_pmf(p_stay: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("dwell length k must be at least one slot"));
    }
    let p = DwellParams::new(p_stay)?.p_stay;
    Ok(p.powf((k - 1) as f64) * (1.0 - p))
}

/// Inputs of the sweep-preemption probability. `s` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreemptionInputs {
    /// Mean inter-blockage time.
    pub mu: f64,
    /// Standard deviation of the inter-blockage time.
    pub sigma: f64,
    /// Sweep period.
    pub s: f64,
}

impl PreemptionInputs {
    pub fn new(mu: f64, sigma: f64, s: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) || !(s > 0.0) {
            return Err(Error::domain(format!(
                "preemption inputs need mu > 0, sigma > 0, s > 0 (got {mu}, {sigma}, {s})"
            )));
        }
        Ok(Self { mu, sigma, s })
    }
}

/// Probability that the next blockage arrives before the next periodic
/// sweep, with the time since the last sweep uniform on `[0, S)` and the
/// inter-blockage gap Gaussian. Clamped to `[0, 1]`; 1 for `S = ∞`.
pub fn sweep_preemption_probability(inputs: &PreemptionInputs) -> f64 {
    let PreemptionInputs { mu, sigma, s } = *inputs;
    if s.is_infinite() {
        return 1.0;
    }
    let scale = SQRT_2 * sigma;
    let two_var = 2.0 * sigma * sigma;
    let erf_part = (s - mu) / (2.0 * s) * (erf(mu / scale) - erf((mu - s) / scale));
    let exp_part = (2.0 / PI).sqrt() * sigma / (2.0 * s)
        * ((-mu * mu / two_var).exp() - (-(mu - s) * (mu - s) / two_var).exp());
    // + 0.0 turns a clamped -0 into 0
    (erf_part - exp_part).clamp(0.0, 1.0) + 0.0
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Samples the sweep/blockage race directly: time since the last sweep
/// uniform on `[0, S)`, gap to the next blockage from the Gaussian
/// truncated at zero (negative draws are redrawn).
pub fn sweep_preemption_mc(inputs: &PreemptionInputs, n_samples: u64, seed: u64) -> Result<McEstimate> {
    if inputs.s.is_infinite() {
        return Ok(McEstimate {
            estimate: 1.0,
            std_error: 0.0,
        });
    }
    if n_samples < 1000 {
        return Err(Error::domain(format!("need at least 1000 samples, got {n_samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Normal::new(inputs.mu, inputs.sigma).map_err(|e| Error::domain(e.to_string()))?;
    let mut hits = 0u64;
    for _ in 0..n_samples {
        let since_sweep = rng.random::<f64>() * inputs.s;
        let g = loop {
            let g = gap.sample(&mut rng);
            if g >= 0.0 {
                break g;
            }
        };
        if g < inputs.s - since_sweep {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let p = hits as f64 / n;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
    })
}
