//! Flat `key = value` scenario files.
//!
//! ```text
//! # blockage every 5 s on average
//! mu = 5.0
//! ssi = inf
//! mcs_levels = 3.85e9, 1.925e9, 1.155e9
//! p_recover = 1/3, 1/3, 1/3
//! ```
//!
//! Keys are the field names of the scenario types. Missing keys keep their
//! default value, unknown keys are an error. Numbers may be written as
//! `a/b` fractions and `inf` is accepted where infinity is meaningful.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scenario::{ScenarioConfig, SuboptimalExit};

pub const KEYS: &[&str] = &[
    "t_difs",
    "t_sifs",
    "t_ack",
    "t_slot_mac",
    "cw_min",
    "t_sweep",
    "slot",
    "mu",
    "sigma",
    "alpha",
    "d",
    "v",
    "mcs_levels",
    "p_recover",
    "q",
    "a_max",
    "a_factor",
    "ssi",
    "sl_exit",
];

pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    match s {
        "inf" | "+inf" | "infinity" => return Some(f64::INFINITY),
        _ => {}
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num.trim().parse().ok()?;
        let den: f64 = den.trim().parse().ok()?;
        return Some(num / den);
    }
    let x: f64 = s.parse().ok()?;
    // Rust's parser accepts "NaN"; nothing in a scenario is meant to be NaN.
    (!x.is_nan()).then_some(x)
}

fn parse_list(raw: &str) -> Option<Vec<f64>> {
    raw.split(',').map(parse_number).collect()
}

impl ScenarioConfig {
    /// Applies one `key = value` assignment on top of the current values.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = || parse_number(value).ok_or_else(|| format!("`{value}` is not a number"));
        match key {
            "t_difs" => self.timing.t_difs = num()?,
            "t_sifs" => self.timing.t_sifs = num()?,
            "t_ack" => self.timing.t_ack = num()?,
            "t_slot_mac" => self.timing.t_slot_mac = num()?,
            "cw_min" => {
                self.timing.cw_min = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{value}` is not a non-negative integer"))?
            }
            "t_sweep" => self.timing.t_sweep = num()?,
            "slot" => self.timing.slot = num()?,
            "mu" => self.blockage.mu = num()?,
            "sigma" => self.blockage.sigma = num()?,
            "alpha" => self.blockage.alpha = num()?,
            "d" => self.blockage.d = num()?,
            "v" => self.blockage.v = num()?,
            "mcs_levels" => {
                self.rates.mcs_levels =
                    parse_list(value).ok_or_else(|| format!("`{value}` is not a number list"))?
            }
            "p_recover" => {
                self.rates.p_recover =
                    parse_list(value).ok_or_else(|| format!("`{value}` is not a number list"))?
            }
            "q" => self.queue.q = num()?,
            "a_max" => self.queue.a_max = num()?,
            "a_factor" => self.queue.a_factor = num()?,
            "ssi" => self.sweep.ssi = num()?,
            "sl_exit" => {
                self.sl_exit = SuboptimalExit::parse(value.trim())
                    .ok_or_else(|| format!("sl_exit must be `sojourn` or `per_slot`, got `{value}`"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults. Does not validate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set(key.trim(), value)
                .map_err(|message| Error::Parse { line, message })?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Renders every key; `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let t = &self.timing;
        let b = &self.blockage;
        let _ = writeln!(s, "t_difs = {}", t.t_difs);
        let _ = writeln!(s, "t_sifs = {}", t.t_sifs);
        let _ = writeln!(s, "t_ack = {}", t.t_ack);
        let _ = writeln!(s, "t_slot_mac = {}", t.t_slot_mac);
        let _ = writeln!(s, "cw_min = {}", t.cw_min);
        let _ = writeln!(s, "t_sweep = {}", t.t_sweep);
        let _ = writeln!(s, "slot = {}", t.slot);
        let _ = writeln!(s, "mu = {}", b.mu);
        let _ = writeln!(s, "sigma = {}", b.sigma);
        let _ = writeln!(s, "alpha = {}", b.alpha);
        let _ = writeln!(s, "d = {}", b.d);
        let _ = writeln!(s, "v = {}", b.v);
        let _ = writeln!(s, "mcs_levels = {}", list(&self.rates.mcs_levels));
        let _ = writeln!(s, "p_recover = {}", list(&self.rates.p_recover));
        let _ = writeln!(s, "q = {}", self.queue.q);
        let _ = writeln!(s, "a_max = {}", self.queue.a_max);
        let _ = writeln!(s, "a_factor = {}", self.queue.a_factor);
        let _ = writeln!(s, "ssi = {}", self.sweep.ssi);
        let _ = writeln!(s, "sl_exit = {}", self.sl_exit.as_str());
        s
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
