//! Market parameters and the flat `key = value` configuration format.
//!
//! Keys mirror the model's symbol names:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `t_end` | simulated steps | 1,000,000 |
//! | `n` | normal agents | 1,000 |
//! | `lag` | look-back lag for signals (defaults to `n`) | `n` |
//! | `w1_max`, `w2_max`, `u_max` | weight caps | 1, 10, 1 |
//! | `tau_max` | max technical horizon | 10,000 |
//! | `warmup` | initial steps priced without the technical term | 20,000 |
//! | `sigma_eps` | noise std-dev | 0.06 |
//! | `est` | order price variation coefficient | 0.003 |
//! | `t_c` | order lifetime | 20,000 |
//! | `tick` | tick size | 0.1 |
//! | `p_f` | fundamental price | 10,000 |
//! | `k_l`, `m` | learning speed, reset probability | 4, 0.01 |
//! | `theta_h`, `w_h` | HFT spread, inventory skew | 0.002, 5e-8 |
//! | `pr_o` | order probability | 1.0 |
//! | `hft` | HFT participates | false |
//! | `hft_on_abstain` | HFT re-quotes on abstention steps | true |
//! | `t_day` | steps per day | 20,000 |
//! | `seed` | master seed | 0 |

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentLimits, LearningParams};
use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketParams {
    pub t_end: u64,
    pub n: u32,
    /// Look-back lag for the fundamental/technical signals and the learning
    /// return. `None` uses the agent count.
    pub lag: Option<u64>,
    pub w1_max: f64,
    pub w2_max: f64,
    pub u_max: f64,
    pub tau_max: u64,
    /// Steps `1..=warmup` price orders from the fundamental and noise terms
    /// only, while the book and price history fill up.
    pub warmup: u64,
    pub sigma_eps: f64,
    pub est: f64,
    pub t_c: u64,
    pub tick: f64,
    pub p_f: f64,
    pub k_l: f64,
    pub m: f64,
    pub theta_h: f64,
    pub w_h: f64,
    pub pr_o: f64,
    pub hft: bool,
    pub hft_on_abstain: bool,
    pub t_day: u64,
    pub seed: u64,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            t_end: 1_000_000,
            n: 1_000,
            lag: None,
            w1_max: 1.0,
            w2_max: 10.0,
            u_max: 1.0,
            tau_max: 10_000,
            warmup: 20_000,
            sigma_eps: 0.06,
            est: 0.003,
            t_c: 20_000,
            tick: 0.1,
            p_f: 10_000.0,
            k_l: 4.0,
            m: 0.01,
            theta_h: 0.002,
            w_h: 5.0e-8,
            pr_o: 1.0,
            hft: false,
            hft_on_abstain: true,
            t_day: 20_000,
            seed: 0,
        }
    }
}

/// Every key accepted by [`MarketParams::set`], in canonical order.
pub const KEYS: &[&str] = &[
    "t_end",
    "n",
    "lag",
    "w1_max",
    "w2_max",
    "u_max",
    "tau_max",
    "warmup",
    "sigma_eps",
    "est",
    "t_c",
    "tick",
    "p_f",
    "k_l",
    "m",
    "theta_h",
    "w_h",
    "pr_o",
    "hft",
    "hft_on_abstain",
    "t_day",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().replace('_', "").parse::<T>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected a boolean".into(),
        }),
    }
}

impl MarketParams {
    pub fn lag(&self) -> u64 {
        self.lag.unwrap_or(u64::from(self.n))
    }

    pub fn agent_limits(&self) -> AgentLimits {
        AgentLimits {
            w1_max: self.w1_max,
            w2_max: self.w2_max,
            u_max: self.u_max,
            tau_max: self.tau_max,
        }
    }

    pub fn learning(&self) -> LearningParams {
        LearningParams {
            speed: self.k_l,
            reset_prob: self.m,
        }
    }

    /// Set one parameter from its textual form. `delta_p` is accepted as an
    /// alias of `tick`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "t_end" => self.t_end = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "lag" => {
                self.lag = match value.trim() {
                    "" | "n" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "w1_max" => self.w1_max = parse(key, value)?,
            "w2_max" => self.w2_max = parse(key, value)?,
            "u_max" => self.u_max = parse(key, value)?,
            "tau_max" => self.tau_max = parse(key, value)?,
            "warmup" => self.warmup = parse(key, value)?,
            "sigma_eps" => self.sigma_eps = parse(key, value)?,
            "est" => self.est = parse(key, value)?,
            "t_c" => self.t_c = parse(key, value)?,
            "tick" | "delta_p" => self.tick = parse(key, value)?,
            "p_f" => self.p_f = parse(key, value)?,
            "k_l" => self.k_l = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "theta_h" => self.theta_h = parse(key, value)?,
            "w_h" => self.w_h = parse(key, value)?,
            "pr_o" => self.pr_o = parse(key, value)?,
            "hft" => self.hft = parse_bool(key, value)?,
            "hft_on_abstain" => self.hft_on_abstain = parse_bool(key, value)?,
            "t_day" => self.t_day = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(ConfigError::UnknownParameter(key.to_string())),
        }
        Ok(())
    }

    /// Apply a `key = value` document on top of `self`. Blank lines and
    /// `#` comments are ignored.
    pub fn apply_config(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_config(text: &str) -> Result<Self, ConfigError> {
        let mut p = Self::default();
        p.apply_config(text)?;
        Ok(p)
    }

    /// Render as a config document that [`MarketParams::from_config`] reads
    /// back to an identical value.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "t_end" => self.t_end.to_string(),
            "n" => self.n.to_string(),
            "lag" => self.lag.map_or_else(|| "n".to_string(), |l| l.to_string()),
            "w1_max" => self.w1_max.to_string(),
            "w2_max" => self.w2_max.to_string(),
            "u_max" => self.u_max.to_string(),
            "tau_max" => self.tau_max.to_string(),
            "warmup" => self.warmup.to_string(),
            "sigma_eps" => self.sigma_eps.to_string(),
            "est" => self.est.to_string(),
            "t_c" => self.t_c.to_string(),
            "tick" | "delta_p" => self.tick.to_string(),
            "p_f" => self.p_f.to_string(),
            "k_l" => self.k_l.to_string(),
            "m" => self.m.to_string(),
            "theta_h" => self.theta_h.to_string(),
            "w_h" => self.w_h.to_string(),
            "pr_o" => self.pr_o.to_string(),
            "hft" => self.hft.to_string(),
            "hft_on_abstain" => self.hft_on_abstain.to_string(),
            "t_day" => self.t_day.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Scale the run length, keeping per-step dynamics (including `t_c`)
    /// unchanged. The result is rounded to whole days.
    pub fn scaled(&self, factor: f64) -> Result<Self, ConfigError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(ConfigError::invalid(format!("scale must be positive, got {factor}")));
        }
        let days = ((self.t_end as f64 * factor) / self.t_day as f64).round().max(1.0);
        Ok(Self {
            t_end: days as u64 * self.t_day,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(format!("{name} must be non-negative, got {v}")))
            }
        };
        let probability = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::invalid(format!("{name} must lie in [0, 1], got {v}")))
            }
        };

        if self.n == 0 {
            return Err(ConfigError::invalid("n must be at least 1"));
        }
        if self.lag == Some(0) {
            return Err(ConfigError::invalid("lag must be at least 1"));
        }
        if self.tau_max == 0 {
            return Err(ConfigError::invalid("tau_max must be at least 1"));
        }
        if self.t_c == 0 {
            return Err(ConfigError::invalid("t_c must be at least 1"));
        }
        if self.t_day == 0 {
            return Err(ConfigError::invalid("t_day must be at least 1"));
        }
        positive("tick", self.tick)?;
        positive("p_f", self.p_f)?;
        non_negative("w1_max", self.w1_max)?;
        non_negative("w2_max", self.w2_max)?;
        non_negative("u_max", self.u_max)?;
        non_negative("sigma_eps", self.sigma_eps)?;
        non_negative("k_l", self.k_l)?;
        non_negative("theta_h", self.theta_h)?;
        if !self.w_h.is_finite() {
            return Err(ConfigError::invalid("w_h must be finite"));
        }
        if !(self.est > 0.0 && self.est <= 1.0) {
            return Err(ConfigError::invalid(format!("est must lie in (0, 1], got {}", self.est)));
        }
        probability("m", self.m)?;
        probability("pr_o", self.pr_o)?;
        Ok(())
    }

    /// Validation for runs whose metrics include daily aggregates.
    pub fn validate_whole_days(&self) -> Result<(), ConfigError> {
        if !self.t_end.is_multiple_of(self.t_day) {
            return Err(ConfigError::invalid(format!(
                "t_end ({}) must be a multiple of t_day ({})",
                self.t_end, self.t_day
            )));
        }
        Ok(())
    }
}
