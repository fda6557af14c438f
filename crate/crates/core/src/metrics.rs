//! Liquidity indicators, execution rate, volatility and stylized facts.
//!
//! All functions are pure over a [`RunTrace`]. Quantities that cannot be
//! computed (no two-sided quotes, no trading day with volume, zero return
//! variance) come back as `None` rather than a sentinel.

use serde::{Deserialize, Serialize};

use crate::engine::RunTrace;
use crate::orderbook::Owner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Sampling interval (steps) for the stylized-fact return series.
    pub return_interval: u64,
    /// Sampling interval (steps) for the volatility estimate.
    pub volatility_interval: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            return_interval: 100,
            volatility_interval: 1,
        }
    }
}

/// Lags reported for the squared-return autocorrelation.
pub const AUTOCORR_LAGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Volume {
    pub total: u64,
    /// Trades with the HFT on either side.
    pub hft: u64,
}

pub fn volume(trace: &RunTrace) -> Volume {
    Volume {
        total: trace.trades.len() as u64,
        hft: trace.trades.iter().filter(|t| t.involves_hft()).count() as u64,
    }
}

/// Mean best-ask minus best-bid over the steps that had both quotes.
pub fn tightness(trace: &RunTrace) -> Option<f64> {
    let tick = trace.tick_size();
    let (sum, count) = trace
        .steps
        .iter()
        .filter_map(|s| Some(s.best_ask?.0 - s.best_bid?.0))
        .fold((0i64, 0u64), |(sum, n), spread| (sum + spread, n + 1));
    (count > 0).then(|| tick.get() * sum as f64 / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayStats {
    pub high: f64,
    pub low: f64,
    pub volume: u64,
}

/// Trade-price range and volume for each complete day of the trace. Days
/// without trades are `None`.
pub fn daily_stats(trace: &RunTrace) -> Vec<Option<DayStats>> {
    let t_day = trace.t_day.max(1);
    let days = (trace.t_end() / t_day) as usize;
    let mut out: Vec<Option<DayStats>> = vec![None; days];
    for trade in &trace.trades {
        let day = ((trade.time - 1) / t_day) as usize;
        let Some(slot) = out.get_mut(day) else { continue };
        let s = slot.get_or_insert(DayStats {
            high: trade.price,
            low: trade.price,
            volume: 0,
        });
        s.high = s.high.max(trade.price);
        s.low = s.low.min(trade.price);
        s.volume += 1;
    }
    out
}

/// Mean over days of `(high - low) / volume`; zero-volume days are skipped.
pub fn price_turnover_ratio(days: &[Option<DayStats>]) -> Option<f64> {
    let ratios: Vec<f64> = days
        .iter()
        .flatten()
        .map(|d| (d.high - d.low) / d.volume as f64)
        .collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}

pub fn resiliency(trace: &RunTrace) -> Option<f64> {
    price_turnover_ratio(&daily_stats(trace))
}

/// Per-step average of `(bid_depth + ask_depth) / 2`.
pub fn depth(trace: &RunTrace) -> f64 {
    if trace.steps.is_empty() {
        return 0.0;
    }
    let total: u64 = trace
        .steps
        .iter()
        .map(|s| u64::from(s.bid_depth) + u64::from(s.ask_depth))
        .sum();
    total as f64 / 2.0 / trace.steps.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRate {
    /// Executions of any resting order per new normal-agent order.
    pub all_resting: f64,
    /// Executions of resting normal-agent orders only.
    pub normal_resting: f64,
}

pub fn execution_rate(trace: &RunTrace) -> Option<ExecutionRate> {
    let orders = trace.normal_orders();
    if orders == 0 {
        return None;
    }
    // Every one-share trade consumes exactly one resting order.
    let all = trace.trades.len() as f64;
    let normal = trace
        .trades
        .iter()
        .filter(|t| matches!(t.resting_owner(), Owner::Normal(_)))
        .count() as f64;
    Some(ExecutionRate {
        all_resting: all / orders as f64,
        normal_resting: normal / orders as f64,
    })
}

/// Log returns of `prices` sampled every `interval` steps.
pub fn sampled_log_returns(prices: &[f64], interval: u64) -> Vec<f64> {
    let interval = interval.max(1) as usize;
    prices
        .iter()
        .step_by(interval)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let m = mean(xs);
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt())
}

/// `m4 / m2^2 - 3` from population central moments.
pub fn excess_kurtosis(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d = (x - m) * (x - m);
        (m2 + d, m4 + d * d)
    });
    let n = xs.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    (m2 > 0.0).then(|| m4 / (m2 * m2) - 3.0)
}

/// Sample autocorrelation at `lag`, normalised by the full-series variance.
pub fn autocorrelation(xs: &[f64], lag: usize) -> Option<f64> {
    if lag >= xs.len() {
        return None;
    }
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    if denom <= 0.0 {
        return None;
    }
    let num: f64 = xs
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum();
    Some(num / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StylizedFacts {
    pub kurtosis: f64,
    pub sq_return_autocorr: [f64; AUTOCORR_LAGS],
}

impl StylizedFacts {
    pub fn from_returns(returns: &[f64]) -> Option<Self> {
        let kurtosis = excess_kurtosis(returns)?;
        let squared: Vec<f64> = returns.iter().map(|r| r * r).collect();
        let mut sq_return_autocorr = [0.0; AUTOCORR_LAGS];
        for (lag, slot) in sq_return_autocorr.iter_mut().enumerate() {
            *slot = autocorrelation(&squared, lag + 1)?;
        }
        Some(Self {
            kurtosis,
            sq_return_autocorr,
        })
    }
}

pub fn stylized_facts(prices: &[f64], interval: u64) -> Option<StylizedFacts> {
    StylizedFacts::from_returns(&sampled_log_returns(prices, interval))
}

/// Standard deviation of log returns sampled every `interval` steps, as a
/// fraction (multiply by 100 for percent).
pub fn volatility(prices: &[f64], interval: u64) -> Option<f64> {
    std_dev(&sampled_log_returns(prices, interval))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiquidityReport {
    pub volume: u64,
    pub hft_volume: u64,
    pub tightness: Option<f64>,
    pub resiliency: Option<f64>,
    pub depth: f64,
    pub execution_rate: Option<f64>,
    pub execution_rate_normal_resting: Option<f64>,
    pub volatility: Option<f64>,
    pub kurtosis: Option<f64>,
    pub sq_return_autocorr: Option<[f64; AUTOCORR_LAGS]>,
}

impl LiquidityReport {
    pub fn from_trace(trace: &RunTrace, config: &MetricsConfig) -> Self {
        let vol = volume(trace);
        let exec = execution_rate(trace);
        let facts = stylized_facts(&trace.prices, config.return_interval);
        Self {
            volume: vol.total,
            hft_volume: vol.hft,
            tightness: tightness(trace),
            resiliency: resiliency(trace),
            depth: depth(trace),
            execution_rate: exec.map(|e| e.all_resting),
            execution_rate_normal_resting: exec.map(|e| e.normal_resting),
            volatility: volatility(&trace.prices, config.volatility_interval),
            kurtosis: facts.map(|f| f.kurtosis),
            sq_return_autocorr: facts.map(|f| f.sq_return_autocorr),
        }
    }

    pub fn stylized(&self) -> Option<StylizedFacts> {
        Some(StylizedFacts {
            kurtosis: self.kurtosis?,
            sq_return_autocorr: self.sq_return_autocorr?,
        })
    }
}
