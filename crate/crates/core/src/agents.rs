//! Trading rules for the two agent types.
//!
//! Normal agents blend a fundamental, a technical and a noise signal into an
//! expected log-return, turn it into an expected price, and place a single
//! one-share order whose price is drawn around that expectation. Before each
//! order their strategy weights adapt to the realised return.
//!
//! The HFT is a single market maker that quotes both sides around the
//! mid-price with a fixed spread, shifting both quotes against its inventory.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::orderbook::{OrderId, Side, TickSize, Ticks};

/// Market price series `P^0, P^1, ...`. Indices before the start of the
/// series resolve to the fundamental price.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    fundamental: f64,
    prices: Vec<f64>,
}

impl PriceHistory {
    /// A history holding only `P^0 = fundamental`.
    pub fn new(fundamental: f64) -> Self {
        Self::with_capacity(fundamental, 1)
    }

    pub fn with_capacity(fundamental: f64, capacity: usize) -> Self {
        let mut prices = Vec::with_capacity(capacity.max(1));
        prices.push(fundamental);
        Self { fundamental, prices }
    }

    /// Build a history from an explicit series; `prices[0]` is `P^0`.
    pub fn from_prices(fundamental: f64, prices: Vec<f64>) -> Self {
        assert!(!prices.is_empty(), "history needs P^0");
        Self { fundamental, prices }
    }

    pub fn fundamental(&self) -> f64 {
        self.fundamental
    }

    /// `P^k`; negative `k` maps to the fundamental price.
    ///
    /// # Panics
    /// If `k` lies beyond the most recent recorded price.
    pub fn at(&self, k: i64) -> f64 {
        if k < 0 {
            self.fundamental
        } else {
            self.prices[k as usize]
        }
    }

    pub fn last(&self) -> f64 {
        *self.prices.last().expect("non-empty")
    }

    /// Index of the most recent price.
    pub fn latest_time(&self) -> u64 {
        (self.prices.len() - 1) as u64
    }

    pub fn push(&mut self, price: f64) {
        self.prices.push(price);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.prices
    }
}

/// The fundamental and technical return signals seen by one agent at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySignals {
    /// `ln(P_f / P^{t-lag})`
    pub fundamental: f64,
    /// `ln(P^{t-lag} / P^{t-lag-tau})`
    pub technical: f64,
}

impl StrategySignals {
    pub fn observe(hist: &PriceHistory, t: u64, lag: u64, tau: u64) -> Self {
        let t = t as i64;
        let lagged = hist.at(t - lag as i64);
        let older = hist.at(t - lag as i64 - tau as i64);
        Self {
            fundamental: (hist.fundamental() / lagged).ln(),
            technical: (lagged / older).ln(),
        }
    }
}

/// Realised return `ln(P^{t-1} / P^{t-lag})` that drives learning.
pub fn realized_return(hist: &PriceHistory, t: u64, lag: u64) -> f64 {
    let t = t as i64;
    (hist.at(t - 1) / hist.at(t - lag as i64)).ln()
}

/// `P^{t-1} * exp(r_e)`.
pub fn expected_price(expected_return: f64, last_price: f64) -> f64 {
    last_price * expected_return.exp()
}

/// Buy when the expectation sits above the drawn price, sell when below,
/// nothing on a tie.
pub fn decide_side(expected: f64, drawn: f64) -> Option<Side> {
    if expected > drawn {
        Some(Side::Buy)
    } else if expected < drawn {
        Some(Side::Sell)
    } else {
        None
    }
}

/// Draw an order price from `Normal(expected, expected * est)` and pick the
/// side. Non-positive draws are redrawn.
pub fn draw_order<R: Rng + ?Sized>(expected: f64, est: f64, rng: &mut R) -> Option<(Side, f64)> {
    let sd = expected * est;
    let price = loop {
        let z: f64 = StandardNormal.sample(rng);
        let p = expected + sd * z;
        if p > 0.0 {
            break p;
        }
    };
    decide_side(expected, price).map(|side| (side, price))
}

/// One weight-learning step. `rate` is `k_l * |r_l| * q`: with matching
/// signs the weight moves toward `w_max`, otherwise toward zero.
pub fn learning_update(weight: f64, w_max: f64, rate: f64, same_sign: bool) -> f64 {
    if same_sign {
        weight + rate * (w_max - weight)
    } else {
        weight - rate * weight
    }
}

fn same_sign(signal: f64, realized: f64) -> bool {
    (signal > 0.0 && realized > 0.0)
        || (signal < 0.0 && realized < 0.0)
        || (signal == 0.0 && realized == 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentLimits {
    pub w1_max: f64,
    pub w2_max: f64,
    pub u_max: f64,
    pub tau_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    /// Learning speed `k_l`.
    pub speed: f64,
    /// Per-weight reset probability `m`.
    pub reset_prob: f64,
}

/// Result of one learning invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnOutcome {
    /// Updates where `k_l * |r_l| * q` exceeded 1 and had to be clamped.
    pub clamped: u32,
    pub resets: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalAgent {
    /// Fundamental weight.
    pub w1: f64,
    /// Technical weight.
    pub w2: f64,
    noise_weight: f64,
    horizon: u64,
}

impl NormalAgent {
    pub fn new(w1: f64, w2: f64, noise_weight: f64, horizon: u64) -> Self {
        Self {
            w1,
            w2,
            noise_weight,
            horizon,
        }
    }

    /// Weights uniform on `[0, max)`, horizon uniform on `1..=tau_max`.
    pub fn random<R: Rng + ?Sized>(limits: &AgentLimits, rng: &mut R) -> Self {
        Self {
            w1: rng.random::<f64>() * limits.w1_max,
            w2: rng.random::<f64>() * limits.w2_max,
            noise_weight: rng.random::<f64>() * limits.u_max,
            horizon: rng.random_range(1..=limits.tau_max),
        }
    }

    pub fn noise_weight(&self) -> f64 {
        self.noise_weight
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Weighted average of the three signals; `None` if every weight is zero.
    pub fn expected_return(&self, signals: StrategySignals, noise: f64) -> Option<f64> {
        let total = self.w1 + self.w2 + self.noise_weight;
        if total <= 0.0 {
            return None;
        }
        Some(
            (self.w1 * signals.fundamental + self.w2 * signals.technical + self.noise_weight * noise)
                / total,
        )
    }

    /// Adapt both strategy weights to the realised return, then reset each
    /// one independently with probability `m`.
    pub fn learn<R: Rng + ?Sized>(
        &mut self,
        signals: StrategySignals,
        realized: f64,
        limits: &AgentLimits,
        params: &LearningParams,
        rng: &mut R,
    ) -> LearnOutcome {
        let mut outcome = LearnOutcome::default();
        let slots = [
            (&mut self.w1, limits.w1_max, signals.fundamental),
            (&mut self.w2, limits.w2_max, signals.technical),
        ];
        for (weight, w_max, signal) in slots {
            let q: f64 = rng.random();
            let mut rate = params.speed * realized.abs() * q;
            if rate > 1.0 {
                log::warn!("learning rate {rate} exceeds 1 (r_l = {realized}); clamping");
                outcome.clamped += 1;
                rate = 1.0;
            }
            *weight = learning_update(*weight, w_max, rate, same_sign(signal, realized));
            if rng.random_bool(params.reset_prob) {
                *weight = rng.random::<f64>() * w_max;
                outcome.resets += 1;
            }
        }
        outcome
    }
}

/// Buy and sell prices of one HFT re-quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote<P> {
    pub buy: P,
    pub sell: P,
}

/// The market-making HFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMaker {
    /// Net signed inventory in shares.
    pub position: i64,
    /// Base spread as a fraction of the fundamental price.
    pub theta: f64,
    /// Inventory skew coefficient.
    pub skew_coeff: f64,
    pub live_buy: Option<OrderId>,
    pub live_sell: Option<OrderId>,
}

impl MarketMaker {
    pub fn new(theta: f64, skew_coeff: f64) -> Self {
        Self {
            position: 0,
            theta,
            skew_coeff,
            live_buy: None,
            live_sell: None,
        }
    }

    /// Inventory-skewed mid-price.
    pub fn base_price(&self, best_bid: f64, best_ask: f64) -> f64 {
        let s = self.position as f64;
        (1.0 - self.skew_coeff * s * s * s) * 0.5 * (best_bid + best_ask)
    }

    /// Quote prices before tick rounding. Quotes that would cross the book
    /// are pulled back to one tick inside the opposite best, keeping the
    /// full spread `fundamental * theta` between them.
    pub fn raw_quotes(&self, best_bid: f64, best_ask: f64, fundamental: f64, tick: f64) -> Quote<f64> {
        let spread = fundamental * self.theta;
        let base = self.base_price(best_bid, best_ask);
        let mut buy = base - 0.5 * spread;
        let mut sell = base + 0.5 * spread;
        if buy >= best_ask {
            buy = best_ask - tick;
            sell = buy + spread;
        }
        if sell <= best_bid {
            sell = best_bid + tick;
            buy = sell - spread;
        }
        Quote { buy, sell }
    }

    /// Tick-aligned quotes (buy rounded down, sell rounded up). `None` when
    /// the book lacks a quote on either side or a price degenerates.
    pub fn quotes(
        &self,
        best_bid: Option<Ticks>,
        best_ask: Option<Ticks>,
        fundamental: f64,
        tick: TickSize,
    ) -> Option<Quote<Ticks>> {
        let (bb, ba) = (tick.to_price(best_bid?), tick.to_price(best_ask?));
        let raw = self.raw_quotes(bb, ba, fundamental, tick.get());
        Some(Quote {
            buy: tick.round(raw.buy, Side::Buy).ok()?,
            sell: tick.round(raw.sell, Side::Sell).ok()?,
        })
    }

    pub fn record_fill(&mut self, side: Side) {
        match side {
            Side::Buy => self.position += 1,
            Side::Sell => self.position -= 1,
        }
    }
}
