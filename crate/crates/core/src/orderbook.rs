//! Continuous double-auction limit order book.
//!
//! Prices are held internally as integer tick counts so that price-level
//! keys are exact. Every order is for a single share, so an incoming order
//! either executes against exactly one resting order or rests itself.
//!
//! ```text
//!      asks (ascending)          bids (descending)
//!   best_ask + k*tick  ...    ...  best_bid - k*tick
//!   best_ask           <-- spread -->  best_bid
//! ```

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::PriceError;

/// Discrete simulation time step.
pub type Step = u64;

/// Unique order identifier, allocated monotonically within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderId(pub u64);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Who placed an order: one of the normal agents (0-based index) or the HFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Normal(u32),
    Hft,
}

impl Owner {
    pub fn is_hft(self) -> bool {
        matches!(self, Owner::Hft)
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Normal(j) => write!(f, "{j}"),
            Owner::Hft => f.write_str("hft"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A price expressed as an integer number of ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ticks(pub i64);

/// Minimum price increment, in currency units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TickSize {
    size: f64,
    /// `1 / size` when that is a whole number, so prices such as
    /// `1001 / 10` come out as the double nearest to the decimal value.
    per_unit: Option<f64>,
}

impl TickSize {
    /// Relative slack used to recognise prices that are already a tick
    /// multiple but picked up floating point noise in arithmetic.
    const SNAP: f64 = 1e-12;
    const MAX_UNITS: f64 = 9_007_199_254_740_992.0;

    pub fn new(tick: f64) -> Result<Self, PriceError> {
        if tick.is_finite() && tick > 0.0 {
            let inv = (1.0 / tick).round();
            let per_unit = (tick < 1.0 && (inv * tick - 1.0).abs() < 1e-12).then_some(inv);
            Ok(TickSize { size: tick, per_unit })
        } else {
            Err(PriceError::InvalidTick(tick))
        }
    }

    pub fn get(self) -> f64 {
        self.size
    }

    /// Round a raw price onto the tick grid: sells round up, buys round down.
    pub fn round(self, raw: f64, side: Side) -> Result<Ticks, PriceError> {
        if !(raw.is_finite() && raw > 0.0) {
            return Err(PriceError::Degenerate(raw));
        }
        let x = raw / self.size;
        let nearest = x.round();
        let units = if (x - nearest).abs() <= Self::SNAP * nearest.abs().max(1.0) {
            nearest
        } else {
            match side {
                Side::Sell => x.ceil(),
                Side::Buy => x.floor(),
            }
        };
        if !(1.0..=Self::MAX_UNITS).contains(&units) {
            return Err(PriceError::Degenerate(raw));
        }
        Ok(Ticks(units as i64))
    }

    /// Exact tick count for a price that is known to lie on the grid
    /// (e.g. a price read back from an event log).
    pub fn nearest(self, price: f64) -> Ticks {
        Ticks((price / self.size).round() as i64)
    }

    pub fn to_price(self, ticks: Ticks) -> f64 {
        match self.per_unit {
            Some(k) => ticks.0 as f64 / k,
            None => ticks.0 as f64 * self.size,
        }
    }
}

/// Round a raw price to the tick grid. See [`TickSize::round`].
pub fn round_to_tick(raw: f64, side: Side, tick: f64) -> Result<f64, PriceError> {
    let tick = TickSize::new(tick)?;
    tick.round(raw, side).map(|t| tick.to_price(t))
}

/// A one-share limit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub owner: Owner,
    pub side: Side,
    pub price: Ticks,
    pub placed_at: Step,
}

impl Order {
    /// Orders in this model are always for a single share.
    pub const QUANTITY: u32 = 1;
}

/// One executed share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub time: Step,
    /// Execution price in currency units (the resting order's price).
    pub price: f64,
    pub buy_owner: Owner,
    pub sell_owner: Owner,
    pub aggressor_side: Side,
    pub resting_id: OrderId,
    pub incoming_id: OrderId,
}

impl Trade {
    pub fn resting_owner(&self) -> Owner {
        match self.aggressor_side {
            Side::Buy => self.sell_owner,
            Side::Sell => self.buy_owner,
        }
    }

    pub fn involves_hft(&self) -> bool {
        self.buy_owner.is_hft() || self.sell_owner.is_hft()
    }
}

/// Lifetime counters used for the conservation identity
/// `submitted == resting + executed + cancelled + expired`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookStats {
    pub submitted: u64,
    /// Orders consumed by trades; every trade consumes two orders.
    pub executed: u64,
    pub cancelled: u64,
    pub expired: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelOutcome {
    Removed(Order),
    NotFound,
}

type Level = VecDeque<Order>;

#[derive(Debug, Clone)]
pub struct OrderBook {
    tick: TickSize,
    bids: BTreeMap<Ticks, Level>,
    asks: BTreeMap<Ticks, Level>,
    index: HashMap<OrderId, (Side, Ticks)>,
    // Placement-ordered queue for expiry; entries for orders that already
    // left the book are skipped when they reach the front.
    expiry: VecDeque<(Step, OrderId)>,
    stats: BookStats,
}

impl OrderBook {
    pub fn new(tick: TickSize) -> Self {
        Self {
            tick,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            index: HashMap::new(),
            expiry: VecDeque::new(),
            stats: BookStats::default(),
        }
    }

    pub fn tick(&self) -> TickSize {
        self.tick
    }

    pub fn stats(&self) -> BookStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn best_bid(&self) -> Option<Ticks> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Ticks> {
        self.asks.keys().next().copied()
    }

    /// Submit a one-share order. A buy priced at or above the best ask (or a
    /// sell at or below the best bid) executes immediately against the
    /// oldest order at the best opposite price, at that resting price.
    /// Otherwise the order rests.
    pub fn submit(&mut self, order: Order) -> Option<Trade> {
        debug_assert!(!self.index.contains_key(&order.id), "duplicate order id {}", order.id);
        debug_assert!(
            self.expiry.back().is_none_or(|&(t, _)| t <= order.placed_at),
            "orders must arrive in time order"
        );
        self.stats.submitted += 1;

        let crossing = match order.side {
            Side::Buy => self.best_ask().filter(|&ask| order.price >= ask),
            Side::Sell => self.best_bid().filter(|&bid| order.price <= bid),
        };

        if let Some(level_price) = crossing {
            let opposite = self.side_mut(order.side.opposite());
            let level = opposite.get_mut(&level_price).expect("best level exists");
            let resting = level.pop_front().expect("levels are never empty");
            if level.is_empty() {
                opposite.remove(&level_price);
            }
            self.index.remove(&resting.id);
            self.stats.executed += 2;

            let (buy_owner, sell_owner) = match order.side {
                Side::Buy => (order.owner, resting.owner),
                Side::Sell => (resting.owner, order.owner),
            };
            return Some(Trade {
                time: order.placed_at,
                price: self.tick.to_price(level_price),
                buy_owner,
                sell_owner,
                aggressor_side: order.side,
                resting_id: resting.id,
                incoming_id: order.id,
            });
        }

        self.index.insert(order.id, (order.side, order.price));
        self.expiry.push_back((order.placed_at, order.id));
        self.side_mut(order.side)
            .entry(order.price)
            .or_default()
            .push_back(order);
        None
    }

    /// Remove a resting order. Orders that already executed or expired are
    /// reported as `NotFound`, which is not an error.
    pub fn cancel(&mut self, id: OrderId) -> CancelOutcome {
        match self.remove(id) {
            Some(order) => {
                self.stats.cancelled += 1;
                CancelOutcome::Removed(order)
            }
            None => CancelOutcome::NotFound,
        }
    }

    /// Remove every resting order whose age `t - placed_at` has reached
    /// `lifetime`. Returns the removed orders in placement order.
    pub fn expire(&mut self, t: Step, lifetime: Step) -> Vec<Order> {
        let mut removed = Vec::new();
        while let Some(&(placed_at, id)) = self.expiry.front() {
            if placed_at.saturating_add(lifetime) > t {
                break;
            }
            self.expiry.pop_front();
            if let Some(order) = self.remove(id) {
                removed.push(order);
            }
        }
        self.stats.expired += removed.len() as u64;
        removed
    }

    /// Remove one specific order as expired (used when replaying a log).
    pub fn expire_order(&mut self, id: OrderId) -> Option<Order> {
        let order = self.remove(id)?;
        self.stats.expired += 1;
        Some(order)
    }

    /// Count resting orders within `n_ticks` price levels of each best quote:
    /// bids in `[best_bid - (n_ticks-1), best_bid]`, asks in
    /// `[best_ask, best_ask + (n_ticks-1)]`. Reports `(0, 0)` unless both
    /// sides are populated.
    pub fn depth_within(&self, n_ticks: u32) -> (u32, u32) {
        let (Some(bid), Some(ask)) = (self.best_bid(), self.best_ask()) else {
            return (0, 0);
        };
        if n_ticks == 0 {
            return (0, 0);
        }
        let span = i64::from(n_ticks - 1);
        let count = |levels: &BTreeMap<Ticks, Level>, lo: i64, hi: i64| -> u32 {
            levels
                .range(Ticks(lo)..=Ticks(hi))
                .map(|(_, level)| level.len() as u32)
                .sum()
        };
        (
            count(&self.bids, bid.0.saturating_sub(span), bid.0),
            count(&self.asks, ask.0, ask.0.saturating_add(span)),
        )
    }

    /// Resting orders on one side, best price first, then time priority.
    pub fn orders(&self, side: Side) -> Box<dyn Iterator<Item = &Order> + '_> {
        match side {
            Side::Buy => Box::new(self.bids.values().rev().flatten()),
            Side::Sell => Box::new(self.asks.values().flatten()),
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<Ticks, Level> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    fn remove(&mut self, id: OrderId) -> Option<Order> {
        let (side, price) = self.index.remove(&id)?;
        let levels = self.side_mut(side);
        let level = levels.get_mut(&price).expect("indexed level exists");
        // Expiring orders sit at the front of their level, re-quoted HFT
        // orders near the back.
        let pos = if level.front().is_some_and(|o| o.id == id) {
            0
        } else {
            level.iter().rposition(|o| o.id == id).expect("indexed order exists")
        };
        let order = level.remove(pos).expect("position in range");
        if level.is_empty() {
            levels.remove(&price);
        }
        Some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick(t: f64) -> TickSize {
        TickSize::new(t).unwrap()
    }

    fn order(id: u64, side: Side, price: i64, t: Step) -> Order {
        Order {
            id: OrderId(id),
            owner: Owner::Normal(id as u32),
            side,
            price: Ticks(price),
            placed_at: t,
        }
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(tick(0.1).round(100.03, Side::Sell).unwrap(), Ticks(1001));
        assert_eq!(tick(0.1).round(100.03, Side::Buy).unwrap(), Ticks(1000));
        assert_eq!(tick(0.1).round(100.0, Side::Buy).unwrap(), Ticks(1000));
        assert_eq!(tick(0.1).round(100.0, Side::Sell).unwrap(), Ticks(1000));
        assert_eq!(round_to_tick(100.03, Side::Sell, 0.1).unwrap(), 100.1);
        assert_eq!(round_to_tick(100.03, Side::Buy, 0.1).unwrap(), 100.0);
        assert_eq!(round_to_tick(100.0, Side::Buy, 0.1).unwrap(), 100.0);
        assert_eq!(round_to_tick(9990.123, Side::Buy, 0.01).unwrap(), 9990.12);
        assert_eq!(round_to_tick(250.0, Side::Sell, 100.0).unwrap(), 300.0);
    }

    #[test]
    fn degenerate_buy_price_rejected() {
        assert!(matches!(tick(1.0).round(0.5, Side::Buy), Err(PriceError::Degenerate(_))));
        assert!(tick(1.0).round(-3.0, Side::Sell).is_err());
        assert_eq!(tick(1.0).round(0.5, Side::Sell).unwrap(), Ticks(1));
        assert!(TickSize::new(0.0).is_err());
    }

    #[test]
    fn crossing_buy_executes_at_resting_price() {
        let mut book = OrderBook::new(tick(1.0));
        assert!(book.submit(order(1, Side::Sell, 10005, 0)).is_none());
        let trade = book.submit(order(2, Side::Buy, 10010, 1)).unwrap();
        assert_eq!(trade.price, 10005.0);
        assert_eq!(trade.aggressor_side, Side::Buy);
        assert_eq!(trade.resting_id, OrderId(1));
        assert!(book.best_ask().is_none());
        assert!(book.is_empty());
    }

    #[test]
    fn non_crossing_order_rests() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Sell, 10010, 0));
        assert!(book.submit(order(2, Side::Buy, 9990, 1)).is_none());
        assert_eq!(book.best_bid(), Some(Ticks(9990)));
        assert_eq!(book.best_ask(), Some(Ticks(10010)));
    }

    #[test]
    fn time_priority_within_level() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Sell, 10010, 5));
        book.submit(order(2, Side::Sell, 10010, 9));
        let trade = book.submit(order(3, Side::Buy, 10010, 10)).unwrap();
        assert_eq!(trade.resting_id, OrderId(1));
    }

    #[test]
    fn cancel_paths() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Sell, 100, 0));
        book.submit(order(2, Side::Sell, 100, 1));
        assert!(matches!(book.cancel(OrderId(1)), CancelOutcome::Removed(_)));
        assert_eq!(book.cancel(OrderId(1)), CancelOutcome::NotFound);

        book.submit(order(3, Side::Buy, 100, 2));
        assert_eq!(book.cancel(OrderId(2)), CancelOutcome::NotFound, "executed order");

        // cancel then re-enter: new order goes behind existing ones
        book.submit(order(4, Side::Sell, 100, 3));
        book.submit(order(5, Side::Sell, 100, 4));
        book.cancel(OrderId(4));
        book.submit(order(6, Side::Sell, 100, 5));
        let trade = book.submit(order(7, Side::Buy, 100, 6)).unwrap();
        assert_eq!(trade.resting_id, OrderId(5));
    }

    #[test]
    fn expiry_boundary() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Buy, 100, 0));
        assert!(book.expire(19_999, 20_000).is_empty());
        assert_eq!(book.len(), 1);
        assert_eq!(book.expire(20_000, 20_000).len(), 1);
        assert!(book.is_empty());
        assert!(OrderBook::new(tick(1.0)).expire(5, 1).is_empty());
    }

    #[test]
    fn expiry_skips_orders_that_left() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Buy, 100, 0));
        book.submit(order(2, Side::Buy, 99, 1));
        book.submit(order(3, Side::Buy, 98, 2));
        book.cancel(OrderId(1));
        book.submit(order(4, Side::Sell, 99, 3));
        let removed = book.expire(12, 10);
        assert_eq!(removed.iter().map(|o| o.id).collect::<Vec<_>>(), vec![OrderId(3)]);
        let s = book.stats();
        assert_eq!(s.submitted, 4);
        assert_eq!(s.submitted, book.len() as u64 + s.executed + s.cancelled + s.expired);
    }

    #[test]
    fn depth_window() {
        let mut book = OrderBook::new(tick(1.0));
        assert_eq!(book.depth_within(50), (0, 0));
        book.submit(order(1, Side::Buy, 1000, 0));
        assert_eq!(book.depth_within(50), (0, 0), "one-sided book");
        book.submit(order(2, Side::Sell, 1010, 1));
        assert_eq!(book.depth_within(50), (1, 1));
        book.submit(order(3, Side::Buy, 951, 2));
        book.submit(order(4, Side::Buy, 950, 3));
        book.submit(order(5, Side::Sell, 1059, 4));
        book.submit(order(6, Side::Sell, 1060, 5));
        assert_eq!(book.depth_within(50), (2, 2));
    }

    #[test]
    fn orders_iterate_in_priority_order() {
        let mut book = OrderBook::new(tick(1.0));
        book.submit(order(1, Side::Buy, 99, 0));
        book.submit(order(2, Side::Buy, 100, 1));
        book.submit(order(3, Side::Buy, 100, 2));
        let ids: Vec<_> = book.orders(Side::Buy).map(|o| o.id.0).collect();
        assert_eq!(ids, vec![2, 3, 1]);
    }
}
