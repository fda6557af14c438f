//! Brute-force reference order book and a driver that runs an operation
//! sequence through both books in lockstep.

#![allow(dead_code)]

use hftsim_core::orderbook::{BookStats, CancelOutcome};
use hftsim_core::{Order, OrderBook, OrderId, Owner, Side, TickSize, Ticks, Trade};
use rand::Rng;

pub const LIFETIME: u64 = 25;

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Submit { side: Side, price: i64, hft: bool, dt: u64 },
    /// Cancel the k-th submitted order (modulo the number submitted so far).
    Cancel(usize),
    Depth(u32),
}

/// Linear-scan book: a flat list in arrival order.
#[derive(Default)]
pub struct RefBook {
    resting: Vec<Order>,
}

impl RefBook {
    fn best(&self, side: Side) -> Option<i64> {
        let prices = self.resting.iter().filter(|o| o.side == side).map(|o| o.price.0);
        match side {
            Side::Buy => prices.max(),
            Side::Sell => prices.min(),
        }
    }

    pub fn submit(&mut self, order: Order, ticks_per_unit: f64) -> Option<Trade> {
        let opposite = order.side.opposite();
        let target = self.best(opposite).filter(|&p| match order.side {
            Side::Buy => order.price.0 >= p,
            Side::Sell => order.price.0 <= p,
        });
        let Some(p) = target else {
            self.resting.push(order);
            return None;
        };
        let pos = self
            .resting
            .iter()
            .position(|o| o.side == opposite && o.price.0 == p)
            .unwrap();
        let resting = self.resting.remove(pos);
        let (buy_owner, sell_owner) = match order.side {
            Side::Buy => (order.owner, resting.owner),
            Side::Sell => (resting.owner, order.owner),
        };
        Some(Trade {
            time: order.placed_at,
            price: p as f64 / ticks_per_unit,
            buy_owner,
            sell_owner,
            aggressor_side: order.side,
            resting_id: resting.id,
            incoming_id: order.id,
        })
    }

    pub fn cancel(&mut self, id: OrderId) -> Option<Order> {
        let pos = self.resting.iter().position(|o| o.id == id)?;
        Some(self.resting.remove(pos))
    }

    pub fn expire(&mut self, t: u64, lifetime: u64) -> Vec<Order> {
        let (gone, kept) = self
            .resting
            .iter()
            .partition(|o| t - o.placed_at >= lifetime);
        self.resting = kept;
        gone
    }

    /// Resting orders on one side, best price first then arrival order.
    pub fn side(&self, side: Side) -> Vec<Order> {
        let mut v: Vec<Order> = self.resting.iter().filter(|o| o.side == side).copied().collect();
        v.sort_by_key(|o| match side {
            Side::Buy => -o.price.0,
            Side::Sell => o.price.0,
        });
        v
    }

    pub fn depth(&self, n: u32) -> (u32, u32) {
        let (Some(bb), Some(ba)) = (self.best(Side::Buy), self.best(Side::Sell)) else {
            return (0, 0);
        };
        let n = i64::from(n);
        let count = |side, lo: i64, hi: i64| {
            self.resting
                .iter()
                .filter(|o| o.side == side && o.price.0 >= lo && o.price.0 <= hi)
                .count() as u32
        };
        if n == 0 {
            return (0, 0);
        }
        (count(Side::Buy, bb - (n - 1), bb), count(Side::Sell, ba, ba + (n - 1)))
    }

    pub fn len(&self) -> usize {
        self.resting.len()
    }
}

pub fn random_ops<R: Rng>(rng: &mut R, max_len: usize) -> Vec<Op> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0..=6 => Op::Submit {
                side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
                price: rng.random_range(90..=110),
                hft: rng.random_bool(0.2),
                dt: rng.random_range(0..=3),
            },
            7 | 8 => Op::Cancel(rng.random_range(0..1000)),
            _ => Op::Depth(rng.random_range(0..=12)),
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub trades: usize,
    pub stats: BookStats,
    pub resting: usize,
}

/// Apply `ops` to the real and reference books, comparing every output and
/// the full book contents after each operation. Expiry with [`LIFETIME`] runs
/// before each submission, as in the simulation loop.
pub fn check_sequence(ops: &[Op]) -> Result<Outcome, String> {
    let mut book = OrderBook::new(TickSize::new(0.1).unwrap());
    let mut reference = RefBook::default();
    let mut submitted: Vec<OrderId> = Vec::new();
    let mut t = 1u64;
    let mut trades = 0usize;
    let mut expected_expired = 0u64;
    let mut expected_cancelled = 0u64;

    for (i, op) in ops.iter().enumerate() {
        let fail = |what: &str| Err(format!("op {i} ({op:?}): {what}"));
        match *op {
            Op::Submit { side, price, hft, dt } => {
                t += dt;
                let a = book.expire(t, LIFETIME);
                let b = reference.expire(t, LIFETIME);
                if a != b {
                    return fail(&format!("expiry differs: {a:?} vs {b:?}"));
                }
                expected_expired += a.len() as u64;
                let id = OrderId(submitted.len() as u64 + 1);
                submitted.push(id);
                let order = Order {
                    id,
                    owner: if hft { Owner::Hft } else { Owner::Normal(i as u32) },
                    side,
                    price: Ticks(price),
                    placed_at: t,
                };
                let a = book.submit(order);
                let b = reference.submit(order, 10.0);
                if a != b {
                    return fail(&format!("trade differs: {a:?} vs {b:?}"));
                }
                trades += usize::from(a.is_some());
            }
            Op::Cancel(k) => {
                if submitted.is_empty() {
                    continue;
                }
                let id = submitted[k % submitted.len()];
                let a = match book.cancel(id) {
                    CancelOutcome::Removed(o) => Some(o),
                    CancelOutcome::NotFound => None,
                };
                let b = reference.cancel(id);
                if a != b {
                    return fail(&format!("cancel differs: {a:?} vs {b:?}"));
                }
                expected_cancelled += u64::from(a.is_some());
            }
            Op::Depth(n) => {
                if book.depth_within(n) != reference.depth(n) {
                    return fail("depth differs");
                }
            }
        }

        for side in [Side::Buy, Side::Sell] {
            let a: Vec<Order> = book.orders(side).copied().collect();
            if a != reference.side(side) {
                return fail(&format!("{side:?} side differs"));
            }
        }
        if let (Some(bb), Some(ba)) = (book.best_bid(), book.best_ask()) {
            if bb >= ba {
                return fail("book crossed");
            }
        }
        let s = book.stats();
        if s.submitted != submitted.len() as u64
            || s.executed != 2 * trades as u64
            || s.cancelled != expected_cancelled
            || s.expired != expected_expired
        {
            return fail(&format!("counter mismatch: {s:?}"));
        }
        // Each submission ends up resting, consumed by a trade (together with
        // the order it hit), cancelled or expired.
        if s.submitted != book.len() as u64 + s.executed + s.cancelled + s.expired {
            return fail("conservation identity violated");
        }
        if book.len() != reference.len() || book.is_empty() != (reference.len() == 0) {
            return fail("length differs");
        }
    }
    Ok(Outcome {
        trades,
        stats: book.stats(),
        resting: book.len(),
    })
}
