//! Rebuild a [`RunTrace`] from an order-flow event log.
//!
//! The book is reconstructed by re-applying every `submit`, `cancel` and
//! `expire` row; logged `trade` rows are checked against the trades the
//! reconstructed book produces.

use std::io::BufRead;

use crate::agents::PriceHistory;
use crate::engine::{RunCounters, RunTrace, TraceBuilder};
use crate::error::ReplayError;
use crate::eventlog::{LogMeta, HEADER};
use crate::orderbook::{CancelOutcome, Order, OrderBook, OrderId, Owner, Side, Step, TickSize, Trade};

fn malformed(line: usize, reason: impl Into<String>) -> ReplayError {
    ReplayError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn parse_meta(line: usize, text: &str) -> Result<LogMeta, ReplayError> {
    let body = text
        .strip_prefix("# meta")
        .ok_or(ReplayError::MissingHeader)?;
    let (mut tick, mut p_f, mut t_end, mut t_day) = (None, None, None, None);
    for pair in body.split_whitespace() {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| malformed(line, format!("bad meta field `{pair}`")))?;
        let bad = |_| malformed(line, format!("bad meta value `{pair}`"));
        match k {
            "tick" => tick = Some(v.parse::<f64>().map_err(|_| malformed(line, pair))?),
            "p_f" => p_f = Some(v.parse::<f64>().map_err(|_| malformed(line, pair))?),
            "t_end" => t_end = Some(v.parse::<u64>().map_err(bad)?),
            "t_day" => t_day = Some(v.parse::<u64>().map_err(bad)?),
            _ => {}
        }
    }
    match (tick, p_f, t_end, t_day) {
        (Some(tick), Some(p_f), Some(t_end), Some(t_day)) => Ok(LogMeta {
            tick,
            p_f,
            t_end,
            t_day,
        }),
        _ => Err(malformed(line, "meta needs tick, p_f, t_end and t_day")),
    }
}

struct Row {
    t: Step,
    kind: Kind,
    id: OrderId,
    owner: Owner,
    side: Side,
    price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Submit,
    Trade,
    Cancel,
    Expire,
}

fn parse_row(line: usize, text: &str) -> Result<Row, ReplayError> {
    let fields: Vec<&str> = text.split(',').collect();
    let [t, kind, id, owner, side, price, qty] = fields[..] else {
        return Err(malformed(line, format!("expected 7 fields, got {}", fields.len())));
    };
    let kind = match kind {
        "submit" => Kind::Submit,
        "trade" => Kind::Trade,
        "cancel" => Kind::Cancel,
        "expire" => Kind::Expire,
        other => return Err(malformed(line, format!("unknown event `{other}`"))),
    };
    let owner = match owner {
        "hft" => Owner::Hft,
        j => Owner::Normal(j.parse().map_err(|_| malformed(line, format!("bad owner `{j}`")))?),
    };
    let side = match side {
        "buy" => Side::Buy,
        "sell" => Side::Sell,
        s => return Err(malformed(line, format!("bad side `{s}`"))),
    };
    if qty != "1" {
        return Err(malformed(line, format!("quantity must be 1, got `{qty}`")));
    }
    Ok(Row {
        t: t.parse().map_err(|_| malformed(line, format!("bad time `{t}`")))?,
        kind,
        id: OrderId(id.parse().map_err(|_| malformed(line, format!("bad id `{id}`")))?),
        owner,
        side,
        price: price
            .parse()
            .map_err(|_| malformed(line, format!("bad price `{price}`")))?,
    })
}

/// Replay a log produced by [`crate::engine::run_logged`].
pub fn replay<R: BufRead>(input: R) -> Result<RunTrace, ReplayError> {
    let mut lines = input.lines().enumerate();

    let meta = loop {
        let (i, line) = lines.next().ok_or(ReplayError::MissingHeader)?;
        let line = line?;
        if !line.trim().is_empty() {
            break parse_meta(i + 1, line.trim())?;
        }
    };
    let tick = TickSize::new(meta.tick).map_err(|e| malformed(1, e.to_string()))?;
    let capacity = usize::try_from(meta.t_end).unwrap_or(0);
    let mut book = OrderBook::new(tick);
    let mut hist = PriceHistory::with_capacity(meta.p_f, capacity.saturating_add(1));
    let mut builder = TraceBuilder::new(capacity);
    let mut counters = RunCounters::default();
    let mut current: Step = 1;
    let mut pending: Option<Trade> = None;

    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text == HEADER {
            continue;
        }
        let row = parse_row(line_no, text)?;
        if row.t < current || row.t > meta.t_end {
            return Err(malformed(line_no, format!("time {} out of order", row.t)));
        }
        while current < row.t {
            builder.end_step(&book, &mut hist);
            current += 1;
        }

        if let Some(expected) = pending.take() {
            let matches = row.kind == Kind::Trade
                && row.id == expected.resting_id
                && tick.nearest(row.price) == tick.nearest(expected.price);
            if !matches {
                return Err(ReplayError::Diverged { line: line_no });
            }
            builder.on_trade(expected);
            continue;
        }

        match row.kind {
            Kind::Submit => {
                if matches!(row.owner, Owner::Normal(_)) {
                    counters.normal_orders += 1;
                    builder.on_normal_order();
                }
                let order = Order {
                    id: row.id,
                    owner: row.owner,
                    side: row.side,
                    price: tick.nearest(row.price),
                    placed_at: row.t,
                };
                pending = book.submit(order);
            }
            Kind::Cancel => {
                if book.cancel(row.id) == CancelOutcome::NotFound {
                    return Err(ReplayError::Diverged { line: line_no });
                }
            }
            Kind::Expire => {
                if book.expire_order(row.id).is_none() {
                    return Err(ReplayError::Diverged { line: line_no });
                }
            }
            Kind::Trade => return Err(ReplayError::Diverged { line: line_no }),
        }
    }
    if pending.is_some() {
        return Err(ReplayError::Diverged { line: 0 });
    }
    while current <= meta.t_end {
        builder.end_step(&book, &mut hist);
        current += 1;
    }
    Ok(builder.finish(&meta, hist, &book, counters, None))
}
