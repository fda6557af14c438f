//! Line-delimited order-flow log.
//!
//! ```text
//! # meta tick=0.1 p_f=10000 t_end=200000 t_day=20000
//! t,event,order_id,owner,side,price,qty
//! 1,submit,0,0,buy,9998.7,1
//! 2,submit,1,1,sell,9998.1,1
//! 2,trade,0,0,buy,9998.7,1
//! 3,cancel,7,hft,sell,10000.3,1
//! 20001,expire,0,0,buy,9998.7,1
//! ```
//!
//! `trade` rows name the resting order that was hit; the incoming order is
//! the `submit` row just before. Owners are normal-agent indices or `hft`.

use std::io::{self, Write};

use crate::orderbook::{Order, Step, TickSize, Trade};

pub const HEADER: &str = "t,event,order_id,owner,side,price,qty";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event<'a> {
    Submit(&'a Order),
    Trade(&'a Trade),
    Cancel(&'a Order),
    Expire(&'a Order),
}

/// Run-level values a replay needs besides the order flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeta {
    pub tick: f64,
    pub p_f: f64,
    pub t_end: u64,
    pub t_day: u64,
}

/// Receiver for order-flow events emitted by the engine.
pub trait EventSink {
    fn begin(&mut self, _meta: &LogMeta) -> io::Result<()> {
        Ok(())
    }
    fn record(&mut self, t: Step, event: Event<'_>) -> io::Result<()>;
    fn finish(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoLog;

impl EventSink for NoLog {
    #[inline]
    fn record(&mut self, _t: Step, _event: Event<'_>) -> io::Result<()> {
        Ok(())
    }
}

/// Writes the text format above.
pub struct EventLogWriter<W: Write> {
    out: W,
    tick: Option<TickSize>,
}

impl<W: Write> EventLogWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, tick: None }
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn row(&mut self, t: Step, kind: &str, order: &Order) -> io::Result<()> {
        let tick = self.tick.expect("begin() writes the header first");
        writeln!(
            self.out,
            "{t},{kind},{},{},{},{},{}",
            order.id,
            order.owner,
            order.side,
            tick.to_price(order.price),
            Order::QUANTITY
        )
    }
}

impl<W: Write> EventSink for EventLogWriter<W> {
    fn begin(&mut self, meta: &LogMeta) -> io::Result<()> {
        self.tick = Some(TickSize::new(meta.tick).map_err(io::Error::other)?);
        writeln!(
            self.out,
            "# meta tick={} p_f={} t_end={} t_day={}",
            meta.tick, meta.p_f, meta.t_end, meta.t_day
        )?;
        writeln!(self.out, "{HEADER}")
    }

    fn record(&mut self, t: Step, event: Event<'_>) -> io::Result<()> {
        match event {
            Event::Submit(o) => self.row(t, "submit", o),
            Event::Cancel(o) => self.row(t, "cancel", o),
            Event::Expire(o) => self.row(t, "expire", o),
            Event::Trade(tr) => writeln!(
                self.out,
                "{t},trade,{},{},{},{},{}",
                tr.resting_id,
                tr.resting_owner(),
                tr.aggressor_side.opposite(),
                tr.price,
                Order::QUANTITY
            ),
        }
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}
