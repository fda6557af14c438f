//! The simulation loop.
//!
//! Each step `t = 1, ..., t_end`:
//! 1. orders whose age reached `t_c` are removed;
//! 2. normal agent `(t - 1) mod n` acts with probability `pr_o`: it learns,
//!    forms an expected price and submits one order;
//! 3. if the HFT participates it cancels its live quotes and posts a fresh
//!    buy then a fresh sell;
//! 4. `P^t` is the last trade price of the step (or `P^{t-1}` without
//!    trades) and the book's quotes and depth are sampled.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agents::{
    draw_order, expected_price, realized_return, AgentLimits, LearningParams, MarketMaker,
    NormalAgent, PriceHistory, StrategySignals,
};
use crate::error::ConfigError;
use crate::eventlog::{Event, EventLogWriter, EventSink, LogMeta, NoLog};
use crate::orderbook::{
    BookStats, CancelOutcome, Order, OrderBook, OrderId, Owner, Side, Step, TickSize, Ticks, Trade,
};
use crate::seeding::RngStreams;

/// Depth counts resting orders within this many price levels of each best quote.
pub const DEPTH_TICKS: u32 = 50;

/// Book state at the end of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSample {
    pub best_bid: Option<Ticks>,
    pub best_ask: Option<Ticks>,
    pub bid_depth: u32,
    pub ask_depth: u32,
    /// A normal agent placed a new order this step.
    pub new_normal_order: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub normal_orders: u64,
    pub abstentions: u64,
    /// Orders whose price drew equal to the expectation, or whose weights were all zero.
    pub no_orders: u64,
    /// Buy prices that rounded to zero.
    pub rejected_orders: u64,
    pub hft_requotes: u64,
    pub hft_orders: u64,
    pub learning_clamps: u64,
}

/// Everything the metrics need from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub tick: f64,
    pub fundamental: f64,
    pub t_day: u64,
    /// `P^0 ..= P^{t_end}`.
    pub prices: Vec<f64>,
    /// `steps[t - 1]` describes step `t`.
    pub steps: Vec<StepSample>,
    pub trades: Vec<Trade>,
    pub book: BookStats,
    pub resting_at_end: u64,
    pub counters: RunCounters,
    pub hft: Option<MarketMaker>,
}

impl RunTrace {
    pub fn t_end(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn tick_size(&self) -> TickSize {
        TickSize::new(self.tick).expect("trace tick is valid")
    }

    /// New orders placed by normal agents over the run.
    pub fn normal_orders(&self) -> u64 {
        self.steps.iter().filter(|s| s.new_normal_order).count() as u64
    }
}

/// Accumulates per-step samples; shared by the engine and log replay.
#[derive(Debug)]
pub(crate) struct TraceBuilder {
    steps: Vec<StepSample>,
    trades: Vec<Trade>,
    step_price: Option<f64>,
    step_new_order: bool,
}

impl TraceBuilder {
    pub(crate) fn new(capacity: usize) -> Self {
        Self {
            steps: Vec::with_capacity(capacity),
            trades: Vec::new(),
            step_price: None,
            step_new_order: false,
        }
    }

    pub(crate) fn on_trade(&mut self, trade: Trade) {
        self.step_price = Some(trade.price);
        self.trades.push(trade);
    }

    pub(crate) fn on_normal_order(&mut self) {
        self.step_new_order = true;
    }

    pub(crate) fn end_step(&mut self, book: &OrderBook, hist: &mut PriceHistory) {
        let price = self.step_price.take().unwrap_or_else(|| hist.last());
        hist.push(price);
        let (bid_depth, ask_depth) = book.depth_within(DEPTH_TICKS);
        self.steps.push(StepSample {
            best_bid: book.best_bid(),
            best_ask: book.best_ask(),
            bid_depth,
            ask_depth,
            new_normal_order: std::mem::take(&mut self.step_new_order),
        });
    }

    pub(crate) fn finish(
        self,
        meta: &LogMeta,
        hist: PriceHistory,
        book: &OrderBook,
        counters: RunCounters,
        hft: Option<MarketMaker>,
    ) -> RunTrace {
        RunTrace {
            tick: meta.tick,
            fundamental: meta.p_f,
            t_day: meta.t_day,
            prices: hist.into_vec(),
            steps: self.steps,
            trades: self.trades,
            book: book.stats(),
            resting_at_end: book.len() as u64,
            counters,
            hft,
        }
    }
}

/// One market instance stepping through time.
pub struct Simulation<S: EventSink = NoLog> {
    params: crate::params::MarketParams,
    limits: AgentLimits,
    learning: LearningParams,
    lag: u64,
    tick: TickSize,
    book: OrderBook,
    agents: Vec<NormalAgent>,
    hft: Option<MarketMaker>,
    hist: PriceHistory,
    rng: RngStreams,
    next_id: u64,
    t: Step,
    counters: RunCounters,
    builder: TraceBuilder,
    sink: S,
}

impl Simulation<NoLog> {
    pub fn new(params: crate::params::MarketParams) -> Result<Self, ConfigError> {
        Self::with_sink(params, NoLog).map_err(|e| match e {
            SetupError::Config(c) => c,
            SetupError::Io(_) => unreachable!("NoLog never fails"),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<SetupError> for crate::Error {
    fn from(e: SetupError) -> Self {
        match e {
            SetupError::Config(c) => c.into(),
            SetupError::Io(i) => i.into(),
        }
    }
}

impl<S: EventSink> Simulation<S> {
    pub fn with_sink(params: crate::params::MarketParams, mut sink: S) -> Result<Self, SetupError> {
        params.validate()?;
        let tick = TickSize::new(params.tick)
            .map_err(|e| ConfigError::invalid(e.to_string()))?;
        let limits = params.agent_limits();
        let mut rng = RngStreams::new(params.seed);
        let agents = (0..params.n)
            .map(|_| NormalAgent::random(&limits, &mut rng.init))
            .collect();
        let hft = params
            .hft
            .then(|| MarketMaker::new(params.theta_h, params.w_h));
        sink.begin(&LogMeta {
            tick: params.tick,
            p_f: params.p_f,
            t_end: params.t_end,
            t_day: params.t_day,
        })?;
        let capacity = usize::try_from(params.t_end).unwrap_or(0);
        Ok(Self {
            limits,
            learning: params.learning(),
            lag: params.lag(),
            tick,
            book: OrderBook::new(tick),
            agents,
            hft,
            hist: PriceHistory::with_capacity(params.p_f, capacity.saturating_add(1)),
            rng,
            next_id: 0,
            t: 0,
            counters: RunCounters::default(),
            builder: TraceBuilder::new(capacity),
            sink,
            params,
        })
    }

    pub fn time(&self) -> Step {
        self.t
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn history(&self) -> &PriceHistory {
        &self.hist
    }

    pub fn agents(&self) -> &[NormalAgent] {
        &self.agents
    }

    pub fn hft(&self) -> Option<&MarketMaker> {
        self.hft.as_ref()
    }

    pub fn counters(&self) -> RunCounters {
        self.counters
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.params.t_end
    }

    fn allocate_id(&mut self) -> OrderId {
        let id = OrderId(self.next_id);
        self.next_id += 1;
        id
    }

    fn place(&mut self, owner: Owner, side: Side, price: Ticks) -> io::Result<OrderId> {
        let order = Order {
            id: self.allocate_id(),
            owner,
            side,
            price,
            placed_at: self.t,
        };
        self.sink.record(self.t, Event::Submit(&order))?;
        if let Some(trade) = self.book.submit(order) {
            self.sink.record(self.t, Event::Trade(&trade))?;
            if let Some(mm) = self.hft.as_mut() {
                if trade.buy_owner.is_hft() {
                    mm.record_fill(Side::Buy);
                }
                if trade.sell_owner.is_hft() {
                    mm.record_fill(Side::Sell);
                }
            }
            self.builder.on_trade(trade);
        }
        Ok(order.id)
    }

    /// Advance one step.
    pub fn step(&mut self) -> io::Result<()> {
        self.t += 1;
        let t = self.t;

        for order in self.book.expire(t, self.params.t_c) {
            self.sink.record(t, Event::Expire(&order))?;
        }

        let idx = ((t - 1) % u64::from(self.params.n)) as usize;
        let acts = self.rng.participation.random_bool(self.params.pr_o);
        if acts {
            self.normal_turn(idx)?;
        } else {
            self.counters.abstentions += 1;
        }

        if self.hft.is_some() && (acts || self.params.hft_on_abstain) {
            self.hft_turn()?;
        }

        self.builder.end_step(&self.book, &mut self.hist);
        Ok(())
    }

    fn normal_turn(&mut self, idx: usize) -> io::Result<()> {
        let t = self.t;
        let agent = &mut self.agents[idx];
        let signals = StrategySignals::observe(&self.hist, t, self.lag, agent.horizon());
        let realized = realized_return(&self.hist, t, self.lag);
        let outcome = agent.learn(
            signals,
            realized,
            &self.limits,
            &self.learning,
            &mut self.rng.learning,
        );
        self.counters.learning_clamps += u64::from(outcome.clamped);

        let z: f64 = StandardNormal.sample(&mut self.rng.noise);
        let noise = self.params.sigma_eps * z;
        let priced = if t <= self.params.warmup {
            StrategySignals {
                technical: 0.0,
                ..signals
            }
        } else {
            signals
        };
        let Some(r_e) = agent.expected_return(priced, noise) else {
            self.counters.no_orders += 1;
            return Ok(());
        };
        let p_e = expected_price(r_e, self.hist.at(t as i64 - 1));
        let Some((side, raw)) = draw_order(p_e, self.params.est, &mut self.rng.order_price) else {
            self.counters.no_orders += 1;
            return Ok(());
        };
        let Ok(price) = self.tick.round(raw, side) else {
            self.counters.rejected_orders += 1;
            return Ok(());
        };
        self.counters.normal_orders += 1;
        self.builder.on_normal_order();
        self.place(Owner::Normal(idx as u32), side, price)?;
        Ok(())
    }

    fn hft_turn(&mut self) -> io::Result<()> {
        let t = self.t;
        self.counters.hft_requotes += 1;
        let mm = self.hft.as_mut().expect("hft present");
        let live = [mm.live_buy.take(), mm.live_sell.take()];
        for id in live.into_iter().flatten() {
            if let CancelOutcome::Removed(order) = self.book.cancel(id) {
                self.sink.record(t, Event::Cancel(&order))?;
            }
        }

        let mm = self.hft.as_ref().expect("hft present");
        let Some(quote) = mm.quotes(
            self.book.best_bid(),
            self.book.best_ask(),
            self.params.p_f,
            self.tick,
        ) else {
            return Ok(());
        };
        self.counters.hft_orders += 2;
        let buy = self.place(Owner::Hft, Side::Buy, quote.buy)?;
        let sell = self.place(Owner::Hft, Side::Sell, quote.sell)?;
        let mm = self.hft.as_mut().expect("hft present");
        mm.live_buy = self.book.contains(buy).then_some(buy);
        mm.live_sell = self.book.contains(sell).then_some(sell);
        Ok(())
    }

    /// Run the remaining steps and return the trace and the sink.
    pub fn run_to_end(mut self) -> io::Result<(RunTrace, S)> {
        while !self.is_done() {
            self.step()?;
        }
        self.finish()
    }

    /// Stop here and return the trace of the steps taken so far.
    pub fn finish(mut self) -> io::Result<(RunTrace, S)> {
        self.sink.finish()?;
        let meta = LogMeta {
            tick: self.params.tick,
            p_f: self.params.p_f,
            t_end: self.t,
            t_day: self.params.t_day,
        };
        let trace = self
            .builder
            .finish(&meta, self.hist, &self.book, self.counters, self.hft);
        Ok((trace, self.sink))
    }
}

/// Simulate `params.t_end` steps.
pub fn run(params: &crate::params::MarketParams) -> Result<RunTrace, ConfigError> {
    let sim = Simulation::new(params.clone())?;
    let (trace, _) = sim.run_to_end().expect("NoLog never fails");
    Ok(trace)
}

/// Simulate and stream the order-flow log to `out`.
pub fn run_logged<W: Write>(params: &crate::params::MarketParams, out: W) -> crate::Result<RunTrace> {
    let sim = Simulation::with_sink(params.clone(), EventLogWriter::new(out))?;
    let (trace, _) = sim.run_to_end()?;
    Ok(trace)
}
