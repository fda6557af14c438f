//! Artificial stock market with a continuous double auction, learning
//! fundamentalist/chartist/noise agents and an optional market-making HFT,
//! plus the liquidity metrics and sweep harness used to study it.
//!
//! ```no_run
//! use hftsim_core::{engine, LiquidityReport, MarketParams, MetricsConfig};
//!
//! let params = MarketParams { t_end: 200_000, hft: true, ..Default::default() };
//! let trace = engine::run(&params)?;
//! let report = LiquidityReport::from_trace(&trace, &MetricsConfig::default());
//! println!("volume {} tightness {:?}", report.volume, report.tightness);
//! # Ok::<(), hftsim_core::ConfigError>(())
//! ```

pub mod agents;
pub mod engine;
pub mod error;
pub mod eventlog;
pub mod harness;
pub mod metrics;
pub mod orderbook;
pub mod params;
pub mod replay;
pub mod seeding;

pub use agents::{MarketMaker, NormalAgent, PriceHistory};
pub use engine::{run, run_logged, RunTrace, Simulation};
pub use error::{ConfigError, Error, PriceError, ReplayError, Result};
pub use harness::{run_sweep, SweepReport, SweepSpec, Variant, VariantSelection};
pub use metrics::{LiquidityReport, MetricsConfig, StylizedFacts};
pub use orderbook::{Order, OrderBook, OrderId, Owner, Side, TickSize, Ticks, Trade};
pub use params::MarketParams;
pub use replay::replay;
