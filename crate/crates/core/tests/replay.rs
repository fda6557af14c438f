use std::fmt::Write as _;
use std::io::Cursor;

use hftsim_core::harness::stylized_verdict;
use hftsim_core::metrics::stylized_facts;
use hftsim_core::{replay, run_logged, LiquidityReport, MarketParams, MetricsConfig, ReplayError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn small(hft: bool, seed: u64) -> MarketParams {
    MarketParams {
        t_end: 20_000,
        n: 100,
        tau_max: 1_000,
        t_c: 4_000,
        warmup: 2_000,
        t_day: 2_000,
        hft,
        seed,
        ..Default::default()
    }
}

fn logged(p: &MarketParams) -> (hftsim_core::RunTrace, String) {
    let mut buf = Vec::new();
    let trace = run_logged(p, &mut buf).unwrap();
    (trace, String::from_utf8(buf).unwrap())
}

#[test]
fn replay_reproduces_the_report_exactly() {
    let metrics = MetricsConfig::default();
    for hft in [false, true] {
        let (trace, log) = logged(&small(hft, 7));
        let rebuilt = replay(Cursor::new(&log)).unwrap();
        assert_eq!(rebuilt.prices, trace.prices);
        assert_eq!(rebuilt.steps, trace.steps);
        assert_eq!(rebuilt.trades, trace.trades);
        assert_eq!(rebuilt.book, trace.book);
        assert_eq!(
            LiquidityReport::from_trace(&rebuilt, &metrics),
            LiquidityReport::from_trace(&trace, &metrics)
        );
    }
}

#[test]
fn tampered_log_is_rejected() {
    let (_, log) = logged(&small(true, 3));
    let lines: Vec<&str> = log.lines().collect();
    let i = lines.iter().position(|l| l.contains(",trade,")).unwrap();

    let dropped: String = lines
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, l)| format!("{l}\n"))
        .collect();
    assert!(matches!(replay(Cursor::new(dropped)), Err(ReplayError::Diverged { .. })));

    let mut garbled = log.replacen(",submit,", ",sumbit,", 1);
    garbled.push('\n');
    assert!(matches!(replay(Cursor::new(garbled)), Err(ReplayError::Malformed { .. })));

    let headless: String = lines[1..].iter().map(|l| format!("{l}\n")).collect();
    assert!(replay(Cursor::new(headless)).is_err());
}

/// One trade per step between two normal agents at a price following a
/// Gaussian random walk in log space.
fn synthetic_log(t_end: u64, sigma: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("# meta tick=0.01 p_f=10000 t_end={t_end} t_day=20000\n");
    out.push_str("t,event,order_id,owner,side,price,qty\n");
    let mut log_p = 10_000f64.ln();
    for t in 1..=t_end {
        let z: f64 = StandardNormal.sample(&mut rng);
        log_p += sigma * z;
        let price = (log_p.exp() * 100.0).round() / 100.0;
        let (sell, buy) = (2 * t, 2 * t + 1);
        writeln!(out, "{t},submit,{sell},0,sell,{price},1").unwrap();
        writeln!(out, "{t},submit,{buy},1,buy,{price},1").unwrap();
        writeln!(out, "{t},trade,{sell},0,sell,{price},1").unwrap();
    }
    out
}

#[test]
fn gaussian_random_walk_fails_the_stylized_facts_gate() {
    let facts: Vec<_> = (0..10)
        .map(|s| {
            let trace = replay(Cursor::new(synthetic_log(200_000, 2e-4, s))).unwrap();
            assert_eq!(trace.trades.len(), 200_000);
            stylized_facts(&trace.prices, 100)
        })
        .collect();
    let verdict = stylized_verdict(&facts);
    assert_eq!(verdict.defined_runs, 10);
    assert!(!verdict.pass, "{verdict:?}");
}

#[test]
fn constant_price_fails_the_stylized_facts_gate() {
    let prices = vec![10_000.0; 200_001];
    let verdict = stylized_verdict(&[stylized_facts(&prices, 100)]);
    assert_eq!(verdict.defined_runs, 0);
    assert!(!verdict.pass);
}
