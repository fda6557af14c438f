mod common;

use common::{check_sequence, Op};
use hftsim_core::agents::{learning_update, StrategySignals};
use hftsim_core::metrics::{autocorrelation, excess_kurtosis, std_dev};
use hftsim_core::{MarketMaker, NormalAgent, Side, TickSize};
use proptest::prelude::*;

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        7 => (any::<bool>(), 90i64..=110, prop::bool::weighted(0.2), 0u64..=3).prop_map(
            |(buy, price, hft, dt)| Op::Submit {
                side: if buy { Side::Buy } else { Side::Sell },
                price,
                hft,
                dt,
            }
        ),
        2 => (0usize..1000).prop_map(Op::Cancel),
        1 => (0u32..=12).prop_map(Op::Depth),
    ]
}

proptest! {
    #[test]
    fn book_matches_reference(ops in prop::collection::vec(op(), 0..=200)) {
        if let Err(e) = check_sequence(&ops) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn hft_quote_gap_is_exact(
        s in -200i64..=200,
        mid in 5_000.0f64..15_000.0,
        half in 0.1f64..50.0,
        theta in 0.0001f64..0.01,
    ) {
        let mut mm = MarketMaker::new(theta, 5e-8);
        mm.position = s;
        let (bb, ba) = (mid - half, mid + half);
        let q = mm.raw_quotes(bb, ba, 10_000.0, 0.1);
        let gap = q.sell - q.buy;
        prop_assert!((gap - 10_000.0 * theta).abs() <= 1e-9 * 10_000.0, "gap {}", gap);
        prop_assert!(q.buy < ba);
        prop_assert!(q.sell > bb);
    }

    #[test]
    fn hft_base_price_decreases_with_position(
        s in -500i64..500,
        mid in 100.0f64..20_000.0,
        w_h in 1e-10f64..1e-6,
    ) {
        let mut lo = MarketMaker::new(0.002, w_h);
        lo.position = s;
        let mut hi = lo.clone();
        hi.position = s + 1;
        prop_assert!(hi.base_price(mid, mid) < lo.base_price(mid, mid));
    }

    #[test]
    fn expected_return_is_convex_combination(
        w1 in 0.0f64..1.0,
        w2 in 0.0f64..10.0,
        u in 0.0f64..1.0,
        f in -0.2f64..0.2,
        tech in -0.2f64..0.2,
        noise in -0.3f64..0.3,
    ) {
        let agent = NormalAgent::new(w1, w2, u, 10);
        let signals = StrategySignals { fundamental: f, technical: tech };
        match agent.expected_return(signals, noise) {
            Some(r) => {
                let lo = f.min(tech).min(noise);
                let hi = f.max(tech).max(noise);
                prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
            }
            None => prop_assert!(w1 + w2 + u == 0.0),
        }
    }

    #[test]
    fn learning_stays_within_bounds(
        w_max in 0.1f64..10.0,
        frac in 0.0f64..=1.0,
        rate in 0.0f64..=1.0,
        same in any::<bool>(),
    ) {
        let w = w_max * frac;
        let next = learning_update(w, w_max, rate, same);
        prop_assert!((0.0..=w_max + 1e-12).contains(&next));
        if same { prop_assert!(next >= w) } else { prop_assert!(next <= w) }
    }

    #[test]
    fn rounding_lands_on_grid_toward_passive_side(
        raw in 0.5f64..100_000.0,
        tick_idx in 0usize..5,
    ) {
        let tick = [0.01, 0.1, 1.0, 10.0, 100.0][tick_idx];
        let ts = TickSize::new(tick).unwrap();
        if let Ok(b) = ts.round(raw, Side::Buy) {
            let p = ts.to_price(b);
            prop_assert!(p <= raw * (1.0 + 1e-12) && raw - p < tick * (1.0 + 1e-9));
        }
        let s = ts.round(raw, Side::Sell).unwrap();
        let p = ts.to_price(s);
        prop_assert!(p >= raw * (1.0 - 1e-12) && p - raw < tick * (1.0 + 1e-9));
    }

    #[test]
    fn moment_statistics_match_naive_formulas(xs in prop::collection::vec(-1.0f64..1.0, 8..60)) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let sd = std_dev(&xs).unwrap();
        prop_assert!((sd - m2.sqrt()).abs() < 1e-9);
        if m2 > 1e-9 {
            let k = excess_kurtosis(&xs).unwrap();
            prop_assert!((k - (m4 / (m2 * m2) - 3.0)).abs() < 1e-6);
            for lag in 1..=3usize {
                let num: f64 = (lag..xs.len()).map(|i| (xs[i] - mean) * (xs[i - lag] - mean)).sum();
                let acf = num / (m2 * n);
                prop_assert!((autocorrelation(&xs, lag).unwrap() - acf).abs() < 1e-9);
            }
        }
    }
}
