use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use hftsim_core::{engine, Order, OrderBook, OrderId, Owner, Side, TickSize, Ticks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORDERS: usize = 100_000;

fn order_flow(seed: u64) -> Vec<Order> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ORDERS)
        .map(|i| Order {
            id: OrderId(i as u64 + 1),
            owner: Owner::Normal(rng.random_range(0..1000)),
            side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
            price: Ticks(rng.random_range(99_800..=100_200)),
            placed_at: i as u64 + 1,
        })
        .collect()
}

fn book(c: &mut Criterion) {
    let flow = order_flow(1);
    let mut g = c.benchmark_group("orderbook");
    g.throughput(Throughput::Elements(ORDERS as u64));
    g.bench_function("submit_and_expire", |b| {
        b.iter_batched(
            || OrderBook::new(TickSize::new(0.1).unwrap()),
            |mut book| {
                for o in &flow {
                    book.expire(o.placed_at, 20_000);
                    book.submit(*o);
                }
                book.len()
            },
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    for hft in [false, true] {
        let p = hftsim_core::MarketParams {
            t_end: 50_000,
            hft,
            seed: 3,
            ..Default::default()
        };
        g.throughput(Throughput::Elements(p.t_end));
        let name = if hft { "run_50k_with_hft" } else { "run_50k" };
        g.bench_function(name, |b| b.iter(|| engine::run(&p).unwrap().trades.len()));
    }
    g.finish();
}

criterion_group!(benches, book, simulation);
criterion_main!(benches);
