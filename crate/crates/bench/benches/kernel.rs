use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use qdc_core::{Kernel, RngStream};

const EVENTS: u64 = 100_000;

/// Hold model: each executed event schedules one successor, so the queue
/// size stays fixed while the clock advances.
fn hold(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    group.throughput(Throughput::Elements(EVENTS));
    for pending in [16usize, 1024] {
        group.bench_function(format!("hold-{pending}"), |b| {
            b.iter_batched(
                || {
                    let mut k = Kernel::new();
                    let mut rng = RngStream::new(1, "bench");
                    for i in 0..pending {
                        k.schedule(rng.sample_exponential(1.0).unwrap(), i).unwrap();
                    }
                    (k, rng)
                },
                |(mut k, mut rng)| {
                    let mut left = EVENTS;
                    while left > 0 {
                        let Some((_, ev)) = k.next_event(f64::INFINITY) else {
                            break;
                        };
                        k.schedule_in(rng.sample_exponential(1.0).unwrap(), ev).unwrap();
                        left -= 1;
                    }
                    black_box(k.now())
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn schedule_cancel(c: &mut Criterion) {
    c.bench_function("kernel/schedule-cancel-10k", |b| {
        b.iter(|| {
            let mut k = Kernel::new();
            let handles: Vec<_> = (0..10_000).map(|i| k.schedule(i as f64, i).unwrap()).collect();
            for h in handles.iter().step_by(2) {
                k.cancel(*h);
            }
            black_box(k.run_until(f64::INFINITY, |_, _| {}))
        })
    });
}

criterion_group!(benches, hold, schedule_cancel);
criterion_main!(benches);
