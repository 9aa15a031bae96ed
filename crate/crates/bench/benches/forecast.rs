use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use departure_core::ingest::generate_synthetic;
use departure_core::{
    divide_in_intervals, erf, fit_em, impose_and_avg, scale_granularity, BinGrid, EmConfig, GranularityRule, SyntheticSpec,
    TimeOfDay, TimeWindow,
};

fn fixture() -> departure_core::Dataset {
    let mean = TimeOfDay::from_hms(7, 30, 0).unwrap();
    generate_synthetic(&SyntheticSpec::new(TimeWindow::morning_commute(), mean, 2400.0, 4, 190, 1)).unwrap()
}

fn bench_erf(c: &mut Criterion) {
    c.bench_function("erf/grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            let mut x = -6.0;
            while x < 6.0 {
                acc += erf(black_box(x)).unwrap();
                x += 0.01;
            }
            acc
        })
    });
}

fn bench_binning(c: &mut Criterion) {
    let d = fixture();
    let grid = BinGrid::new(TimeWindow::morning_commute(), 18).unwrap();
    c.bench_function("binning/18", |b| {
        b.iter(|| impose_and_avg(&divide_in_intervals(black_box(&d), grid).unwrap()).unwrap())
    });
    c.bench_function("scale/1..=36", |b| {
        b.iter(|| scale_granularity(black_box(&d), TimeWindow::morning_commute(), 0.1, GranularityRule::RelativeError, 1, 36))
    });
}

fn bench_em(c: &mut Criterion) {
    let times = fixture().departure_seconds();
    let mut group = c.benchmark_group("fit_em");
    group.sample_size(20);
    for k in [2usize, 12, 18] {
        let grid = BinGrid::new(TimeWindow::morning_commute(), k).unwrap();
        let cfg = EmConfig::for_grid(&grid);
        group.bench_function(format!("k={k}"), |b| b.iter(|| fit_em(black_box(&times), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_erf, bench_binning, bench_em);
criterion_main!(benches);
