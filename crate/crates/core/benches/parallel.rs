//! Sequential vs rayon execution of the data-parallel loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use slidedx::diagnosis::sweep_with;
use slidedx::domain::{binarize, merge_classes, ClassScheme, Magnification};
use slidedx::ensemble::{ensemble_multiscale_with, median_filter_with};
use slidedx::stats::{stat_classify_with, truncate_above_quantile, Sample, StatParams, TestKind};
use slidedx::synth::{gen_population, gen_population_with, gen_probability_map, gen_scan_records, MapSpec, PopulationSpec};
use slidedx::{Diagnosis, Exec};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn stat_classify(c: &mut Criterion) {
    let pop = |d, seed| truncate_above_quantile(&gen_population(&PopulationSpec::preset(d, 100_000, seed).unwrap()).unwrap(), 0.5).unwrap();
    let (pc, pnc) = (pop(Diagnosis::C, 1), pop(Diagnosis::NC, 2));
    let x = gen_population(&PopulationSpec::preset(Diagnosis::C, 500, 3).unwrap()).unwrap();
    let x = Sample::new(x.values().to_vec()).unwrap();
    let mut g = c.benchmark_group("stat_classify");
    for (kind, params) in [
        (TestKind::Welch, StatParams::default()),
        (TestKind::Wmw, StatParams::default()),
        (TestKind::Permutation, StatParams { draws: 100, ..Default::default() }),
    ] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(kind.name(), name), &exec, |b, &e| {
                b.iter(|| stat_classify_with(black_box(&x), &pc, &pnc, &params, kind, e).unwrap())
            });
        }
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let recs = gen_scan_records(5000, 0.45, 0.3, 4).unwrap();
    let lower: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
    let upper: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 * 0.1).collect();
    let mut g = c.benchmark_group("sweep_40x60");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| sweep_with(black_box(&recs), &lower, &upper, exec).unwrap()));
    }
    g.finish();
}

fn maps(c: &mut Criterion) {
    let spec = |h: usize, m, seed| MapSpec { height: h, width: h, blobs: 5, salt: 0.01, magnification: m, seed };
    let maps = [
        gen_probability_map(&spec(512, Magnification::X40, 1)).unwrap(),
        gen_probability_map(&spec(256, Magnification::X20, 2)).unwrap(),
        gen_probability_map(&spec(128, Magnification::X10, 3)).unwrap(),
    ];
    let bin = binarize(&merge_classes(&maps[0], &ClassScheme::setting(1).unwrap()).unwrap()).unwrap();
    let mut g = c.benchmark_group("maps");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("ensemble_multiscale", name), |b| {
            b.iter(|| ensemble_multiscale_with(black_box(&maps), exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("median_filter_k3", name), |b| {
            b.iter(|| median_filter_with(black_box(&bin), 3, exec).unwrap())
        });
    }
    g.finish();
}

fn populations(c: &mut Criterion) {
    let spec = PopulationSpec::preset(Diagnosis::C, 1_000_000, 5).unwrap();
    let mut g = c.benchmark_group("gen_population_1e6");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| gen_population_with(black_box(&spec), exec).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = stat_classify, sweep, maps, populations
}
criterion_main!(benches);
