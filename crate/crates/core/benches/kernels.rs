//! Hot kernels under a one-thread pool and the default pool.
//!
//! With the `parallel` feature (default) each benchmark runs twice, once
//! inside a single-thread rayon pool and once on the global pool. Build with
//! `--no-default-features` to measure the plain sequential loops instead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use websift::corpus::{CountVector, DocTermMatrix, Vocabulary};
use websift::discovery::rank_candidates;
use websift::events::assemble_update_tensor;
use websift::locate::{restricted_betweenness_indexed, AsGraph};
use websift::sentiment::{build_bipartite, semi_supervised_fit, LabelData, SemiSupervisedParams};
use websift::synth::{planted_event_scenario, random_graph_edges, PlantedEventConfig};
use websift::tensor::{cp_als, CpOptions};

fn modes() -> Vec<(&'static str, Option<usize>)> {
    if websift::par::is_parallel() {
        vec![("threads=1", Some(1)), ("threads=all", None)]
    } else {
        vec![("sequential", None)]
    }
}

#[cfg(feature = "parallel")]
fn within<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn within<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn bench_cp_als(c: &mut Criterion) {
    let scenario = planted_event_scenario(&PlantedEventConfig::default(), 1);
    let (x, _) = assemble_update_tensor(&scenario.records, scenario.window, None).unwrap();
    let opts = CpOptions {
        max_sweeps: 20,
        tol: 1e-15,
        seed: 1,
    };
    let mut group = c.benchmark_group("cp_als_planted_rank2_20_sweeps");
    group.sample_size(20);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| within(threads, || cp_als(black_box(&x), 2, &opts).unwrap()))
        });
    }
    group.finish();
}

fn bench_betweenness(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 2000;
    let g = AsGraph::from_edges(random_graph_edges(n, 4.0 / n as f64, &mut rng));
    let sources: Vec<usize> = (0..g.vertex_count()).step_by(4).collect();
    let targets: Vec<usize> = (0..g.vertex_count()).step_by(50).collect();
    let mut group = c.benchmark_group("restricted_betweenness_2000");
    group.sample_size(20);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                within(threads, || {
                    restricted_betweenness_indexed(&g, black_box(&sources), &targets)
                })
            })
        });
    }
    group.finish();
}

fn random_counts(rows: usize, dim: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<CountVector> {
    (0..rows)
        .map(|_| {
            let mut pairs = Vec::new();
            for j in 0..dim {
                if rng.random_bool(density) {
                    pairs.push((j, rng.random_range(1..5) as f64));
                }
            }
            CountVector::from_pairs(dim, pairs).unwrap()
        })
        .collect()
}

fn bench_sentiment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, v) = (3000, 5000);
    let rows = random_counts(n, v, 0.004, &mut rng);
    let vocab = Vocabulary::from_terms((0..v).map(|j| format!("w{j}"))).unwrap();
    let x = DocTermMatrix::new(vocab, rows, (0..n).map(|i| format!("d{i}")).collect()).unwrap();
    let g = build_bipartite(&x).unwrap();
    let mut labels = LabelData::default();
    for i in (0..n).step_by(10) {
        labels
            .doc_labels
            .insert(i, if i % 20 == 0 { 1.0 } else { -1.0 });
    }
    for j in (0..v).step_by(25) {
        labels
            .lexicon
            .insert(j, if j % 50 == 0 { 1.0 } else { -1.0 });
    }
    let params = SemiSupervisedParams::default();
    let mut group = c.benchmark_group("semi_supervised_fit_3000x5000");
    group.sample_size(10);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                within(threads, || {
                    semi_supervised_fit(&g, black_box(&labels), &params).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn bench_rank_candidates(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dim = 20_000;
    let seeds = random_counts(20, dim, 0.01, &mut rng);
    let candidates: Vec<(String, CountVector)> = random_counts(5000, dim, 0.01, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (format!("c{i}"), v))
        .collect();
    let mut group = c.benchmark_group("rank_candidates_5000");
    group.sample_size(20);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                within(threads, || {
                    rank_candidates(&seeds, black_box(&candidates), 0.1).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_cp_als,
    bench_betweenness,
    bench_sentiment,
    bench_rank_candidates
);
criterion_main!(benches);
