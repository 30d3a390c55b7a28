use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hybrid_mips::data::{generate_synthetic, generate_synthetic_with, SynthConfig};
use hybrid_mips::dense::{even_widths, train_codebooks};
use hybrid_mips::eval::{verify_bounds, Suite, VerifyParams};
use hybrid_mips::pipeline::{build_index, HybridIndexConfig};
use hybrid_mips::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn synth_cfg() -> SynthConfig {
    SynthConfig {
        n: 50_000,
        n_queries: 200,
        d_sparse: 10_000,
        d_dense: 32,
        seed: 1,
        ..Default::default()
    }
}

fn batch_search(c: &mut Criterion) {
    let syn = generate_synthetic(&synth_cfg()).unwrap();
    let idx = build_index(&syn.data, &HybridIndexConfig::default(), Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("search_batch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| idx.search_batch(&syn.queries, 20, exec).unwrap())
        });
    }
    g.finish();
}

fn codebook_training(c: &mut Criterion) {
    let syn = generate_synthetic(&SynthConfig { n: 20_000, ..synth_cfg() }).unwrap();
    let x = syn.data.dense_matrix();
    let widths = even_widths(32, 16).unwrap();
    let mut g = c.benchmark_group("train_codebooks");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train_codebooks(x, &widths, 16, 10, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate_synthetic");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_synthetic_with(&synth_cfg(), exec).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = VerifyParams::default();
    let mut g = c.benchmark_group("verify_prop3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_bounds(Suite::Prop3, &p, 10_000, 0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, batch_search, codebook_training, synthesis, monte_carlo);
criterion_main!(benches);
