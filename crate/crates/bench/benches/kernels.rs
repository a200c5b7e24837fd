use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kernelscope::geometry::{PairSweep, DEFAULT_LAMBDA_GRID};
use kernelscope::kernels::{fidelity_gram, projected_gaussian_1rdm_gram};
use kernelscope::pipeline::pauli_features;
use kernelscope::rng::stream;
use kernelscope::shadows::{collect, qinf_estimate};
use kernelscope::Embedding;
use kernelscope_bench::{pair_fixture, states};

fn embedding(c: &mut Criterion) {
    let mut g = c.benchmark_group("embed");
    for emb in [Embedding::E1, Embedding::E2, Embedding::E3] {
        g.bench_with_input(BenchmarkId::new(format!("{emb:?}"), 10), &emb, |b, &emb| {
            b.iter(|| states(emb, 10, 8, 1))
        });
    }
    g.finish();
}

fn grams(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram");
    g.sample_size(10);
    for n in [4, 8, 12] {
        let s = states(Embedding::E2, n, 100, 2);
        let f = pauli_features(&s);
        g.bench_with_input(BenchmarkId::new("fidelity", n), &s, |b, s| b.iter(|| fidelity_gram(s).unwrap()));
        g.bench_with_input(BenchmarkId::new("projected_gaussian", n), &f, |b, f| {
            b.iter(|| projected_gaussian_1rdm_gram(f, 1.0).unwrap())
        });
    }
    g.finish();
}

fn geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("geometry");
    g.sample_size(10);
    for count in [100, 200] {
        let (q, suite) = pair_fixture(6, count, 3);
        g.bench_with_input(BenchmarkId::new("pair_sweep", count), &count, |b, _| {
            b.iter(|| {
                let sweep = PairSweep::new(&q, &suite[5]).unwrap();
                DEFAULT_LAMBDA_GRID.iter().map(|&l| sweep.at(l).g_gen).sum::<f64>()
            })
        });
    }
    g.finish();
}

fn shadows(c: &mut Criterion) {
    let s = states(Embedding::E2, 4, 2, 4);
    let a = collect(&s[0], 500, &mut stream(4, "bench", 0), 4).unwrap();
    let b2 = collect(&s[1], 500, &mut stream(4, "bench", 1), 4).unwrap();
    c.bench_function("qinf_estimate/n4_ns500", |b| b.iter(|| qinf_estimate(&a, &b2, 1.0).unwrap()));
}

criterion_group!(benches, embedding, grams, geometry, shadows);
criterion_main!(benches);
