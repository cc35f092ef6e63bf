use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use hpca::splitmix::SplitMix64;
use hpca::{
    fit, gaussian_matrix, gram_schmidt, run_pass, sym_eig, Execution, HashSpec, HpcaConfig,
    Projector, SparseDataset, SparseRow,
};

fn sparse_rows(n: usize, p: usize, nnz: usize, seed: u64) -> Vec<SparseRow> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let pairs = (0..nnz)
                .map(|_| ((rng.next_u64() % p as u64) as usize, rng.next_f64() - 0.5))
                .collect();
            SparseRow::from_pairs(pairs, None).unwrap()
        })
        .collect()
}

fn hash_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("hash_apply");
    let rows = sparse_rows(1, 1_000_000, 1000, 1);
    group.throughput(Throughput::Elements(1000));
    for d in [256, 4096, 65536] {
        let spec = HashSpec::new(d, 3, 4).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &spec, |b, spec| {
            b.iter(|| spec.apply(black_box(&rows[0])))
        });
    }
    group.finish();
}

fn pass(c: &mut Criterion) {
    let mut group = c.benchmark_group("pass");
    let ds = SparseDataset::from_rows(sparse_rows(5000, 1_000_000, 50, 2), None).unwrap();
    group.throughput(Throughput::Elements(ds.n() as u64));
    for l in [8, 32] {
        let proj: Projector = HashSpec::new(1024, 5, 6).unwrap().into();
        let probe = gaussian_matrix(1024, l, 7);
        group.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, _| {
            b.iter(|| run_pass(&ds, &proj, &probe, false, Execution::default()).unwrap())
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eig");
    for n in [16, 64] {
        let g = gaussian_matrix(n, n, 8);
        let a = g.t_matmul(&g);
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| sym_eig(a).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("gram_schmidt");
    for (d, l) in [(1024, 16), (16384, 32)] {
        let y = gaussian_matrix(d, l, 9);
        group.bench_with_input(BenchmarkId::new(d.to_string(), l), &y, |b, y| {
            b.iter(|| gram_schmidt(y).unwrap())
        });
    }
    group.finish();
}

fn small_fit(c: &mut Criterion) {
    let ds = SparseDataset::from_rows(sparse_rows(2000, 100_000, 40, 10), None).unwrap();
    let cfg = HpcaConfig::new(10, HashSpec::new(512, 11, 12).unwrap()).with_oversampling(20);
    c.bench_function("fit_2000x100000_d512_k10", |b| {
        b.iter(|| fit(&ds, &cfg).unwrap())
    });
}

criterion_group!(benches, hash_apply, pass, spectral, small_fit);
criterion_main!(benches);
