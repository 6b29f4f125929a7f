use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translike_core::bilip_match::{bottleneck_bijection_clouds, max_matching, DisplacementGraph};
use translike_core::horolattice::LatticeWindow;
use translike_core::hyp3::{dist, HPoint};
use translike_core::udbg_profile::min_pairwise_distance;
use translike_core::PointCloud;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            HPoint::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-2.0f64..2.0).exp(),
            )
            .unwrap()
        })
        .collect();
    PointCloud::new("bench", pts).unwrap()
}

fn distance(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cloud = random_cloud(&mut rng, 1024);
    let p = cloud.points();
    c.bench_function("dist/1023 pairs", |b| {
        b.iter(|| {
            p.windows(2)
                .map(|w| dist(black_box(&w[0]), black_box(&w[1])))
                .sum::<f64>()
        })
    });
}

fn min_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_pairwise_distance");
    group.sample_size(10);
    for (a, k) in [(8, 4), (16, 8)] {
        let cloud = LatticeWindow::build(a, k).unwrap().to_cloud();
        group.bench_with_input(BenchmarkId::from_parameter(cloud.len()), &cloud, |b, cloud| {
            b.iter(|| min_pairwise_distance(cloud).unwrap())
        });
    }
    group.finish();
}

fn matching(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("matching");
    group.sample_size(10);
    for n in [100, 400] {
        let (l, r) = (random_cloud(&mut rng, n), random_cloud(&mut rng, n));
        let graph = DisplacementGraph::build(n, 3.0, |i, j| dist(&l.points()[i], &r.points()[j]));
        group.bench_with_input(BenchmarkId::new("hopcroft_karp", n), &graph, |b, g| {
            b.iter(|| max_matching(g))
        });
        group.bench_with_input(BenchmarkId::new("bottleneck", n), &(l, r), |b, (l, r)| {
            b.iter(|| bottleneck_bijection_clouds(l, r).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, distance, min_distance, matching);
criterion_main!(benches);
