//! Cross-module checks against brute-force oracles written here, independently
//! of the library code paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translike_core::bilip_match::{
    bottleneck_bijection, bottleneck_bijection_clouds, hall_violator, max_matching, DisplacementGraph,
};
use translike_core::hyp3::{dist, HPoint};
use translike_core::udbg_profile::{covering_radius, min_pairwise_distance, BoxRegion};
use translike_core::PointCloud;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            HPoint::new(
                rng.gen_range(-spread..spread),
                rng.gen_range(-spread..spread),
                rng.gen_range(-1.5f64..1.5).exp(),
            )
            .unwrap()
        })
        .collect();
    PointCloud::new("random", pts).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_bottleneck(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
    permutations(n)
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost(i, j)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Maximum matching size by subset dynamic programming over right vertices.
fn brute_matching(n: usize, edge: &dyn Fn(usize, usize) -> bool) -> usize {
    let mut best = vec![0usize; 1 << n];
    let mut reach = vec![false; 1 << n];
    reach[0] = true;
    let mut answer = 0;
    for i in 0..n {
        let mut next = reach.clone();
        for mask in 0..1usize << n {
            if !reach[mask] {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) == 0 && edge(i, j) {
                    next[mask | (1 << j)] = true;
                }
            }
        }
        reach = next;
    }
    for (mask, ok) in reach.iter().enumerate() {
        if *ok {
            best[mask] = mask.count_ones() as usize;
            answer = answer.max(best[mask]);
        }
    }
    answer
}

#[test]
fn bottleneck_matches_permutation_search_on_integer_costs() {
    // Integer costs force many ties between candidate thresholds.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..=7);
        let table: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0..6) as f64).collect();
        let cost = |i: usize, j: usize| table[i * n + j];
        let psi = bottleneck_bijection(n, n, cost).unwrap();
        assert_eq!(psi.r_star, brute_bottleneck(n, &cost));
        let realised = psi
            .pairing
            .iter()
            .enumerate()
            .map(|(i, &j)| cost(i, j))
            .fold(0.0, f64::max);
        assert_eq!(realised, psi.r_star);
    }
}

#[test]
fn bottleneck_on_clouds_matches_permutation_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..120 {
        let l = random_cloud(&mut rng, 7, 3.0);
        let r = random_cloud(&mut rng, 7, 3.0);
        let psi = bottleneck_bijection_clouds(&l, &r).unwrap();
        let brute = brute_bottleneck(7, &|i, j| dist(&l.points()[i], &r.points()[j]));
        assert_eq!(psi.r_star, brute);
    }
}

#[test]
fn matching_size_and_hall_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let n = rng.gen_range(1..=7);
        let density = rng.gen_range(0.05..0.6);
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_bool(density)).collect())
            .collect();
        let lists = adj.iter().map(|row| (0..n).filter(|&j| row[j]).collect()).collect();
        let g = DisplacementGraph::from_adjacency(n, lists).unwrap();
        let m = max_matching(&g);
        assert_eq!(m.size, brute_matching(n, &|i, j| adj[i][j]));
        for (i, j) in m.left_to_right.iter().enumerate() {
            if let Some(j) = *j {
                assert!(adj[i][j]);
                assert_eq!(m.right_to_left[j], Some(i));
            }
        }
        match hall_violator(&g) {
            None => assert_eq!(m.size, n),
            Some(s) => {
                let mut hit = vec![false; n];
                for &i in &s {
                    for j in 0..n {
                        hit[j] |= adj[i][j];
                    }
                }
                let neighbours = hit.iter().filter(|&&h| h).count();
                assert!(neighbours < s.len(), "|N(S)| = {neighbours}, |S| = {}", s.len());
            }
        }
    }
}

#[test]
fn hall_violators_below_feasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let l = random_cloud(&mut rng, 7, 2.0);
        let r = random_cloud(&mut rng, 7, 2.0);
        let d = |i: usize, j: usize| dist(&l.points()[i], &r.points()[j]);
        let r_star = bottleneck_bijection_clouds(&l, &r).unwrap().r_star;
        let mut thresholds: Vec<f64> = (0..49).map(|k| d(k / 7, k % 7)).filter(|&t| t < r_star).collect();
        thresholds.push(0.0);
        for t in thresholds {
            let g = DisplacementGraph::build(7, t, d);
            let s = hall_violator(&g).expect("infeasible threshold has a violator");
            let neighbours = (0..7).filter(|&j| s.iter().any(|&i| d(i, j) <= t)).count();
            assert!(neighbours < s.len());
        }
        assert!(hall_violator(&DisplacementGraph::build(7, r_star, d)).is_none());
    }
}

#[test]
fn min_distance_matches_all_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in [2, 3, 50, 400, 1500] {
        let cloud = random_cloud(&mut rng, n, 20.0);
        let p = cloud.points();
        let mut best = (f64::INFINITY, (0, 0));
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(&p[i], &p[j]);
                if d < best.0 {
                    best = (d, (i, j));
                }
            }
        }
        let md = min_pairwise_distance(&cloud).unwrap();
        assert_eq!(md.distance, best.0);
        assert_eq!(md.witness, best.1);
    }
}

#[test]
fn covering_radius_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let cloud = random_cloud(&mut rng, 300, 4.0);
    let region = BoxRegion::new((-3.0, 3.0), (-3.0, 3.0), (0.5, 2.0)).unwrap();
    let cov = covering_radius(&cloud, &region, 2000, 99).unwrap();
    let (nearest, d) = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (i, dist(p, &cov.worst_sample)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_eq!(d, cov.radius);
    assert_eq!(nearest, cov.nearest);
    assert!(cov.worst_sample.x().abs() <= 3.0 && (0.5..=2.0).contains(&cov.worst_sample.z()));
}
