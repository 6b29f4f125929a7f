//! Uniform discreteness, bounded geometry and net checks on finite clouds.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::{NearIndex, PointCloud};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::hyp3::{dist, HPoint};

/// Minimum pairwise distance with the lexicographically smallest realizing
/// pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinDistance {
    pub distance: f64,
    pub witness: (usize, usize),
}

/// Exact minimum over all pairs.
///
/// Pairs are swept in order of `ln z`; once the height gap alone exceeds the
/// current best the rest of the sweep from that point cannot improve it.
pub fn min_pairwise_distance(cloud: &PointCloud) -> Result<MinDistance> {
    let pts = cloud.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            actual: pts.len(),
        });
    }
    let mut order: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| (p.z().ln(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
    for (s, &(ln_i, i)) in order.iter().enumerate() {
        for &(ln_j, j) in &order[s + 1..] {
            if ln_j - ln_i > best.0 * (1.0 + 1e-9) + 1e-12 {
                break;
            }
            let d = dist(&pts[i], &pts[j]);
            let pair = (i.min(j), i.max(j));
            if d < best.0 || (d == best.0 && pair < (best.1, best.2)) {
                best = (d, pair.0, pair.1);
            }
        }
    }
    Ok(MinDistance {
        distance: best.0,
        witness: (best.1, best.2),
    })
}

/// Which ball centres [`ball_profile`] examines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CenterStrategy {
    All,
    Sample { k: usize, seed: u64 },
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub radii: Vec<f64>,
    /// Max ball cardinality over the examined centres, per radius.
    pub counts: Vec<usize>,
    pub centers_sampled: usize,
}

impl GrowthProfile {
    /// `r,N_r` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,N_r\n");
        for (r, n) in self.radii.iter().zip(&self.counts) {
            s.push_str(&format!("{},{}\n", fmt17(*r), n));
        }
        s
    }
}

pub fn ball_profile(cloud: &PointCloud, radii: &[f64], centers: &CenterStrategy) -> Result<GrowthProfile> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, actual: 0 });
    }
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "radii must be finite, nonnegative and increasing".into(),
        ));
    }
    let centers: Vec<usize> = match centers {
        CenterStrategy::All => (0..n).collect(),
        CenterStrategy::Sample { k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut v = sample_indices(&mut rng, n, (*k).min(n)).into_vec();
            v.sort_unstable();
            v
        }
        CenterStrategy::Indices(v) => {
            if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidParameter(format!("center index {bad} out of range")));
            }
            v.clone()
        }
    };
    let r_max = radii.last().copied().unwrap_or(0.0);
    let index = NearIndex::new(cloud.points());
    let counts = centers
        .par_iter()
        .map(|&c| {
            let mut d: Vec<f64> = Vec::new();
            index.for_each_within(&cloud.points()[c], r_max, |_, di| d.push(di));
            d.sort_by(f64::total_cmp);
            radii
                .iter()
                .map(|&r| d.partition_point(|&x| x <= r))
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![0; radii.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect(),
        );
    Ok(GrowthProfile {
        radii: radii.to_vec(),
        counts,
        centers_sampled: centers.len(),
    })
}

/// Least-squares slope of `ln N_r` against `r` over radii in `[r_lo, r_hi]`
/// with `N_r >= 2`.
pub fn growth_slope(profile: &GrowthProfile, r_lo: f64, r_hi: f64) -> Result<f64> {
    let data: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&profile.counts)
        .filter(|(r, n)| **r >= r_lo && **r <= r_hi && **n >= 2)
        .map(|(r, n)| (*r, (*n as f64).ln()))
        .collect();
    if data.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need 3 radii with N_r >= 2 in [{r_lo}, {r_hi}], have {}",
            data.len()
        )));
    }
    Ok(least_squares_slope(&data))
}

pub(crate) fn least_squares_slope(data: &[(f64, f64)]) -> f64 {
    let n = data.len() as f64;
    let mx = data.iter().map(|d| d.0).sum::<f64>() / n;
    let my = data.iter().map(|d| d.1).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = data.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Draws points from a compact region of the upper half-space.
pub trait RegionSampler: Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> HPoint;
}

/// `x`, `y` uniform and `ln z` uniform over a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxRegion {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl BoxRegion {
    pub fn new(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Result<Self> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !(ok(x) && ok(y) && ok(z) && z.0 > 0.0) {
            return Err(Error::InvalidParameter("degenerate sampling box".into()));
        }
        Ok(Self { x, y, z })
    }
}

fn uniform(rng: &mut dyn RngCore, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

impl RegionSampler for BoxRegion {
    fn sample(&self, rng: &mut dyn RngCore) -> HPoint {
        let x = uniform(rng, self.x.0, self.x.1);
        let y = uniform(rng, self.y.0, self.y.1);
        let z = uniform(rng, self.z.0.ln(), self.z.1.ln()).exp();
        HPoint::new(x, y, z).expect("box is inside the half-space")
    }
}

/// The part of the region spanned by a dyadic window `(A, C)` that stays
/// `margin` lattice steps away from its boundary: `ln z` uniform over levels
/// `|c| <= C - margin`, and at height `z` in level `c = floor(log2 z)` the
/// horizontal coordinates uniform in `[-(A - margin) 2^c, (A - margin) 2^c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowInterior {
    pub half_width: i64,
    pub levels: i64,
    pub margin: i64,
}

impl WindowInterior {
    pub fn new(half_width: i64, levels: i64, margin: i64) -> Result<Self> {
        if margin < 0 || half_width <= margin || levels < margin {
            return Err(Error::InvalidParameter(format!(
                "window (A={half_width}, C={levels}) has no interior at margin {margin}"
            )));
        }
        Ok(Self {
            half_width,
            levels,
            margin,
        })
    }
}

impl RegionSampler for WindowInterior {
    fn sample(&self, rng: &mut dyn RngCore) -> HPoint {
        let top = (self.levels - self.margin) as f64 * std::f64::consts::LN_2;
        let z = uniform(rng, -top, top).exp();
        let level = z.log2().floor();
        let extent = (self.half_width - self.margin) as f64 * level.exp2();
        let x = uniform(rng, -extent, extent);
        let y = uniform(rng, -extent, extent);
        HPoint::new(x, y, z).expect("interior sample is inside the half-space")
    }
}

/// Always returns the same point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint(pub HPoint);

impl RegionSampler for FixedPoint {
    fn sample(&self, _rng: &mut dyn RngCore) -> HPoint {
        self.0
    }
}

/// Draws uniformly from the points of a cloud.
#[derive(Debug, Clone)]
pub struct CloudSampler(pub PointCloud);

impl RegionSampler for CloudSampler {
    fn sample(&self, rng: &mut dyn RngCore) -> HPoint {
        let i = rng.gen_range(0..self.0.len());
        self.0.points()[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Covering {
    pub radius: f64,
    pub worst_sample: HPoint,
    pub nearest: usize,
    pub samples: usize,
}

/// Max over `n_samples` seeded samples of the distance to the nearest cloud
/// point. Samples are drawn sequentially, so the result does not depend on
/// the number of worker threads.
pub fn covering_radius(
    cloud: &PointCloud,
    sampler: &dyn RegionSampler,
    n_samples: usize,
    seed: u64,
) -> Result<Covering> {
    if cloud.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, actual: 0 });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<HPoint> = (0..n_samples).map(|_| sampler.sample(&mut rng)).collect();
    let index = NearIndex::new(cloud.points());
    let (radius, s, nearest) = samples
        .par_iter()
        .enumerate()
        .map(|(s, q)| {
            let (i, d) = index.nearest(q).expect("cloud is nonempty");
            (d, s, i)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(Covering {
        radius,
        worst_sample: samples[s],
        nearest,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horolattice::LatticeWindow;

    fn pt(x: f64, y: f64, z: f64) -> HPoint {
        HPoint::new(x, y, z).unwrap()
    }

    fn brute_min(cloud: &PointCloud) -> f64 {
        let p = cloud.points();
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min(dist(&p[i], &p[j]));
            }
        }
        best
    }

    #[test]
    fn min_distance_examples() {
        let w = LatticeWindow::build(4, 2).unwrap().to_cloud();
        let m = min_pairwise_distance(&w).unwrap();
        assert!((m.distance - std::f64::consts::LN_2).abs() < 1e-12);
        let (p, q) = (w.points()[m.witness.0], w.points()[m.witness.1]);
        assert_eq!((p.x(), p.y()), (q.x(), q.y()));
        assert_eq!(p.z().max(q.z()), 2.0 * p.z().min(q.z()));

        let two = PointCloud::new("e", vec![pt(0.0, 0.0, 1.0), pt(0.0, 0.0, std::f64::consts::E)]).unwrap();
        assert!((min_pairwise_distance(&two).unwrap().distance - 1.0).abs() < 1e-15);

        let flat = LatticeWindow::build(1, 0).unwrap().to_cloud();
        let m = min_pairwise_distance(&flat).unwrap();
        assert_eq!(m.distance, brute_min(&flat));
        assert!((m.distance - 1.5f64.acosh()).abs() < 1e-15);

        let one = PointCloud::new("1", vec![pt(0.0, 0.0, 1.0)]).unwrap();
        assert!(matches!(min_pairwise_distance(&one), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn min_distance_equals_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 5, 40, 300] {
            let pts: Vec<HPoint> = (0..n)
                .map(|_| {
                    pt(
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-2.0f64..2.0).exp(),
                    )
                })
                .collect();
            let cloud = PointCloud::new("r", pts).unwrap();
            assert_eq!(min_pairwise_distance(&cloud).unwrap().distance, brute_min(&cloud));
        }
    }

    #[test]
    fn ball_profile_small_radii() {
        let w = LatticeWindow::build(4, 2).unwrap().to_cloud();
        let p = ball_profile(&w, &[0.0, 0.5], &CenterStrategy::All).unwrap();
        assert_eq!(p.counts, vec![1, 1]);
        assert_eq!(p.centers_sampled, w.len());
        assert!(ball_profile(&w, &[1.0, 0.5], &CenterStrategy::All).is_err());
        let empty = PointCloud::new("e", vec![]).unwrap();
        assert!(ball_profile(&empty, &[1.0], &CenterStrategy::All).is_err());
    }

    #[test]
    fn ball_profile_matches_brute_count() {
        let w = LatticeWindow::build(4, 2).unwrap().to_cloud();
        let radii = [0.0, 1.0, 2.0, 3.0];
        let prof = ball_profile(&w, &radii, &CenterStrategy::Sample { k: 30, seed: 5 }).unwrap();
        let again = ball_profile(&w, &radii, &CenterStrategy::Sample { k: 30, seed: 5 }).unwrap();
        assert_eq!(prof, again);
        let full = ball_profile(&w, &radii, &CenterStrategy::All).unwrap();
        let pts = w.points();
        for (k, &r) in radii.iter().enumerate() {
            let brute = (0..pts.len())
                .map(|c| pts.iter().filter(|q| dist(&pts[c], q) <= r).count())
                .max()
                .unwrap();
            assert_eq!(full.counts[k], brute);
            assert!(prof.counts[k] <= brute);
        }
        assert!(full.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn slope_examples() {
        let radii: Vec<f64> = (1..=6).map(f64::from).collect();
        // counts e^r are not integral; use the helper on the exact data instead
        let data: Vec<(f64, f64)> = radii.iter().map(|&r| (r, r)).collect();
        assert!((least_squares_slope(&data) - 1.0).abs() < 1e-12);
        let flat = GrowthProfile {
            radii: radii.clone(),
            counts: vec![7; 6],
            centers_sampled: 1,
        };
        assert_eq!(growth_slope(&flat, 0.0, 10.0).unwrap(), 0.0);
        let pow2 = GrowthProfile {
            radii: radii.clone(),
            counts: (1..=6).map(|r| 1usize << r).collect(),
            centers_sampled: 1,
        };
        assert!((growth_slope(&pow2, 0.0, 10.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(matches!(growth_slope(&flat, 1.0, 2.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn covering_examples() {
        let single = PointCloud::new("s", vec![pt(0.0, 0.0, 1.0)]).unwrap();
        let c = covering_radius(&single, &FixedPoint(pt(0.0, 0.0, 2.0)), 3, 0).unwrap();
        assert!((c.radius - std::f64::consts::LN_2).abs() < 1e-15);

        let w = LatticeWindow::build(3, 1).unwrap().to_cloud();
        let c = covering_radius(&w, &CloudSampler(w.clone()), 200, 1).unwrap();
        assert_eq!(c.radius, 0.0);

        let empty = PointCloud::new("e", vec![]).unwrap();
        assert!(covering_radius(&empty, &FixedPoint(pt(0.0, 0.0, 1.0)), 1, 0).is_err());
    }

    #[test]
    fn covering_is_seed_deterministic() {
        let w = LatticeWindow::build(6, 3).unwrap().to_cloud();
        let region = WindowInterior::new(6, 3, 2).unwrap();
        let a = covering_radius(&w, &region, 2000, 9).unwrap();
        let b = covering_radius(&w, &region, 2000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.radius < 0.75);
    }

    #[test]
    fn samplers_stay_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = BoxRegion::new((-8.0, 8.0), (-8.0, 8.0), (0.125, 8.0)).unwrap();
        let w = WindowInterior::new(16, 8, 2).unwrap();
        for _ in 0..1000 {
            let p = b.sample(&mut rng);
            assert!(p.x().abs() <= 8.0 && p.y().abs() <= 8.0 && (0.125..=8.0).contains(&p.z()));
            let q = w.sample(&mut rng);
            let c = q.z().log2().floor();
            assert!(c.abs() <= 6.0 || q.z() == 64.0);
            assert!(q.x().abs() <= 14.0 * c.exp2());
        }
        assert!(WindowInterior::new(2, 4, 2).is_err());
    }
}
