//! Immutable point clouds in the upper half-space, their CSV form, and a
//! slab index for exact range and nearest-neighbour queries.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fmt17;
use crate::hyp3::{dist, HPoint};

/// A finite, densely indexed set of distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    label: String,
    points: Vec<HPoint>,
}

impl PointCloud {
    /// Fails with [`Error::DuplicatePoint`] if two points are bitwise equal.
    pub fn new(label: impl Into<String>, points: Vec<HPoint>) -> Result<Self> {
        let mut seen: HashMap<HPoint, usize> = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if let Some(&first) = seen.get(p) {
                return Err(Error::DuplicatePoint { first, second: i });
            }
            seen.insert(*p, i);
        }
        Ok(Self {
            label: label.into(),
            points,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn points(&self) -> &[HPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&HPoint> {
        self.points.get(i)
    }

    /// The subcloud at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize], label: impl Into<String>) -> PointCloud {
        PointCloud {
            label: label.into(),
            points: indices.iter().map(|&i| self.points[i]).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "z"])?;
        for p in &self.points {
            w.write_record([fmt17(p.x()), fmt17(p.y()), fmt17(p.z())])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads the `x,y,z` CSV format. Extra columns are ignored.
    pub fn read_csv<R: Read>(label: impl Into<String>, input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            })
        };
        let (ix, iy, iz) = (col("x")?, col("y")?, col("z")?);
        let mut points = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let line = row + 2;
            let field = |i: usize| -> Result<f64> {
                let s = record.get(i).unwrap_or("");
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("bad number `{s}`: {e}"),
                })
            };
            let p = HPoint::new(field(ix)?, field(iy)?, field(iz)?).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            points.push(p);
        }
        Self::new(label, points)
    }
}

const SLAB_WIDTH: f64 = 0.5;
// Relative slack on pruning bounds so that rounding never discards a
// candidate that the exact comparison would keep.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Slab {
    ln_lo: f64,
    ln_hi: f64,
    z_max: f64,
    // (x, index) sorted by x, then index
    by_x: Vec<(f64, usize)>,
}

/// Exact range / nearest queries under the hyperbolic metric.
///
/// Points are bucketed by `ln z` into slabs; inside a slab they are sorted by
/// `x`. Both bounds used for pruning are lower bounds of the true distance:
/// `dist >= |ln z1 - ln z2|` and `cosh(dist) - 1 >= dx^2 / (2 z1 z2)`.
#[derive(Debug, Clone)]
pub struct NearIndex {
    points: Vec<HPoint>,
    slabs: Vec<Slab>,
}

impl NearIndex {
    pub fn new(points: &[HPoint]) -> Self {
        let mut buckets: HashMap<i64, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = (p.z().ln() / SLAB_WIDTH).floor() as i64;
            buckets.entry(key).or_default().push(i);
        }
        let mut keys: Vec<i64> = buckets.keys().copied().collect();
        keys.sort_unstable();
        let slabs = keys
            .into_iter()
            .map(|k| {
                let idx = &buckets[&k];
                let mut by_x: Vec<(f64, usize)> = idx.iter().map(|&i| (points[i].x(), i)).collect();
                by_x.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let lns = idx.iter().map(|&i| points[i].z().ln());
                let (ln_lo, ln_hi) = lns.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let z_max = idx.iter().map(|&i| points[i].z()).fold(0.0, f64::max);
                Slab {
                    ln_lo,
                    ln_hi,
                    z_max,
                    by_x,
                }
            })
            .collect();
        Self {
            points: points.to_vec(),
            slabs,
        }
    }

    pub fn points(&self) -> &[HPoint] {
        &self.points
    }

    fn ln_gap(slab: &Slab, ln_q: f64) -> f64 {
        if ln_q < slab.ln_lo {
            slab.ln_lo - ln_q
        } else if ln_q > slab.ln_hi {
            ln_q - slab.ln_hi
        } else {
            0.0
        }
    }

    /// Largest horizontal offset compatible with distance `r` to a point of `slab`.
    fn horizontal_bound(slab: &Slab, q: &HPoint, r: f64) -> f64 {
        let g = r.cosh() - 1.0;
        (2.0 * q.z() * slab.z_max * g).sqrt() * (1.0 + PRUNE_SLACK) + f64::MIN_POSITIVE
    }

    /// Indices of all points with `dist(q, p) <= r`, ascending.
    pub fn within(&self, q: &HPoint, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(q, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Number of points with `dist(q, p) <= r`.
    pub fn count_within(&self, q: &HPoint, r: f64) -> usize {
        let mut n = 0;
        self.for_each_within(q, r, |_, _| n += 1);
        n
    }

    /// Calls `f(index, distance)` for every point within `r` of `q`, in no
    /// particular order.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, q: &HPoint, r: f64, mut f: F) {
        let ln_q = q.z().ln();
        let ln_limit = r * (1.0 + PRUNE_SLACK) + PRUNE_SLACK;
        for slab in &self.slabs {
            if Self::ln_gap(slab, ln_q) > ln_limit {
                continue;
            }
            let b = Self::horizontal_bound(slab, q, r);
            let start = slab.by_x.partition_point(|&(x, _)| x < q.x() - b);
            for &(x, i) in &slab.by_x[start..] {
                if x > q.x() + b {
                    break;
                }
                let p = &self.points[i];
                if (p.y() - q.y()).abs() > b {
                    continue;
                }
                let d = dist(q, p);
                if d <= r {
                    f(i, d);
                }
            }
        }
    }

    /// The nearest point to `q` and its distance; ties go to the smaller index.
    pub fn nearest(&self, q: &HPoint) -> Option<(usize, f64)> {
        self.nearest_filtered(q, |_| true)
    }

    /// Like [`NearIndex::nearest`] but skips indices for which `keep` is false.
    pub fn nearest_filtered<K: Fn(usize) -> bool>(&self, q: &HPoint, keep: K) -> Option<(usize, f64)> {
        let ln_q = q.z().ln();
        let mut order: Vec<(f64, usize)> = self
            .slabs
            .iter()
            .enumerate()
            .map(|(s, slab)| (Self::ln_gap(slab, ln_q), s))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |i: usize, best: &mut (f64, usize)| {
            if !keep(i) {
                return;
            }
            let d = dist(q, &self.points[i]);
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
        };
        for (gap, s) in order {
            if gap > best.0 * (1.0 + PRUNE_SLACK) + PRUNE_SLACK {
                break;
            }
            let slab = &self.slabs[s];
            let pos = slab.by_x.partition_point(|&(x, _)| x < q.x());
            let (mut lo, mut hi) = (pos, pos);
            loop {
                let b = if best.0.is_finite() {
                    Self::horizontal_bound(slab, q, best.0)
                } else {
                    f64::INFINITY
                };
                let left_ok = lo > 0 && q.x() - slab.by_x[lo - 1].0 <= b;
                let right_ok = hi < slab.by_x.len() && slab.by_x[hi].0 - q.x() <= b;
                if !left_ok && !right_ok {
                    break;
                }
                if left_ok {
                    lo -= 1;
                    let (_, i) = slab.by_x[lo];
                    if (self.points[i].y() - q.y()).abs() <= b {
                        consider(i, &mut best);
                    }
                }
                if right_ok {
                    let (_, i) = slab.by_x[hi];
                    hi += 1;
                    if (self.points[i].y() - q.y()).abs() <= b {
                        consider(i, &mut best);
                    }
                }
            }
        }
        (best.1 != usize::MAX).then_some(best).map(|(d, i)| (i, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<HPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                HPoint::new(
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-3.0f64..3.0).exp(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn rejects_duplicates() {
        let p = HPoint::new(0.0, 0.0, 1.0).unwrap();
        let err = PointCloud::new("d", vec![p, HPoint::new(1.0, 0.0, 1.0).unwrap(), p]);
        assert!(matches!(err, Err(Error::DuplicatePoint { first: 0, second: 2 })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = random_points(50, 3);
        let cloud = PointCloud::new("r", pts).unwrap();
        let text = cloud.to_csv_string();
        assert!(text.starts_with("x,y,z\n"));
        let back = PointCloud::read_csv("r", text.as_bytes()).unwrap();
        assert_eq!(back, cloud);
    }

    #[test]
    fn csv_reports_bad_lines() {
        let err = PointCloud::read_csv("bad", "x,y,z\n0,0,1\n0,0,-1\n".as_bytes());
        assert!(matches!(err, Err(Error::Parse { line: 3, .. })));
        let err = PointCloud::read_csv("bad", "x,y\n0,0\n".as_bytes());
        assert!(matches!(err, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn index_matches_brute_force() {
        let pts = random_points(400, 7);
        let index = NearIndex::new(&pts);
        let queries = random_points(60, 8);
        for q in &queries {
            for &r in &[0.0, 0.3, 1.0, 2.5, 6.0] {
                let brute: Vec<usize> = (0..pts.len()).filter(|&i| dist(q, &pts[i]) <= r).collect();
                assert_eq!(index.within(q, r), brute);
            }
            let (bi, bd) =
                (0..pts.len())
                    .map(|i| (i, dist(q, &pts[i])))
                    .fold(
                        (usize::MAX, f64::INFINITY),
                        |acc, (i, d)| if d < acc.1 { (i, d) } else { acc },
                    );
            assert_eq!(index.nearest(q), Some((bi, bd)));
        }
    }

    #[test]
    fn nearest_on_empty_index() {
        let index = NearIndex::new(&[]);
        assert_eq!(index.nearest(&HPoint::new(0.0, 0.0, 1.0).unwrap()), None);
    }
}
