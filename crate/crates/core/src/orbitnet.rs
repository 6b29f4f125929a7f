//! Orbits of finitely generated Kleinian groups and the horospherical band
//! experiment: enumerate `Gamma . *`, cut it with a band around the horosphere
//! `z = h0`, and compare the resulting cloud with a square grid.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bilip_match::{bottleneck_bijection, lipschitz_constants, LipschitzConstants};
use crate::cloud::{NearIndex, PointCloud};
use crate::error::{Error, Result};
use crate::hyp3::{dist, mobius_apply, HPoint, DET_TOLERANCE, SL2C};
use crate::udbg_profile::least_squares_slope;

pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_ORBIT_BUDGET: usize = 200_000;
/// Largest cloud for which [`band_graph_metric`] builds its dense table.
pub const GRAPH_METRIC_LIMIT: usize = 20_000;

/// Generators with their inverses adjoined, in file order: each matrix is
/// followed by its inverse unless an identical matrix is already present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSet {
    pub matrices: Vec<SL2C>,
    pub source: String,
    pub det_tolerance: f64,
    pub records: usize,
}

impl GeneratorSet {
    pub fn from_matrices(records: Vec<SL2C>, source: impl Into<String>, det_tolerance: f64) -> Self {
        let count = records.len();
        let mut matrices: Vec<SL2C> = Vec::with_capacity(2 * count);
        for g in records {
            for m in [g, g.inverse()] {
                if !matrices.contains(&m) {
                    matrices.push(m);
                }
            }
        }
        Self {
            matrices,
            source: source.into(),
            det_tolerance,
            records: count,
        }
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Parses the generator format: one matrix per line as eight comma separated
/// decimals `re(a),im(a),re(b),im(b),re(c),im(c),re(d),im(d)`; `#` starts a
/// comment.
pub fn parse_generators(text: &str, source: &str, det_tolerance: f64) -> Result<GeneratorSet> {
    let mut records = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0f64; 8];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f.parse().map_err(|e| Error::Parse {
                line,
                message: format!("field {} `{f}`: {e}", k + 1),
            })?;
            if !v[k].is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("field {} is not finite", k + 1),
                });
            }
        }
        let c = |i: usize| Complex64::new(v[2 * i], v[2 * i + 1]);
        let index = records.len();
        let g = SL2C::with_tolerance(c(0), c(1), c(2), c(3), det_tolerance).map_err(|e| match e {
            Error::Determinant { det, tolerance } => Error::GeneratorDeterminant {
                index,
                line,
                det,
                tolerance,
            },
            other => other,
        })?;
        records.push(g);
    }
    Ok(GeneratorSet::from_matrices(records, source, det_tolerance))
}

pub fn load_generators(path: &Path) -> Result<GeneratorSet> {
    load_generators_with_tolerance(path, DET_TOLERANCE)
}

pub fn load_generators_with_tolerance(path: &Path, det_tolerance: f64) -> Result<GeneratorSet> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_generators(&text, &path.display().to_string(), det_tolerance)
}

/// Hash grid over `(ln z, x, y)` used to find already-kept orbit points within
/// the merge tolerance.
struct MergeGrid {
    cell: f64,
    tol: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl MergeGrid {
    fn new(tol: f64) -> Self {
        Self {
            cell: (2.0 * tol).max(1e-3),
            tol,
            cells: HashMap::new(),
        }
    }

    fn level(&self, z: f64) -> (i64, f64) {
        let k = (z.ln() / self.cell).floor() as i64;
        (k, (k as f64 * self.cell).exp())
    }

    fn key(&self, p: &HPoint) -> (i64, i64, i64) {
        let (k, zr) = self.level(p.z());
        let w = zr * self.cell;
        (k, (p.x() / w).floor() as i64, (p.y() / w).floor() as i64)
    }

    fn insert(&mut self, p: &HPoint, idx: usize) {
        let key = self.key(p);
        self.cells.entry(key).or_default().push(idx);
    }

    fn has_near(&self, q: &HPoint, kept: &[HPoint]) -> bool {
        let ln_q = q.z().ln();
        let k_lo = ((ln_q - self.tol) / self.cell).floor() as i64;
        let k_hi = ((ln_q + self.tol) / self.cell).floor() as i64;
        let half = (self.tol / 2.0).sinh();
        let mut scan_cells: u128 = 0;
        let mut ranges = Vec::new();
        for k in k_lo..=k_hi {
            let zr = (k as f64 * self.cell).exp();
            let z_top = zr * self.cell.exp() * (1.0 + 1e-9);
            let b = 2.0 * (q.z() * z_top).sqrt() * half * (1.0 + 1e-9);
            let w = zr * self.cell;
            let xr = ((q.x() - b) / w).floor() as i64..=((q.x() + b) / w).floor() as i64;
            let yr = ((q.y() - b) / w).floor() as i64..=((q.y() + b) / w).floor() as i64;
            scan_cells += (xr.end() - xr.start() + 1) as u128 * (yr.end() - yr.start() + 1) as u128;
            ranges.push((k, xr, yr));
        }
        if scan_cells > kept.len() as u128 {
            return kept.iter().any(|p| dist(p, q) <= self.tol);
        }
        for (k, xr, yr) in ranges {
            for kx in xr.clone() {
                for ky in yr.clone() {
                    if let Some(ids) = self.cells.get(&(k, kx, ky)) {
                        if ids.iter().any(|&i| dist(&kept[i], q) <= self.tol) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCloud {
    pub cloud: PointCloud,
    pub word_length: Vec<usize>,
    pub basepoint: HPoint,
    pub merge_tolerance: f64,
}

impl OrbitCloud {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// `x,y,z,word_length` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,word_length\n");
        for (p, w) in self.cloud.points().iter().zip(&self.word_length) {
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt17(p.x()),
                crate::fmt17(p.y()),
                crate::fmt17(p.z()),
                w
            ));
        }
        s
    }
}

/// Breadth-first orbit of `basepoint` over words of length at most
/// `max_length`. A new image is kept only if it is farther than
/// `merge_tolerance` from every kept point; its word length is the BFS depth
/// at which it was first found.
pub fn enumerate_orbit(
    gens: &GeneratorSet,
    basepoint: HPoint,
    max_length: usize,
    merge_tolerance: f64,
    budget: usize,
) -> Result<OrbitCloud> {
    if !(merge_tolerance >= 0.0 && merge_tolerance.is_finite()) {
        return Err(Error::InvalidParameter(format!("merge tolerance {merge_tolerance}")));
    }
    let mut kept = vec![basepoint];
    let mut word_length = vec![0usize];
    let mut grid = MergeGrid::new(merge_tolerance);
    grid.insert(&basepoint, 0);
    let mut frontier = vec![0usize];
    for depth in 1..=max_length {
        // Images of the whole frontier are independent; merging stays sequential
        // in (frontier, generator) order.
        let images: Vec<Vec<HPoint>> = frontier
            .par_iter()
            .map(|&i| {
                gens.matrices
                    .iter()
                    .map(|g| mobius_apply(g, &kept[i]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut next = Vec::new();
        for q in images.into_iter().flatten() {
            if grid.has_near(&q, &kept) {
                continue;
            }
            if kept.len() >= budget {
                return Err(Error::BudgetExceeded {
                    requested: kept.len() as u64 + 1,
                    budget: budget as u64,
                });
            }
            let idx = kept.len();
            kept.push(q);
            word_length.push(depth);
            grid.insert(&q, idx);
            next.push(idx);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let cloud = PointCloud::new(format!("orbit({}, L={max_length})", gens.source), kept)?;
    Ok(OrbitCloud {
        cloud,
        word_length,
        basepoint,
        merge_tolerance,
    })
}

/// Best two-sided bound `wl / lambda - eps <= d <= lambda wl + eps` found on a
/// geometric grid of `lambda` (the smallest `lambda` attaining the least
/// `eps`), plus a growth diagnostic: a quasi-isometric
/// orbit has distance growing linearly in word length, so a logarithmic model
/// fitting better than a linear one is flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QiFit {
    pub lambda: f64,
    pub epsilon: f64,
    pub linear_sse: Option<f64>,
    pub log_sse: Option<f64>,
    pub sublinear_growth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QiScatter {
    pub pairs: Vec<(usize, f64)>,
    pub fit: QiFit,
}

const LAMBDA_STEPS: i32 = 400;
const LAMBDA_RATIO: f64 = 1.01;

fn residual_sse(data: &[(f64, f64)]) -> f64 {
    let slope = least_squares_slope(data);
    let n = data.len() as f64;
    let mx = data.iter().map(|d| d.0).sum::<f64>() / n;
    let my = data.iter().map(|d| d.1).sum::<f64>() / n;
    data.iter()
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum()
}

/// Smallest `eps` with `wl / lambda - eps <= d <= lambda wl + eps` on every pair.
pub fn qi_epsilon(pairs: &[(usize, f64)], lambda: f64) -> f64 {
    pairs.iter().fold(0.0f64, |acc, &(w, d)| {
        let w = w as f64;
        acc.max(w / lambda - d).max(d - lambda * w)
    })
}

/// The `lambda` grid scanned by [`qi_scatter`].
pub fn qi_lambda_grid() -> impl Iterator<Item = f64> {
    (0..=LAMBDA_STEPS).map(|k| LAMBDA_RATIO.powi(k))
}

pub fn qi_scatter(orbit: &OrbitCloud) -> QiScatter {
    let pairs: Vec<(usize, f64)> = orbit
        .cloud
        .points()
        .iter()
        .zip(&orbit.word_length)
        .map(|(p, &w)| (w, dist(&orbit.basepoint, p)))
        .collect();
    let eps_at = |lambda: f64| qi_epsilon(&pairs, lambda);
    let (mut lambda, mut epsilon) = (f64::NAN, f64::INFINITY);
    for l in qi_lambda_grid() {
        let e = eps_at(l);
        if e < epsilon {
            lambda = l;
            epsilon = e;
        }
    }
    let grown: Vec<(f64, f64)> = pairs.iter().filter(|p| p.0 >= 1).map(|&(w, d)| (w as f64, d)).collect();
    let distinct = {
        let mut w: Vec<u64> = grown.iter().map(|p| p.0 as u64).collect();
        w.sort_unstable();
        w.dedup();
        w.len()
    };
    let (linear_sse, log_sse) = if distinct >= 3 {
        let log: Vec<(f64, f64)> = grown.iter().map(|&(w, d)| (w.ln(), d)).collect();
        (Some(residual_sse(&grown)), Some(residual_sse(&log)))
    } else {
        (None, None)
    };
    let sublinear_growth = matches!((linear_sse, log_sse), (Some(a), Some(b)) if b < a);
    QiScatter {
        pairs,
        fit: QiFit {
            lambda,
            epsilon,
            linear_sse,
            log_sse,
            sublinear_growth,
        },
    }
}

/// The band `|ln(z / h0)| <= epsilon` around the horosphere `z = h0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoroBand {
    height: f64,
    epsilon: f64,
}

impl HoroBand {
    pub fn new(height: f64, epsilon: f64) -> Result<Self> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidParameter(format!("horosphere height {height}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("band half-width {epsilon}")));
        }
        Ok(Self { height, epsilon })
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        (p.z() / self.height).ln().abs() <= self.epsilon
    }
}

pub fn horoband_intersect(cloud: &PointCloud, band: &HoroBand) -> PointCloud {
    let keep: Vec<usize> = (0..cloud.len())
        .filter(|&i| band.contains(&cloud.points()[i]))
        .collect();
    cloud.subset(
        &keep,
        format!("{} in band(h0={}, eps={})", cloud.label(), band.height, band.epsilon),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs shortest paths in the proximity graph whose edges join points at
/// ambient distance `<= edge_threshold`, weighted by that distance.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetric {
    n: usize,
    edges: usize,
    table: Vec<f64>,
}

impl GraphMetric {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// `None` when `i` and `j` lie in different components.
    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let d = self.table[i * self.n + j];
        d.is_finite().then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        self.table.iter().all(|d| d.is_finite())
    }

    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for i in 0..self.n {
            if seen[i] {
                continue;
            }
            count += 1;
            let row = &self.table[i * self.n..(i + 1) * self.n];
            for (s, d) in seen.iter_mut().zip(row) {
                *s |= d.is_finite();
            }
        }
        count
    }
}

pub fn band_graph_metric(cloud: &PointCloud, edge_threshold: f64) -> Result<GraphMetric> {
    if !(edge_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("edge threshold {edge_threshold}")));
    }
    let n = cloud.len();
    if n > GRAPH_METRIC_LIMIT {
        return Err(Error::BudgetExceeded {
            requested: n as u64,
            budget: GRAPH_METRIC_LIMIT as u64,
        });
    }
    let index = NearIndex::new(cloud.points());
    let adj: Vec<Vec<(usize, f64)>> = cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut nb = Vec::new();
            index.for_each_within(p, edge_threshold, |j, d| {
                if j != i {
                    nb.push((j, d))
                }
            });
            nb.sort_by_key(|e| e.0);
            nb
        })
        .collect();
    let edges = adj.iter().map(Vec::len).sum::<usize>() / 2;
    let mut table = vec![f64::INFINITY; n * n];
    table.par_chunks_mut(n.max(1)).enumerate().for_each(|(s, row)| {
        let mut heap = BinaryHeap::new();
        row[s] = 0.0;
        heap.push(Entry(0.0, s));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > row[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
    });
    // Symmetrise so that rounding in path sums cannot make d(i, j) != d(j, i).
    for i in 0..n {
        for j in i + 1..n {
            let m = table[i * n + j].min(table[j * n + i]);
            table[i * n + j] = m;
            table[j * n + i] = m;
        }
    }
    Ok(GraphMetric { n, edges, table })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    /// Grid side; the instance has `side^2` points.
    pub side: usize,
    pub status: String,
    /// Grid step in horospherical coordinates.
    pub spacing: Option<f64>,
    /// Metric length taken as one grid step.
    pub metric_unit: Option<f64>,
    /// Bottleneck displacement in grid units.
    pub r_star: Option<f64>,
    /// Constants against the normalised metric.
    pub lip_forward: Option<f64>,
    pub lip_inverse: Option<f64>,
    /// Constants against the raw metric.
    pub raw_lip_forward: Option<f64>,
    pub raw_lip_inverse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridComparison {
    pub points: usize,
    pub height: f64,
    /// Median nearest-neighbour distance in the metric.
    pub metric_scale: f64,
    /// Median nearest-neighbour distance in horospherical coordinates.
    pub nn_spacing: f64,
    pub rows: Vec<GridRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        f64::NAN
    } else {
        v[v.len() / 2]
    }
}

/// Compares a band cloud, carrying `metric` (`None` for disconnected pairs),
/// with `side x side` grids.
///
/// Points are projected to horospherical coordinates `(x, y) / height`. For
/// each side length the `side^2` points closest (sup norm, then Euclidean,
/// then index) to the most central point are matched by a bottleneck bijection
/// to a square grid spanning the same sup-norm square, and the Lipschitz
/// constants of that bijection are measured between the metric and the grid
/// `l1` metric. The metric is normalised so that one grid step corresponds to
/// `metric_scale * spacing / nn_spacing`, which is exact on a square grid.
pub fn grid_compare<M>(cloud: &PointCloud, metric: M, height: f64, sides: &[usize]) -> Result<GridComparison>
where
    M: Fn(usize, usize) -> Option<f64> + Sync,
{
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, actual: n });
    }
    let u: Vec<(f64, f64)> = cloud
        .points()
        .iter()
        .map(|p| (p.x() / height, p.y() / height))
        .collect();
    let eu = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let nn = |f: &dyn Fn(usize, usize) -> Option<f64>| -> Vec<f64> {
        (0..n)
            .filter_map(|i| (0..n).filter(|&j| j != i).filter_map(|j| f(i, j)).reduce(f64::min))
            .collect()
    };
    let metric_scale = median(nn(&|i, j| metric(i, j)));
    let nn_spacing = median(nn(&|i, j| Some(eu(u[i], u[j]))));
    if !(metric_scale > 0.0 && nn_spacing > 0.0) {
        return Err(Error::InsufficientData("cannot normalise the band cloud".into()));
    }

    let mx = median(u.iter().map(|p| p.0).collect());
    let my = median(u.iter().map(|p| p.1).collect());
    let center = (0..n)
        .min_by(|&a, &b| eu(u[a], (mx, my)).total_cmp(&eu(u[b], (mx, my))).then(a.cmp(&b)))
        .expect("nonempty");
    let mut order: Vec<usize> = (0..n).collect();
    let cu = u[center];
    let sup = |p: (f64, f64)| (p.0 - cu.0).abs().max((p.1 - cu.1).abs());
    order.sort_by(|&a, &b| {
        sup(u[a])
            .total_cmp(&sup(u[b]))
            .then(eu(u[a], cu).total_cmp(&eu(u[b], cu)))
            .then(a.cmp(&b))
    });

    let mut rows = Vec::new();
    for &side in sides {
        let m = side * side;
        let mut row = GridRow {
            side,
            status: "ok".into(),
            spacing: None,
            metric_unit: None,
            r_star: None,
            lip_forward: None,
            lip_inverse: None,
            raw_lip_forward: None,
            raw_lip_inverse: None,
        };
        if side < 2 || m > n {
            row.status = format!("skipped: needs {m} points, have {n}");
            rows.push(row);
            continue;
        }
        let mut sel: Vec<usize> = order[..m].to_vec();
        sel.sort_unstable();
        if let Some((a, b)) = first_disconnected(&metric, &sel) {
            row.status = format!("disconnected: points {a} and {b}");
            rows.push(row);
            continue;
        }
        let spacing = 2.0 * sup(u[order[m - 1]]) / (side as f64 - 1.0);
        if !(spacing > 0.0) {
            row.status = "degenerate: selected points coincide horizontally".into();
            rows.push(row);
            continue;
        }
        let unit = metric_scale * spacing / nn_spacing;
        let c = cu;
        let offset = (side as f64 - 1.0) / 2.0;
        let cell = |q: usize| ((q / side) as f64, (q % side) as f64);
        let grid_pos = |q: usize| {
            let (i, j) = cell(q);
            (c.0 + spacing * (i - offset), c.1 + spacing * (j - offset))
        };
        let psi = bottleneck_bijection(m, m, |a, q| eu(u[sel[a]], grid_pos(q)) / spacing)?;
        let l1 = |a: usize, b: usize| {
            let (pa, pb) = (cell(a), cell(b));
            (pa.0 - pb.0).abs() + (pa.1 - pb.1).abs()
        };
        let dl = |a: usize, b: usize| metric(sel[a], sel[b]).unwrap_or(f64::INFINITY) / unit;
        let lip: LipschitzConstants = lipschitz_constants(&psi.pairing, dl, l1, 0)?;
        row.spacing = Some(spacing);
        row.metric_unit = Some(unit);
        row.r_star = Some(psi.r_star);
        row.lip_forward = Some(lip.forward);
        row.lip_inverse = Some(lip.inverse);
        row.raw_lip_forward = Some(lip.forward / unit);
        row.raw_lip_inverse = Some(lip.inverse * unit);
        rows.push(row);
    }
    Ok(GridComparison {
        points: n,
        height,
        metric_scale,
        nn_spacing,
        rows,
    })
}

fn first_disconnected<M: Fn(usize, usize) -> Option<f64>>(metric: &M, sel: &[usize]) -> Option<(usize, usize)> {
    let first = *sel.first()?;
    sel.iter().find(|&&j| metric(first, j).is_none()).map(|&j| (first, j))
}
