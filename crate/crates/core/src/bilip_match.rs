//! Bottleneck bijections between equal-size clouds.
//!
//! The bijection minimising the largest displacement is found by binary
//! search over candidate thresholds: a perfect matching exists in the
//! threshold graph `{(i, j) : d(i, j) <= R}` for every `R >= R*` and for no
//! `R < R*`, and `R*` is always one of the pairwise cross distances.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::{NearIndex, PointCloud};
use crate::error::{Error, Result};
use crate::hyp3::dist;

/// Below this many points distances are cached in a dense table and
/// Lipschitz constants are measured exhaustively.
pub const DENSE_LIMIT: usize = 5_000;
/// Pairs sampled for Lipschitz constants above [`DENSE_LIMIT`].
pub const LIPSCHITZ_SAMPLES: usize = 1_000_000;

/// Bipartite graph on `n + n` vertices; `adj[i]` lists the right neighbours of
/// left vertex `i` in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementGraph {
    n: usize,
    threshold: f64,
    adj: Vec<Vec<usize>>,
}

impl DisplacementGraph {
    /// All pairs with `cross(i, j) <= threshold`.
    pub fn build<F>(n: usize, threshold: f64, cross: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let adj = (0..n)
            .into_par_iter()
            .map(|i| (0..n).filter(|&j| cross(i, j) <= threshold).collect())
            .collect();
        Self { n, threshold, adj }
    }

    pub fn from_table(table: &CrossTable, threshold: f64) -> Self {
        Self::build(table.n, threshold, |i, j| table.get(i, j))
    }

    pub fn from_adjacency(n: usize, mut adj: Vec<Vec<usize>>) -> Result<Self> {
        if adj.len() != n || adj.iter().flatten().any(|&j| j >= n) {
            return Err(Error::InvalidParameter(
                "adjacency does not describe an n+n graph".into(),
            ));
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self {
            n,
            threshold: f64::NAN,
            adj,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matching {
    pub size: usize,
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
}

impl Matching {
    pub fn is_perfect(&self) -> bool {
        self.size == self.left_to_right.len() && self.size == self.right_to_left.len()
    }
}

/// Hopcroft-Karp, `O(E sqrt(V))`. Deterministic: free vertices and
/// neighbours are scanned in index order.
pub fn max_matching(graph: &DisplacementGraph) -> Matching {
    let n = graph.n;
    let mut l2r: Vec<Option<usize>> = vec![None; n];
    let mut r2l: Vec<Option<usize>> = vec![None; n];
    let mut layer = vec![u32::MAX; n];
    let mut cursor = vec![0usize; n];
    let mut queue = VecDeque::new();
    let mut stack: Vec<usize> = Vec::new();

    loop {
        // BFS layering from free left vertices.
        queue.clear();
        for i in 0..n {
            if l2r[i].is_none() {
                layer[i] = 0;
                queue.push_back(i);
            } else {
                layer[i] = u32::MAX;
            }
        }
        let mut found_free = false;
        while let Some(u) = queue.pop_front() {
            for &v in &graph.adj[u] {
                match r2l[v] {
                    None => found_free = true,
                    Some(w) if layer[w] == u32::MAX => {
                        layer[w] = layer[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found_free {
            break;
        }

        // Layered DFS, iterative.
        cursor.iter_mut().for_each(|c| *c = 0);
        let mut augmented = false;
        for root in 0..n {
            if l2r[root].is_some() || layer[root] != 0 {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&u) = stack.last() {
                let mut advanced = false;
                while cursor[u] < graph.adj[u].len() {
                    let v = graph.adj[u][cursor[u]];
                    cursor[u] += 1;
                    match r2l[v] {
                        None => {
                            // Flip the path root -> ... -> u -> v.
                            let mut right = v;
                            for &left in stack.iter().rev() {
                                let prev = l2r[left];
                                l2r[left] = Some(right);
                                r2l[right] = Some(left);
                                match prev {
                                    Some(p) => right = p,
                                    None => break,
                                }
                            }
                            stack.clear();
                            augmented = true;
                            advanced = true;
                            break;
                        }
                        Some(w) if layer[w] == layer[u] + 1 => {
                            stack.push(w);
                            advanced = true;
                            break;
                        }
                        _ => {}
                    }
                }
                if !advanced {
                    layer[u] = u32::MAX;
                    stack.pop();
                }
            }
        }
        if !augmented {
            break;
        }
    }
    let size = l2r.iter().filter(|m| m.is_some()).count();
    Matching {
        size,
        left_to_right: l2r,
        right_to_left: r2l,
    }
}

/// A left set `S` with `|N(S)| < |S|`, or `None` if a perfect matching exists.
///
/// `S` is the set of left vertices reachable from unmatched left vertices by
/// alternating paths; every neighbour of `S` is matched back into `S`, so
/// `|N(S)| = |S| - #unmatched`.
pub fn hall_violator(graph: &DisplacementGraph) -> Option<Vec<usize>> {
    let m = max_matching(graph);
    if m.is_perfect() {
        return None;
    }
    let n = graph.n;
    let mut in_s = vec![false; n];
    let mut seen_right = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| m.left_to_right[i].is_none()).collect();
    for &i in &queue {
        in_s[i] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &graph.adj[u] {
            if seen_right[v] {
                continue;
            }
            seen_right[v] = true;
            let w = m.right_to_left[v].expect("maximum matching leaves no augmenting path");
            if !in_s[w] {
                in_s[w] = true;
                queue.push_back(w);
            }
        }
    }
    Some((0..n).filter(|&i| in_s[i]).collect())
}

/// Neighbourhood of a left set, by direct scan.
pub fn neighborhood(graph: &DisplacementGraph, set: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; graph.n];
    for &i in set {
        for &j in &graph.adj[i] {
            mark[j] = true;
        }
    }
    (0..graph.n).filter(|&j| mark[j]).collect()
}

/// Dense `n x n` cache of cross distances, row-major.
#[derive(Debug, Clone)]
pub struct CrossTable {
    n: usize,
    values: Vec<f64>,
}

impl CrossTable {
    pub fn build<F>(n: usize, cross: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = cross(i, j);
            }
        });
        Self { n, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    /// max d_right(psi p, psi q) / d_left(p, q)
    pub forward: f64,
    /// max d_left(p, q) / d_right(psi p, psi q)
    pub inverse: f64,
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

impl LipschitzConstants {
    /// The smallest `L` for which the bijection is `L`-bilipschitz on the window.
    pub fn bilipschitz(&self) -> f64 {
        self.forward.max(self.inverse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckBijection {
    /// `pairing[i]` is the right index matched to left index `i`.
    pub pairing: Vec<usize>,
    pub r_star: f64,
    pub thresholds_tried: usize,
    pub lipschitz: Option<LipschitzConstants>,
}

impl BottleneckBijection {
    /// Wraps an explicit pairing; fails unless it is a permutation.
    pub fn from_pairing(pairing: Vec<usize>, r_star: f64) -> Result<Self> {
        check_permutation(&pairing)?;
        Ok(Self {
            pairing,
            r_star,
            thresholds_tried: 0,
            lipschitz: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            pairing: (0..n).collect(),
            r_star: 0.0,
            thresholds_tried: 0,
            lipschitz: None,
        }
    }

    pub fn len(&self) -> usize {
        self.pairing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairing.is_empty()
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![usize::MAX; self.pairing.len()];
        for (i, &j) in self.pairing.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }

    /// FNV-1a over the pairing, for compact report fingerprints.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &j in &self.pairing {
            for byte in (j as u64).to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// `left_index,right_index` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("left_index,right_index\n");
        for (i, j) in self.pairing.iter().enumerate() {
            s.push_str(&format!("{i},{j}\n"));
        }
        s
    }

    pub fn measure_lipschitz<L, R>(&mut self, dist_left: L, dist_right: R, seed: u64) -> Result<LipschitzConstants>
    where
        L: Fn(usize, usize) -> f64 + Sync,
        R: Fn(usize, usize) -> f64 + Sync,
    {
        let lip = lipschitz_constants(&self.pairing, dist_left, dist_right, seed)?;
        self.lipschitz = Some(lip);
        Ok(lip)
    }
}

pub(crate) fn check_permutation(pairing: &[usize]) -> Result<()> {
    let mut seen = vec![false; pairing.len()];
    for (i, &j) in pairing.iter().enumerate() {
        if j >= pairing.len() || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidAction(format!(
                "pairing is not a bijection: left {i} maps to {j}"
            )));
        }
    }
    Ok(())
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Binary search over `candidates` (sorted, unique) for the least threshold
/// whose graph has a perfect matching. `graph_at` builds the threshold graph.
fn search<G>(candidates: &[f64], mut graph_at: G) -> Result<(f64, Matching, usize)>
where
    G: FnMut(f64) -> DisplacementGraph,
{
    let mut tried = 0;
    let (mut lo, mut hi) = (0usize, candidates.len());
    let mut best: Option<(f64, Matching)> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let r = candidates[mid];
        tried += 1;
        let m = max_matching(&graph_at(r));
        if m.is_perfect() {
            best = Some((r, m));
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (r, m) = best.ok_or(Error::NoPerfectMatching)?;
    Ok((r, m, tried))
}

/// Minimum-bottleneck bijection between `0..n` and `0..n` under `cross`,
/// with all `n^2` distances cached.
pub fn bottleneck_bijection<F>(n_left: usize, n_right: usize, cross: F) -> Result<BottleneckBijection>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if n_left != n_right {
        return Err(Error::CardinalityMismatch {
            left: n_left,
            right: n_right,
        });
    }
    if n_left == 0 {
        return Err(Error::TooFewPoints { needed: 1, actual: 0 });
    }
    let n = n_left;
    let table = CrossTable::build(n, cross);
    // Every vertex needs at least one edge: a lower bound on R*.
    let row_min = (0..n).map(|i| (0..n).map(|j| table.get(i, j)).fold(f64::INFINITY, f64::min));
    let col_min = (0..n).map(|j| (0..n).map(|i| table.get(i, j)).fold(f64::INFINITY, f64::min));
    let lower = row_min.chain(col_min).fold(f64::NEG_INFINITY, f64::max);
    if !lower.is_finite() {
        return Err(Error::InvalidParameter("cross distances must be finite".into()));
    }
    let candidates = sorted_unique(table.values.iter().copied().filter(|&d| d >= lower).collect());
    let (r, m, tried) = search(&candidates, |r| DisplacementGraph::from_table(&table, r))?;
    finish(m, r, tried, |i, j| table.get(i, j))
}

/// Bottleneck bijection under the ambient hyperbolic distance. Uses a dense
/// table below [`DENSE_LIMIT`] points and range queries above.
pub fn bottleneck_bijection_clouds(left: &PointCloud, right: &PointCloud) -> Result<BottleneckBijection> {
    if left.len() != right.len() {
        return Err(Error::CardinalityMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    let (lp, rp) = (left.points(), right.points());
    if left.len() < DENSE_LIMIT {
        return bottleneck_bijection(lp.len(), rp.len(), |i, j| dist(&lp[i], &rp[j]));
    }
    let n = lp.len();
    let right_index = NearIndex::new(rp);
    let left_index = NearIndex::new(lp);
    let lower = lp
        .iter()
        .map(|p| right_index.nearest(p).map_or(f64::INFINITY, |x| x.1))
        .chain(rp.iter().map(|q| left_index.nearest(q).map_or(f64::INFINITY, |x| x.1)))
        .fold(f64::NEG_INFINITY, f64::max);
    let graph_at = |r: f64| DisplacementGraph {
        n,
        threshold: r,
        adj: lp.par_iter().map(|p| right_index.within(p, r)).collect(),
    };
    // Grow an upper bound geometrically, then search the distances below it.
    let mut tried = 0;
    let mut upper = lower;
    loop {
        tried += 1;
        if max_matching(&graph_at(upper)).is_perfect() {
            break;
        }
        upper = if upper > 0.0 { 2.0 * upper } else { 1e-6 };
    }
    let mut cands = Vec::new();
    for p in lp {
        right_index.for_each_within(p, upper, |_, d| {
            if d >= lower {
                cands.push(d)
            }
        });
    }
    let candidates = sorted_unique(cands);
    let (r, m, more) = search(&candidates, graph_at)?;
    finish(m, r, tried + more, |i, j| dist(&lp[i], &rp[j]))
}

fn finish<F: Fn(usize, usize) -> f64>(m: Matching, r: f64, tried: usize, cross: F) -> Result<BottleneckBijection> {
    let pairing: Vec<usize> = m
        .left_to_right
        .into_iter()
        .map(|j| j.ok_or(Error::NoPerfectMatching))
        .collect::<Result<_>>()?;
    let realized = pairing
        .iter()
        .enumerate()
        .map(|(i, &j)| cross(i, j))
        .fold(0.0, f64::max);
    assert_eq!(realized, r, "minimal threshold is realized by the matching");
    Ok(BottleneckBijection {
        pairing,
        r_star: r,
        thresholds_tried: tried,
        lipschitz: None,
    })
}

/// Forward and inverse Lipschitz constants of `pairing` measured on the window.
///
/// Exhaustive over unordered pairs below [`DENSE_LIMIT`] points; above that,
/// [`LIPSCHITZ_SAMPLES`] seeded random pairs.
pub fn lipschitz_constants<L, R>(
    pairing: &[usize],
    dist_left: L,
    dist_right: R,
    seed: u64,
) -> Result<LipschitzConstants>
where
    L: Fn(usize, usize) -> f64 + Sync,
    R: Fn(usize, usize) -> f64 + Sync,
{
    let n = pairing.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, actual: n });
    }
    check_permutation(pairing)?;
    let ratio = |i: usize, j: usize| -> Result<(f64, f64)> {
        let dl = dist_left(i, j);
        let dr = dist_right(pairing[i], pairing[j]);
        if !(dl > 0.0) {
            return Err(Error::ZeroDistance(i, j));
        }
        if !(dr > 0.0) {
            return Err(Error::ZeroDistance(pairing[i], pairing[j]));
        }
        Ok((dr / dl, dl / dr))
    };
    let merge = |a: (f64, f64), b: (f64, f64)| (a.0.max(b.0), a.1.max(b.1));
    let exhaustive = n < DENSE_LIMIT;
    let (pairs, (forward, inverse)) = if exhaustive {
        let best = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).try_fold((0.0f64, 0.0f64), |acc, j| Ok::<_, Error>(merge(acc, ratio(i, j)?))))
            .try_reduce(|| (0.0, 0.0), |a, b| Ok(merge(a, b)))?;
        (n * (n - 1) / 2, best)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(usize, usize)> = (0..LIPSCHITZ_SAMPLES)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect();
        let best = pairs
            .par_iter()
            .map(|&(i, j)| ratio(i, j))
            .try_reduce(|| (0.0, 0.0), |a, b| Ok(merge(a, b)))?;
        (LIPSCHITZ_SAMPLES, best)
    };
    Ok(LipschitzConstants {
        forward,
        inverse,
        pairs_checked: pairs,
        exhaustive,
    })
}

/// Drops points of `cloud` closest to its boundary until `target` remain.
///
/// "Closest to the boundary" means farthest, in hyperbolic distance, from the
/// cloud point nearest to `(median x, median y, exp(median ln z))`. Ties drop
/// the larger index first. Kept points retain their original order.
pub fn trim_to_cardinality(cloud: &PointCloud, target: usize) -> Result<PointCloud> {
    let n = cloud.len();
    if target > n {
        return Err(Error::CardinalityMismatch { left: n, right: target });
    }
    if target == n {
        return Ok(cloud.clone());
    }
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let pts = cloud.points();
    let probe = crate::hyp3::HPoint::new(
        median(pts.iter().map(|p| p.x()).collect()),
        median(pts.iter().map(|p| p.y()).collect()),
        median(pts.iter().map(|p| p.z().ln()).collect()).exp(),
    )?;
    let (center, _) = NearIndex::new(pts).nearest(&probe).expect("cloud is nonempty");
    let mut order: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (dist(&pts[center], p), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = order[..target].iter().map(|&(_, i)| i).collect();
    keep.sort_unstable();
    Ok(cloud.subset(&keep, format!("{}[trimmed to {target}]", cloud.label())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyp3::HPoint;

    fn complete(n: usize) -> DisplacementGraph {
        DisplacementGraph::from_adjacency(n, vec![(0..n).collect(); n]).unwrap()
    }

    /// Size of a maximum matching by exhaustive search over edge subsets.
    fn brute_matching_size(g: &DisplacementGraph) -> usize {
        fn rec(g: &DisplacementGraph, i: usize, used: &mut Vec<bool>) -> usize {
            if i == g.len() {
                return 0;
            }
            let mut best = rec(g, i + 1, used);
            for &j in g.neighbors(i) {
                if !used[j] {
                    used[j] = true;
                    best = best.max(1 + rec(g, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(g, 0, &mut vec![false; g.len()])
    }

    #[test]
    fn matching_examples() {
        let empty = DisplacementGraph::from_adjacency(3, vec![vec![]; 3]).unwrap();
        assert_eq!(max_matching(&empty).size, 0);
        assert!(max_matching(&complete(6)).is_perfect());
        let g = DisplacementGraph::from_adjacency(3, vec![vec![0], vec![0, 1], vec![2]]).unwrap();
        let m = max_matching(&g);
        assert_eq!(m.size, 3);
        assert_eq!(brute_matching_size(&g), 3);
        assert_eq!(m.left_to_right, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn matching_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let n = rng.gen_range(1..8);
            let p = rng.gen_range(0.05..0.7);
            let adj = (0..n).map(|_| (0..n).filter(|_| rng.gen_bool(p)).collect()).collect();
            let g = DisplacementGraph::from_adjacency(n, adj).unwrap();
            let m = max_matching(&g);
            assert_eq!(m.size, brute_matching_size(&g));
            for (i, j) in m.left_to_right.iter().enumerate() {
                if let Some(j) = j {
                    assert!(g.neighbors(i).contains(j));
                    assert_eq!(m.right_to_left[*j], Some(i));
                }
            }
            match hall_violator(&g) {
                None => assert!(m.is_perfect()),
                Some(s) => {
                    assert!(!m.is_perfect());
                    assert!(neighborhood(&g, &s).len() < s.len());
                }
            }
        }
    }

    #[test]
    fn hall_examples() {
        assert_eq!(hall_violator(&complete(4)), None);
        let g = DisplacementGraph::from_adjacency(2, vec![vec![0], vec![0]]).unwrap();
        let s = hall_violator(&g).unwrap();
        assert_eq!(s, vec![0, 1]);
        assert_eq!(neighborhood(&g, &s), vec![0]);
    }

    #[test]
    fn matching_long_augmenting_chain() {
        // i -> {i, i+1}: a staircase that forces long alternating paths
        let n = 20_000;
        let adj = (0..n)
            .map(|i| if i + 1 < n { vec![i, i + 1] } else { vec![i] })
            .collect();
        let g = DisplacementGraph::from_adjacency(n, adj).unwrap();
        assert!(max_matching(&g).is_perfect());
    }

    fn pt(x: f64, y: f64, z: f64) -> HPoint {
        HPoint::new(x, y, z).unwrap()
    }

    #[test]
    fn bottleneck_examples() {
        let c = PointCloud::new("c", vec![pt(0.0, 0.0, 1.0), pt(1.0, 0.0, 1.0), pt(0.0, 3.0, 2.0)]).unwrap();
        let b = bottleneck_bijection_clouds(&c, &c).unwrap();
        assert_eq!(b.r_star, 0.0);
        assert_eq!(b.pairing, vec![0, 1, 2]);

        let l = PointCloud::new("l", vec![pt(0.0, 0.0, 1.0)]).unwrap();
        let r = PointCloud::new("r", vec![pt(0.0, 0.0, 2.0)]).unwrap();
        let b = bottleneck_bijection_clouds(&l, &r).unwrap();
        assert_eq!(b.r_star, std::f64::consts::LN_2);

        assert!(matches!(
            bottleneck_bijection_clouds(&l, &c),
            Err(Error::CardinalityMismatch { left: 1, right: 3 })
        ));
    }

    #[test]
    fn perfect_matching_is_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let n = 9;
            let table = CrossTable::build(n, |_, _| 0.0);
            let vals: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let table = CrossTable { values: vals, ..table };
            let mut seen_perfect = false;
            for r in sorted_unique(table.values.clone()) {
                let perfect = max_matching(&DisplacementGraph::from_table(&table, r)).is_perfect();
                assert!(!seen_perfect || perfect);
                seen_perfect |= perfect;
            }
            assert!(seen_perfect);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let pts: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (3.0, 1.0)];
        let eu = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        let id: Vec<usize> = (0..4).collect();
        let lip = lipschitz_constants(&id, |i, j| eu(pts[i], pts[j]), |i, j| eu(pts[i], pts[j]), 0).unwrap();
        assert_eq!((lip.forward, lip.inverse), (1.0, 1.0));
        assert!(lip.exhaustive);
        assert_eq!(lip.pairs_checked, 6);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|p| (2.0 * p.0, 2.0 * p.1)).collect();
        let lip = lipschitz_constants(&id, |i, j| eu(pts[i], pts[j]), |i, j| eu(scaled[i], scaled[j]), 0).unwrap();
        assert_eq!(lip.forward, 2.0);
        assert_eq!(lip.inverse, 0.5);
        assert_eq!(lip.bilipschitz(), 2.0);

        let err = lipschitz_constants(&id, |_, _| 0.0, |_, _| 1.0, 0);
        assert!(matches!(err, Err(Error::ZeroDistance(0, 1))));
        assert!(lipschitz_constants(&[0], |_, _| 1.0, |_, _| 1.0, 0).is_err());
        assert!(lipschitz_constants(&[0, 0], |_, _| 1.0, |_, _| 1.0, 0).is_err());
    }

    #[test]
    fn trim_keeps_central_points() {
        let w = crate::horolattice::LatticeWindow::build(2, 0).unwrap().to_cloud();
        let t = trim_to_cardinality(&w, 9).unwrap();
        assert_eq!(t.len(), 9);
        for p in t.points() {
            assert!(p.x().abs() <= 1.0 && p.y().abs() <= 1.0);
        }
        assert!(trim_to_cardinality(&w, 26).is_err());
    }

    #[test]
    fn permutation_check() {
        assert!(BottleneckBijection::from_pairing(vec![1, 0, 2], 0.0).is_ok());
        assert!(BottleneckBijection::from_pairing(vec![1, 1, 2], 0.0).is_err());
        assert!(BottleneckBijection::from_pairing(vec![0, 3, 1], 0.0).is_err());
        let b = BottleneckBijection::from_pairing(vec![2, 0, 1], 0.0).unwrap();
        assert_eq!(b.inverse(), vec![1, 2, 0]);
        assert_eq!(b.to_csv(), "left_index,right_index\n0,2\n1,0\n2,1\n");
        assert_ne!(b.checksum(), BottleneckBijection::identity(3).checksum());
    }
}
