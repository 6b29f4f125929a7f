//! Translation-like actions of `Z^2` on finite windows.
//!
//! A finite window cannot carry an everywhere-defined free `Z^2` action, so
//! each generator is a partial injective self-map of the carrier indices and
//! every check is quantified over the points where the composite is defined.

use std::collections::VecDeque;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::bilip_match::{check_permutation, BottleneckBijection};
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::horolattice::{act, GridVector, LatticeWindow};
use crate::hyp3::dist;

pub const DEFAULT_WORD_RANGE: i64 = 5;
/// Rounding slack on the conjugation displacement inequality.
pub const CONJUGATION_SLACK: f64 = 1e-12;

pub type PartialMap = Vec<Option<usize>>;

/// Two commuting partial generators `e1`, `e2` acting on a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAction {
    carrier: PointCloud,
    generators: [PartialMap; 2],
}

fn invert(map: &PartialMap) -> PartialMap {
    let mut inv = vec![None; map.len()];
    for (x, y) in map.iter().enumerate() {
        if let Some(y) = *y {
            inv[y] = Some(x);
        }
    }
    inv
}

impl FiniteAction {
    /// Validates ranges, injectivity of each generator, and `e1 e2 = e2 e1`
    /// wherever both sides are defined.
    pub fn new(carrier: PointCloud, e1: PartialMap, e2: PartialMap) -> Result<Self> {
        let n = carrier.len();
        for (g, map) in [&e1, &e2].into_iter().enumerate() {
            if map.len() != n {
                return Err(Error::InvalidAction(format!(
                    "generator e{} has {} entries for {} points",
                    g + 1,
                    map.len(),
                    n
                )));
            }
            let mut hit = vec![false; n];
            for (x, y) in map.iter().enumerate() {
                if let Some(y) = *y {
                    if y >= n {
                        return Err(Error::InvalidAction(format!("e{} maps {x} outside the carrier", g + 1)));
                    }
                    if std::mem::replace(&mut hit[y], true) {
                        return Err(Error::InvalidAction(format!(
                            "e{} is not injective at image {y}",
                            g + 1
                        )));
                    }
                }
            }
        }
        for x in 0..n {
            let a = e2[x].and_then(|y| e1[y]);
            let b = e1[x].and_then(|y| e2[y]);
            if let (Some(a), Some(b)) = (a, b) {
                if a != b {
                    return Err(Error::InvalidAction(format!("generators do not commute at {x}")));
                }
            }
        }
        Ok(Self {
            carrier,
            generators: [e1, e2],
        })
    }

    /// The lattice action on a dyadic window: `e1` shifts `a`, `e2` shifts `b`,
    /// undefined where the image leaves the window.
    pub fn from_window(window: &LatticeWindow) -> Self {
        let shift = |v: GridVector| -> PartialMap {
            window
                .coords()
                .iter()
                .map(|&x| act(v, x).ok().and_then(|y| window.index_of(y)))
                .collect()
        };
        let (e1, e2) = (shift(GridVector::E1), shift(GridVector::E2));
        Self::new(window.to_cloud(), e1, e2).expect("lattice shifts are injective and commute")
    }

    pub fn carrier(&self) -> &PointCloud {
        &self.carrier
    }

    pub fn generator(&self, g: usize) -> &PartialMap {
        &self.generators[g]
    }

    /// Fraction of carrier points where each generator is defined.
    pub fn domain_coverage(&self) -> [f64; 2] {
        let n = self.carrier.len().max(1) as f64;
        let cov = |m: &PartialMap| m.iter().filter(|y| y.is_some()).count() as f64 / n;
        [cov(&self.generators[0]), cov(&self.generators[1])]
    }

    /// Powers `g^k` for `k in -range..=range`, indexed by `k + range`.
    fn powers(&self, g: usize, range: i64) -> Vec<PartialMap> {
        let n = self.carrier.len();
        let fwd = &self.generators[g];
        let back = invert(fwd);
        let id: PartialMap = (0..n).map(Some).collect();
        let r = range.max(0) as usize;
        let mut out = vec![id.clone(); 2 * r + 1];
        for k in 1..=r {
            let step = |prev: &PartialMap, m: &PartialMap| -> PartialMap {
                prev.iter().map(|x| x.and_then(|x| m[x])).collect()
            };
            out[r + k] = step(&out[r + k - 1], fwd);
            out[r - k] = step(&out[r - k + 1], &back);
        }
        out
    }

    /// The composite `x -> e1^m (e2^n x)`, undefined wherever any step is.
    pub fn word_map(&self, v: GridVector) -> PartialMap {
        let range = v.m.abs().max(v.n.abs());
        let p1 = self.powers(0, range);
        let p2 = self.powers(1, range);
        compose(&p1[(v.m + range) as usize], &p2[(v.n + range) as usize])
    }

    fn word_maps(&self, range: i64) -> Vec<(GridVector, PartialMap)> {
        let p1 = self.powers(0, range);
        let p2 = self.powers(1, range);
        GridVector::box_range(range)
            .map(|v| (v, compose(&p1[(v.m + range) as usize], &p2[(v.n + range) as usize])))
            .collect()
    }
}

fn compose(outer: &PartialMap, inner: &PartialMap) -> PartialMap {
    inner.iter().map(|x| x.and_then(|x| outer[x])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `h x = x` for a nonidentity `h`.
    FixedPoint { word: GridVector, point: usize },
    /// `d(x, h x)` exceeds the caller's bound.
    Displacement { word: GridVector, point: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordDisplacement {
    pub word: GridVector,
    pub defined: usize,
    pub max: Option<f64>,
}

fn displacement_map<S: Serializer>(words: &[WordDisplacement], s: S) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(words.len()))?;
    for w in words {
        map.serialize_entry(&w.word.to_string(), &w.max)?;
    }
    map.end()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlaCertificate {
    pub pass: bool,
    #[serde(rename = "K")]
    pub k: i64,
    pub bound: Option<f64>,
    pub violations: Vec<Violation>,
    #[serde(serialize_with = "displacement_map")]
    pub max_displacement: Vec<WordDisplacement>,
    pub domain_coverage: [f64; 2],
    pub carrier_label: String,
    pub pairs_checked: usize,
}

impl TlaCertificate {
    pub fn displacement(&self, v: GridVector) -> Option<f64> {
        self.max_displacement.iter().find(|w| w.word == v).and_then(|w| w.max)
    }
}

/// Checks freeness and bounded displacement for every nonidentity word
/// `(m, n)` with `|m|, |n| <= k`, over all points where the word is defined.
pub fn verify_translation_like(action: &FiniteAction, k: i64, bound: Option<f64>) -> Result<TlaCertificate> {
    if k < 1 {
        return Err(Error::InvalidParameter(format!(
            "word range must be at least 1, got {k}"
        )));
    }
    let pts = action.carrier.points();
    let mut violations = Vec::new();
    let mut max_displacement = Vec::new();
    let mut pairs_checked = 0;
    for (v, map) in action.word_maps(k) {
        if v.is_identity() {
            continue;
        }
        let mut defined = 0;
        let mut max: Option<f64> = None;
        for (x, y) in map.iter().enumerate() {
            let Some(y) = *y else { continue };
            defined += 1;
            if y == x {
                violations.push(Violation::FixedPoint { word: v, point: x });
            }
            let d = dist(&pts[x], &pts[y]);
            max = Some(max.map_or(d, |m: f64| m.max(d)));
            if let Some(b) = bound {
                if d > b {
                    violations.push(Violation::Displacement {
                        word: v,
                        point: x,
                        value: d,
                    });
                }
            }
        }
        pairs_checked += defined;
        max_displacement.push(WordDisplacement { word: v, defined, max });
    }
    Ok(TlaCertificate {
        pass: violations.is_empty(),
        k,
        bound,
        violations,
        max_displacement,
        domain_coverage: action.domain_coverage(),
        carrier_label: action.carrier.label().to_string(),
        pairs_checked,
    })
}

/// Transports `source` to `target` through the pairing `psi`:
/// `h . y = psi(h . psi^-1(y))`.
pub fn conjugate_action(source: &FiniteAction, psi: &BottleneckBijection, target: PointCloud) -> Result<FiniteAction> {
    let n = source.carrier.len();
    for m in [psi.len(), target.len()] {
        if m != n {
            return Err(Error::CardinalityMismatch { left: n, right: m });
        }
    }
    check_permutation(&psi.pairing)?;
    let inv = psi.inverse();
    let transport = |map: &PartialMap| -> PartialMap { (0..n).map(|y| map[inv[y]].map(|x| psi.pairing[x])).collect() };
    let e1 = transport(&source.generators[0]);
    let e2 = transport(&source.generators[1]);
    FiniteAction::new(target, e1, e2)
}

/// Pointwise check of `d(y, h y) <= lip * d(psi^-1 y, h psi^-1 y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugationCheck {
    pub lip_forward: f64,
    pub pairs_checked: usize,
    /// Largest `d(y, h y) - lip * d(psi^-1 y, h psi^-1 y)` seen.
    pub max_excess: f64,
    pub violations: usize,
    pub source_fixed_points: usize,
    pub target_fixed_points: usize,
}

impl ConjugationCheck {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.source_fixed_points == 0 && self.target_fixed_points == 0
    }
}

pub fn check_conjugation(
    source: &FiniteAction,
    target: &FiniteAction,
    psi: &BottleneckBijection,
    lip_forward: f64,
    k: i64,
) -> Result<ConjugationCheck> {
    let n = source.carrier.len();
    if target.carrier.len() != n || psi.len() != n {
        return Err(Error::CardinalityMismatch {
            left: n,
            right: target.carrier.len(),
        });
    }
    let inv = psi.inverse();
    let (sp, tp) = (source.carrier.points(), target.carrier.points());
    let mut check = ConjugationCheck {
        lip_forward,
        pairs_checked: 0,
        max_excess: f64::NEG_INFINITY,
        violations: 0,
        source_fixed_points: 0,
        target_fixed_points: 0,
    };
    let source_words = source.word_maps(k);
    let target_words = target.word_maps(k);
    for ((v, smap), (_, tmap)) in source_words.iter().zip(&target_words) {
        if v.is_identity() {
            continue;
        }
        for y in 0..n {
            let x = inv[y];
            match (tmap[y], smap[x]) {
                (Some(hy), Some(hx)) => {
                    if hy != psi.pairing[hx] {
                        return Err(Error::InvalidAction(format!(
                            "target action is not the conjugate at {y}"
                        )));
                    }
                    check.source_fixed_points += usize::from(hx == x);
                    check.target_fixed_points += usize::from(hy == y);
                    let lhs = dist(&tp[y], &tp[hy]);
                    let rhs = lip_forward * dist(&sp[x], &sp[hx]);
                    check.pairs_checked += 1;
                    check.max_excess = check.max_excess.max(lhs - rhs);
                    if lhs > rhs + CONJUGATION_SLACK {
                        check.violations += 1;
                    }
                }
                (None, None) => {}
                _ => {
                    return Err(Error::InvalidAction(format!("domains disagree at target point {y}")));
                }
            }
        }
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitComponent {
    /// Carrier indices, ascending.
    pub points: Vec<usize>,
    /// Number of distinct `e1`- and `e2`-coordinates occupied.
    pub extent: [usize; 2],
}

/// Connected components under the generators and their partial inverses,
/// ordered by smallest member.
pub fn orbit_partition(action: &FiniteAction) -> Vec<OrbitComponent> {
    let n = action.carrier.len();
    let moves: Vec<(PartialMap, [i64; 2])> = vec![
        (action.generators[0].clone(), [1, 0]),
        (invert(&action.generators[0]), [-1, 0]),
        (action.generators[1].clone(), [0, 1]),
        (invert(&action.generators[1]), [0, -1]),
    ];
    let mut coord: Vec<Option<[i64; 2]>> = vec![None; n];
    let mut out = Vec::new();
    for root in 0..n {
        if coord[root].is_some() {
            continue;
        }
        coord[root] = Some([0, 0]);
        let mut members = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let cx = coord[x].expect("visited");
            for (map, step) in &moves {
                if let Some(y) = map[x] {
                    if coord[y].is_none() {
                        coord[y] = Some([cx[0] + step[0], cx[1] + step[1]]);
                        members.push(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        members.sort_unstable();
        let span = |axis: usize| {
            let vals = members.iter().map(|&i| coord[i].expect("visited")[axis]);
            let (lo, hi) = vals.fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
            (hi - lo + 1) as usize
        };
        let extent = [span(0), span(1)];
        out.push(OrbitComponent {
            points: members,
            extent,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horolattice::displacement;
    use crate::hyp3::HPoint;

    #[test]
    fn lattice_action_certificate() {
        let w = LatticeWindow::build(8, 4).unwrap();
        let action = FiniteAction::from_window(&w);
        let cert = verify_translation_like(&action, 3, None).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.max_displacement.len(), 48);
        let d = cert.displacement(GridVector::E1).unwrap();
        assert!((d - 1.5f64.acosh()).abs() < 1e-12);
        for wd in &cert.max_displacement {
            assert!((wd.max.unwrap() - displacement(wd.word)).abs() < 1e-12);
        }
        let cov = action.domain_coverage();
        assert!((cov[0] - 16.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn identity_generator_is_not_free() {
        let w = LatticeWindow::build(2, 1).unwrap();
        let lattice = FiniteAction::from_window(&w);
        let id: PartialMap = (0..w.len()).map(Some).collect();
        let broken = FiniteAction::new(lattice.carrier().clone(), id, lattice.generator(1).clone()).unwrap();
        let cert = verify_translation_like(&broken, 1, None).unwrap();
        assert!(!cert.pass);
        let fixed_by_e1 = cert
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::FixedPoint { word, .. } if *word == GridVector::E1))
            .count();
        assert_eq!(fixed_by_e1, w.len());
    }

    #[test]
    fn displacement_bound_violations() {
        let w = LatticeWindow::build(2, 1).unwrap();
        let action = FiniteAction::from_window(&w);
        let cert = verify_translation_like(&action, 1, Some(1.0)).unwrap();
        // diagonal words move by arccosh(2) > 1
        assert!(!cert.pass);
        assert!(cert
            .violations
            .iter()
            .all(|v| matches!(v, Violation::Displacement { word, .. } if word.m != 0 && word.n != 0)));
        assert!(verify_translation_like(&action, 1, Some(1.5)).unwrap().pass);
        assert!(verify_translation_like(&action, 0, None).is_err());
    }

    #[test]
    fn rejects_invalid_generators() {
        let cloud = LatticeWindow::build(1, 0).unwrap().to_cloud();
        let n = cloud.len();
        let none: PartialMap = vec![None; n];
        let mut collide = none.clone();
        collide[0] = Some(1);
        collide[2] = Some(1);
        assert!(FiniteAction::new(cloud.clone(), collide, none.clone()).is_err());
        let mut out = none.clone();
        out[0] = Some(n);
        assert!(FiniteAction::new(cloud.clone(), out, none.clone()).is_err());
        assert!(FiniteAction::new(cloud, vec![None; 2], none).is_err());
    }

    #[test]
    fn identity_conjugation_is_identity() {
        let w = LatticeWindow::build(3, 1).unwrap();
        let a = FiniteAction::from_window(&w);
        let psi = BottleneckBijection::identity(w.len());
        let b = conjugate_action(&a, &psi, a.carrier().clone()).unwrap();
        assert_eq!(a, b);
        let check = check_conjugation(&a, &b, &psi, 1.0, 3).unwrap();
        assert!(check.pass());
        assert!(check.max_excess <= 0.0);
    }

    #[test]
    fn conjugation_rejects_non_bijection() {
        let w = LatticeWindow::build(1, 0).unwrap();
        let a = FiniteAction::from_window(&w);
        let mut pairing: Vec<usize> = (0..w.len()).collect();
        pairing[1] = 0;
        let psi = BottleneckBijection {
            pairing,
            r_star: 0.0,
            thresholds_tried: 0,
            lipschitz: None,
        };
        assert!(matches!(
            conjugate_action(&a, &psi, a.carrier().clone()),
            Err(Error::InvalidAction(_))
        ));
    }

    #[test]
    fn orbit_partition_examples() {
        for (aa, cc) in [(1, 0), (2, 1), (4, 2)] {
            let w = LatticeWindow::build(aa, cc).unwrap();
            let comps = orbit_partition(&FiniteAction::from_window(&w));
            assert_eq!(comps.len(), (2 * cc + 1) as usize);
            let side = (2 * aa + 1) as usize;
            for comp in &comps {
                assert_eq!(comp.points.len(), side * side);
                assert_eq!(comp.extent, [side, side]);
                let c0 = w.coords()[comp.points[0]].c;
                assert!(comp.points.iter().all(|&i| w.coords()[i].c == c0));
            }
        }
        let single = PointCloud::new("p", vec![HPoint::new(0.0, 0.0, 1.0).unwrap()]).unwrap();
        let a = FiniteAction::new(single, vec![None], vec![None]).unwrap();
        let comps = orbit_partition(&a);
        assert_eq!(
            comps,
            vec![OrbitComponent {
                points: vec![0],
                extent: [1, 1]
            }]
        );
    }

    #[test]
    fn certificate_is_deterministic() {
        let w = LatticeWindow::build(4, 2).unwrap();
        let a = FiniteAction::from_window(&w);
        assert_eq!(
            verify_translation_like(&a, 5, None).unwrap(),
            verify_translation_like(&a, 5, None).unwrap()
        );
    }
}
