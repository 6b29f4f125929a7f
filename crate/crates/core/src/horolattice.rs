//! The dyadic horolattice `X = {(2^c a, 2^c b, 2^c) : a, b, c in Z}` and the
//! `Z^2` action shifting `(a, b)` at a fixed level `c`.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::hyp3::{acosh1p, HPoint};

/// Largest `|c|` accepted by [`embed`].
pub const LEVEL_BOUND: i64 = 40;
/// Default cap on the number of points in a [`LatticeWindow`].
pub const POINT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeCoord {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl LatticeCoord {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }
}

/// An element `(m, n)` of `Z^2`; `e1 = (1, 0)` and `e2 = (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridVector {
    pub m: i64,
    pub n: i64,
}

impl GridVector {
    pub const ZERO: GridVector = GridVector { m: 0, n: 0 };
    pub const E1: GridVector = GridVector { m: 1, n: 0 };
    pub const E2: GridVector = GridVector { m: 0, n: 1 };

    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::ZERO
    }

    pub fn checked_add(self, other: GridVector) -> Option<GridVector> {
        Some(GridVector {
            m: self.m.checked_add(other.m)?,
            n: self.n.checked_add(other.n)?,
        })
    }

    /// All words with `|m|, |n| <= k`, in row-major order starting at `(-k, -k)`.
    pub fn box_range(k: i64) -> impl Iterator<Item = GridVector> {
        (-k..=k).flat_map(move |m| (-k..=k).map(move |n| GridVector { m, n }))
    }
}

impl std::fmt::Display for GridVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// `2^c` built directly from the exponent bits.
fn pow2(c: i64) -> f64 {
    debug_assert!(c.abs() <= 1022);
    f64::from_bits(((1023 + c) as u64) << 52)
}

/// The inclusion `X -> H^3`, `(a, b, c) -> (2^c a, 2^c b, 2^c)`.
pub fn embed(coord: LatticeCoord) -> Result<HPoint> {
    if coord.c.abs() > LEVEL_BOUND {
        return Err(Error::LevelOverflow {
            level: coord.c,
            bound: LEVEL_BOUND,
        });
    }
    let s = pow2(coord.c);
    HPoint::new(coord.a as f64 * s, coord.b as f64 * s, s)
}

/// `(m, n) . (a, b, c) = (a + m, b + n, c)`.
pub fn act(v: GridVector, coord: LatticeCoord) -> Result<LatticeCoord> {
    Ok(LatticeCoord {
        a: coord.a.checked_add(v.m).ok_or(Error::IndexOverflow)?,
        b: coord.b.checked_add(v.n).ok_or(Error::IndexOverflow)?,
        c: coord.c,
    })
}

/// Distance every lattice point is moved by `v`: `arccosh(1 + (m^2 + n^2) / 2)`.
///
/// At level `c` the horizontal gap is `2^c |v|` and both heights are `2^c`, so
/// the level cancels.
pub fn displacement(v: GridVector) -> f64 {
    let (m, n) = (v.m as f64, v.n as f64);
    acosh1p((m * m + n * n) / 2.0)
}

/// The box `|a|, |b| <= A`, `|c| <= C` of lattice indices.
///
/// Points are stored level-major, then by `a`, then by `b`, so that
/// [`LatticeWindow::index_of`] is a closed-form computation.
#[derive(Debug, Clone)]
pub struct LatticeWindow {
    half_width: i64,
    levels: i64,
    coords: Vec<LatticeCoord>,
}

impl LatticeWindow {
    pub fn build(half_width: i64, levels: i64) -> Result<Self> {
        Self::build_with_budget(half_width, levels, POINT_BUDGET)
    }

    pub fn build_with_budget(half_width: i64, levels: i64, budget: u64) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidParameter(format!(
                "window half-width must be positive, got {half_width}"
            )));
        }
        if levels < 0 {
            return Err(Error::InvalidParameter(format!(
                "window level bound must be nonnegative, got {levels}"
            )));
        }
        if levels > LEVEL_BOUND {
            return Err(Error::LevelOverflow {
                level: levels,
                bound: LEVEL_BOUND,
            });
        }
        let side = (2 * half_width as u128) + 1;
        let requested = side * side * (2 * levels as u128 + 1);
        if requested > budget as u128 {
            return Err(Error::BudgetExceeded {
                requested: u64::try_from(requested).unwrap_or(u64::MAX),
                budget,
            });
        }
        let mut coords = Vec::with_capacity(requested as usize);
        for c in -levels..=levels {
            for a in -half_width..=half_width {
                for b in -half_width..=half_width {
                    coords.push(LatticeCoord { a, b, c });
                }
            }
        }
        Ok(Self {
            half_width,
            levels,
            coords,
        })
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn levels(&self) -> i64 {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[LatticeCoord] {
        &self.coords
    }

    pub fn contains(&self, coord: LatticeCoord) -> bool {
        coord.a.abs() <= self.half_width && coord.b.abs() <= self.half_width && coord.c.abs() <= self.levels
    }

    pub fn index_of(&self, coord: LatticeCoord) -> Option<usize> {
        if !self.contains(coord) {
            return None;
        }
        let side = 2 * self.half_width + 1;
        let level = coord.c + self.levels;
        let i = (level * side + coord.a + self.half_width) * side + coord.b + self.half_width;
        Some(i as usize)
    }

    pub fn to_cloud(&self) -> PointCloud {
        let points = self
            .coords
            .iter()
            .map(|&c| embed(c).expect("window levels are within the embedding bound"))
            .collect();
        PointCloud::new(
            format!("dyadic-window(A={},C={})", self.half_width, self.levels),
            points,
        )
        .expect("embed is injective")
    }
}

/// Outcome of the exhaustive freeness check on lattice coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreenessReport {
    pub range: i64,
    pub words_checked: usize,
    pub pairs_checked: usize,
    pub violations: Vec<(GridVector, LatticeCoord)>,
}

impl FreenessReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `act(v, x) != x` for every nonzero `v` with `|m|, |n| <= range` and
/// every `x` in the window.
pub fn verify_action_free(window: &LatticeWindow, range: i64) -> Result<FreenessReport> {
    let mut report = FreenessReport {
        range,
        words_checked: 0,
        pairs_checked: 0,
        violations: Vec::new(),
    };
    for v in GridVector::box_range(range).filter(|v| !v.is_identity()) {
        report.words_checked += 1;
        for &x in window.coords() {
            report.pairs_checked += 1;
            if act(v, x)? == x {
                report.violations.push((v, x));
            }
        }
    }
    Ok(report)
}
