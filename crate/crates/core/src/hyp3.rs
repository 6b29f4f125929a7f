//! Upper half-space model of hyperbolic 3-space.
//!
//! Points are `(x, y, z)` with `z > 0`. Distances use the closed form
//! `arccosh(1 + |p - q|^2 / (2 p.z q.z))`, evaluated through `log1p` so that
//! short distances keep full relative precision.

use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DET_TOLERANCE: f64 = 1e-9;
pub const ISOMETRY_TOLERANCE: f64 = 1e-9;

/// A point of the upper half-space. Equality is bitwise on all three
/// coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HPoint {
    x: f64,
    y: f64,
    z: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) || z <= 0.0 {
            return Err(Error::InvalidPoint { x, y, z });
        }
        Ok(Self { x, y, z })
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn bits(&self) -> [u64; 3] {
        [self.x.to_bits(), self.y.to_bits(), self.z.to_bits()]
    }
}

impl PartialEq for HPoint {
    fn eq(&self, other: &Self) -> bool {
        self.bits() == other.bits()
    }
}

impl Eq for HPoint {}

impl Hash for HPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits().hash(state);
    }
}

/// `arccosh(1 + u)` for `u >= 0`, accurate when `u` is small.
#[inline]
pub fn acosh1p(u: f64) -> f64 {
    if u > 1e150 {
        // u (u + 2) would overflow; arccosh(t) ~ ln(2t) there.
        return (2.0 * (1.0 + u)).ln();
    }
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// The quantity `cosh(dist(p, q)) - 1`. Monotone in the distance, and cheap.
#[inline]
pub fn cosh_gap(p: &HPoint, q: &HPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dz = p.z - q.z;
    (dx * dx + dy * dy + dz * dz) / (2.0 * p.z * q.z)
}

/// Hyperbolic distance between two points.
#[inline]
pub fn dist(p: &HPoint, q: &HPoint) -> f64 {
    acosh1p(cosh_gap(p, q))
}

/// The similarity `(x, y, z) -> (k x, k y, k z)`.
pub fn dilate(factor: f64, p: &HPoint) -> Result<HPoint> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidDilation(factor));
    }
    HPoint::new(factor * p.x, factor * p.y, factor * p.z)
}

/// A 2x2 complex matrix with determinant one (within tolerance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SL2C {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl SL2C {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        Self::with_tolerance(a, b, c, d, DET_TOLERANCE)
    }

    pub fn with_tolerance(a: Complex64, b: Complex64, c: Complex64, d: Complex64, tolerance: f64) -> Result<Self> {
        let m = Self { a, b, c, d };
        let det = m.det();
        if !((det - 1.0).norm() <= tolerance) {
            return Err(Error::Determinant {
                det: format!("{det}"),
                tolerance,
            });
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    /// The parabolic translation `w -> w + t`.
    pub fn translation(t: Complex64) -> Self {
        Self {
            b: t,
            ..Self::identity()
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse via the adjugate. Exact: only negations are involved.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }
}

impl Mul for SL2C {
    type Output = SL2C;

    fn mul(self, rhs: SL2C) -> SL2C {
        SL2C {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

/// Hamilton quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy)]
struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Quaternion {
    fn from_complex(c: Complex64) -> Self {
        Self {
            w: c.re,
            x: c.im,
            y: 0.0,
            z: 0.0,
        }
    }

    fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    fn inverse(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Self {
            w: self.w / n,
            x: -self.x / n,
            y: -self.y / n,
            z: -self.z / n,
        })
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w + o.w,
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
        }
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

/// Applies `g` to `p` as `(a w + b)(c w + d)^-1` with `w = x + y i + z j`.
///
/// The matrix is rescaled to unit determinant first, so a `g` that passed the
/// determinant check acts as the exact isometry of its normalisation.
pub fn mobius_apply(g: &SL2C, p: &HPoint) -> Result<HPoint> {
    let s = g.det().sqrt();
    if !(s.norm() > 0.0) {
        return Err(Error::DegenerateTransform("singular matrix".into()));
    }
    let (a, b, c, d) = (g.a / s, g.b / s, g.c / s, g.d / s);
    let w = Quaternion {
        w: p.x,
        x: p.y,
        y: p.z,
        z: 0.0,
    };
    let num = Quaternion::from_complex(a) * w + Quaternion::from_complex(b);
    let den = Quaternion::from_complex(c) * w + Quaternion::from_complex(d);
    let inv = den
        .inverse()
        .ok_or_else(|| Error::DegenerateTransform("non-invertible denominator".into()))?;
    let q = num * inv;
    if !(q.y > 0.0 && q.y.is_finite() && q.w.is_finite() && q.x.is_finite()) {
        return Err(Error::DegenerateTransform(format!(
            "image ({}, {}, {}) is not in the upper half-space",
            q.w, q.x, q.y
        )));
    }
    HPoint::new(q.w, q.x, q.y)
}
