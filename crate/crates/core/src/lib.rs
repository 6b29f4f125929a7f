//! Finite-window verification toolkit for translation-like actions of `Z^2`
//! on the dyadic horolattice in hyperbolic 3-space.
//!
//! The crate is organised bottom-up:
//!
//! * [`hyp3`] - upper half-space geometry and the Möbius action of `SL(2, C)`.
//! * [`horolattice`] - the dyadic lattice `{(2^c a, 2^c b, 2^c)}` and its `Z^2` action.
//! * [`cloud`] - immutable point clouds, CSV I/O and a nearest-neighbour index.
//! * [`udbg_profile`] - uniform discreteness, ball growth and covering radius.
//! * [`bilip_match`] - bottleneck bijections, Hall violators, Lipschitz constants.
//! * [`tla`] - partial actions, freeness certificates and conjugation.
//! * [`orbitnet`] - orbit enumeration and the horospherical band experiment.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bilip_match;
pub mod cloud;
pub mod error;
pub mod horolattice;
pub mod hyp3;
pub mod orbitnet;
pub mod tla;
pub mod udbg_profile;

pub use bilip_match::{BottleneckBijection, DisplacementGraph, LipschitzConstants, Matching};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use horolattice::{GridVector, LatticeCoord, LatticeWindow};
pub use hyp3::{HPoint, SL2C};
pub use tla::{FiniteAction, TlaCertificate};

/// Formats a float with 17 significant digits, the fixed representation used
/// for every emitted CSV cell and JSON number.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
