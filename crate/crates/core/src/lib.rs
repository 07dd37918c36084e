//! Two-dimensional border-collision normal form
//! `f(x, y) = (tau x + y + 1, -delta x)`, with the left piece used for `x < 0`
//! and the right piece for `x >= 0`.
//!
//! The crate covers the map itself, the parameter-space regions on which the
//! robust-chaos results hold, piecewise-linear geometry (slope cones,
//! polylines cut at the switching line), invariant-manifold growth and the
//! bifurcation curves that bound the chaotic attractor.

pub mod bifurcation;
mod cluster;
pub mod error;
pub mod geometry;
pub mod manifolds;
pub mod map;
pub mod region;
pub mod verify;

pub use error::{Error, Result};
pub use map::{Params, Point, Side};
