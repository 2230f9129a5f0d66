//! Desk-scale laboratory for planar configuration avoidance.
//!
//! The crate revolves around two point configurations: the hyperbolic
//! corner `(x, y), (x + t, y), (x, y + 1/t)` with `t > 0`, and triangles of
//! a prescribed area. It provides exact interval-arithmetic feasibility
//! predicates, a layered band construction that provably avoids corners,
//! trilinear counting forms evaluated by quadrature, spectral diagnostics
//! (an oscillatory multiplier, anisotropic Sobolev norms), Riesz-energy
//! identities, a discrete triangle-extraction procedure on integer grids,
//! and stochastic search for dense avoiding sets.
//!
//! Everything is deterministic given a seed: randomness flows from a single
//! 64-bit master seed through the splitting scheme in [`rng`].

pub mod bands;
pub mod discrete;
pub mod energy;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod mollifier;
pub mod quadrature;
pub mod raster;
pub mod rng;
pub mod search;
pub mod setfile;
pub mod spectral;

pub use error::CoreError;
