//! Sticky diffusions on star graphs: path construction by random time change,
//! local-time estimation, and verification of the associated vertex-condition
//! boundary value problems.
//!
//! A star graph is a bundle of `N` half-lines glued at a single vertex. The
//! library simulates the nonsticky diffusion (instantaneous edge selection
//! with weights `rho`), converts it into a sticky one (positive occupation
//! time at the vertex, governed by the stickiness parameter `eta`) through
//! the clock `V(t) = t + eta * ell(t)`, and cross-checks the resulting path
//! laws against closed-form and finite-difference solutions of the matching
//! elliptic and parabolic problems.
//!
//! Entry points:
//! - [`graph::StarGraph`]: the static model (geometry, coefficients, weights).
//! - [`path::Simulator`]: reflected Euler simulation of the nonsticky process.
//! - [`time_change`]: the clock map, `stickify` / `destickify`.
//! - [`local_time`]: occupation and upcrossing estimators.
//! - [`bvp`]: vertex-ball ODE system in closed form, elliptic/parabolic
//!   finite-difference solvers used as oracles.
//! - [`validation`]: Monte Carlo estimators of the representation formulas
//!   plus statistical residual tests.
//! - [`config`] / [`io`]: run configuration and CSV/JSON persistence.

// `!(x > 0.0)` rejects NaN along with the out-of-range values; the
// suggested `partial_cmp` forms lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod func;
pub mod config;
pub mod graph;
pub mod io;
pub mod local_time;
pub mod numeric;
pub mod path;
pub mod rng;
pub mod time_change;
pub mod validation;

pub use graph::{CoefficientSpec, GraphPoint, StarGraph, StarGraphSpec};
pub use path::{ExitRecord, Path, PathKind, Simulator};
pub use time_change::{build_time_change, destickify, stickify, TimeChangeMap};
