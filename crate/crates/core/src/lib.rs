//! Time-inhomogeneous geodesic random walks on manifolds whose metric evolves
//! in time, together with the reflection and parallel-transport couplings built
//! from them and the one-dimensional comparison processes that control them.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, threads or configuration files lives in the `gtwalk` crate.
//!
//! Module map:
//!
//! * [`manifold`]: model manifolds with closed-form geometry (Euclidean, round
//!   spheres with an optional backward Ricci flow, hyperbolic space, conformal
//!   time scalings) and a numeric chart fallback.
//! * [`variation`]: the comparison ODE along geodesics, index forms, dagger
//!   fields and the time derivative of distance.
//! * [`walk`]: the walk itself, interpolation, exit times, Poisson
//!   subordination.
//! * [`coupling`]: coupled walks, coupling times and dominating processes.
//! * [`comparison`]: Ornstein–Uhlenbeck comparison, `chi`/`beta`, radial
//!   comparison and the Feller explosion test.
//! * [`stats`]: Monte Carlo estimates and the verification experiments.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod comparison;
pub mod coupling;
pub mod error;
pub mod exec;
pub(crate) mod linalg;
pub mod manifold;
pub mod rng;
pub mod stats;
pub mod variation;
pub mod walk;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use manifold::{
    Coords, Frame, Geodesic, ManifoldModel, ModelKind, NumericChart, Point, TangentVector,
};
