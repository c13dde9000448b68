//! Numerics for planar Brownian motion and the Brownian loop measure.
//!
//! The crate computes harmonic and excursion measures, Brownian bubble masses, loop-measure
//! masses, the normalized loop measure Λ*, logarithmic capacity, conformal radius, conformal
//! annulus moduli and the density of radial SLE from the interior relative to whole-plane SLE.
//! Deterministic closed forms and series solvers sit beside Monte Carlo estimators so that every
//! quantity can be cross-checked along two independent routes.

pub mod bubble;
pub mod error;
pub mod estimate;
pub mod geometry;
pub mod harmonic;
pub mod kernels;
pub mod lambda_star;
pub mod loops;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod sle;

pub use error::{Error, Result};
pub use estimate::Estimate;
pub use geometry::{c64, Arc, Circle, CompactSet, ComplexPoint, Domain, MobiusMap, PolyCurve, C64};
pub use rng::RngStream;
