//! Monte Carlo engine for Bell tests performed with randomly chosen local
//! measurements on a (Werner) singlet state.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the
//! algorithmic layer:
//!
//! - [`quantum`]: Bloch vectors, measurement triads, Werner-state correlators
//!   and joint outcome probabilities.
//! - [`device`]: the Mach-Zehnder measurement device, mapping heater
//!   voltages to phases and phases to measurement directions.
//! - [`chsh`]: CHSH evaluation, exhaustive maximization and the constructive
//!   canonical-form certificate for orthogonal triads.
//! - [`sampling`]: counter-based random streams and Haar-random settings.
//! - [`statistics`]: Poissonian coincidence counts, accidental subtraction,
//!   Monte Carlo error bars and shifted classical bounds.
//! - [`experiments`]: trial runners and violation-probability curves.
//!
//! IO, file formats, parallel execution and the command line live in the
//! `randbell` companion crate.
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod chsh;
pub mod device;
mod error;
pub mod experiments;
pub mod quantum;
pub mod sampling;
pub mod statistics;

pub use error::{Error, Result};

/// Tolerance applied to user-supplied geometry (unit norms, orthogonality).
pub const GEOMETRY_TOL: f64 = 1e-9;

/// The Tsirelson bound `2√2`, the largest quantum CHSH value.
pub const TSIRELSON: f64 = 2.0 * core::f64::consts::SQRT_2;

/// The local (classical) CHSH bound.
pub const LOCAL_BOUND: f64 = 2.0;
