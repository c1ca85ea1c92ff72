//! Simulation and numerical checks for thick points of the Cauchy process.
//!
//! * [`stable_sim`]: killed Cauchy paths and their occupation measures.
//! * [`green`]: the slit-plane Green function, expected occupation times and
//!   the moment and tail bounds built on them.
//! * [`brownian`]: planar Brownian motion, local time at the axis, the
//!   time-changed Cauchy process and excursion counts.
//! * [`occupation`]: sup statistic, thick-point masses and the coarse spectrum.
//! * [`walk`]: the integer-valued discrete analogues.
//! * [`experiment`] and [`verify`]: seeded batch runs and verification suites.

pub mod brownian;
pub mod error;
pub mod experiment;
pub mod green;
pub mod occupation;
pub mod quadrature;
pub mod rng;
pub mod stable_sim;
pub mod stats;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
