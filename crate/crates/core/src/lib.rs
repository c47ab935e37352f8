//! Time-periodic Stokes and Navier-Stokes flow in axially periodic pipes with a
//! prescribed, time-periodic flux.
//!
//! The solver works on one axial period of the pipe mapped to a reference
//! rectangle, builds the discrete Stokes operator on exactly divergence-free
//! fields, and solves the time-periodic problem harmonic by harmonic.

pub mod error;
pub mod fields;
pub mod forcing;
pub mod geometry;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod modes;
pub mod nonlinear;
pub mod oracles;
pub mod pipeline;
pub mod spectrum;

pub use error::{PerifluxError, Result};
