//! Coverage and rate analysis for a single RIS-assisted link.
//!
//! The crate covers the full chain from geometry to performance:
//! [`channel`] turns node positions into large-scale statistics and fading
//! draws, [`phase`] builds the RIS phase profiles, [`analytic`] evaluates the
//! Gamma-matched closed forms, [`montecarlo`] checks them by simulation and
//! [`placement`] moves the RIS by gradient ascent on the analytic coverage.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod phase;
pub mod placement;
pub mod rng;
pub mod scenario;
pub mod specfun;

pub use error::{Error, Result};
