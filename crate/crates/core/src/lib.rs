//! Energy-optimal base-station activation for multi-operator cellular networks.
//!
//! The analytical engine models each operator's base stations as a thinned
//! Poisson point process and solves for the per-bit delay seen by a typical
//! user as a fixed point. On top of that sit the power model, the sharing
//! strategies and their optimizer, a scenario pipeline that turns site and
//! traffic tables into per-slot models, and a Monte Carlo simulator that
//! checks the analytical quantities.

pub mod delay;
pub mod domain;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod radio;
pub mod scenario;
pub mod simulate;
pub mod strategies;

pub use error::{Error, Result};
