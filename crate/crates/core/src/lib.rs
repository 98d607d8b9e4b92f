//! Threshold dynamics (MBO) on random geometric graphs sampled from closed
//! manifolds, with continuum reference solutions and convergence diagnostics.

pub mod continuum;
pub mod diagnostics;
pub mod error;
pub mod front;
pub mod graph;
pub mod manifold;
pub mod mbo;
pub mod schedule;
pub mod spectral;
pub mod util;

pub use error::{Error, Result};
