//! Capacity-scaling machinery for wireless ad hoc networks with
//! line-of-sight channels.
//!
//! The crate evaluates cooperative MIMO capacity bounds on exact
//! phase-accurate channel matrices, plans the modified hierarchical
//! cooperation scheme, and provides Monte Carlo checks of the statistical
//! lemmas the scaling analysis rests on.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod mimo;
pub mod planner;
pub mod protocol;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};

/// Library version embedded in experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
