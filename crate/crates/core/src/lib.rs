//! Numerics for critical quasicircle maps.
//!
//! Builds the explicit rational families whose Julia sets contain an invariant
//! quasicircle carrying a critical point, tunes their parameters to a bounded
//! type rotation number, traces the curve from the critical orbit and measures
//! its renormalization and fractal geometry.

pub mod cfrac;
pub mod curve;
pub mod error;
pub mod exec;
pub mod fit;
pub mod julia;
pub mod maps;
pub mod poly;
pub mod renorm;
pub mod rotation;

pub use error::{Error, Result};
pub use exec::Execution;
