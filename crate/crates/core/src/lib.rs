//! Layered erasure and fading Gaussian broadcast channels: capacity regions,
//! outer bounds, binary-expansion inner bounds and the gap between them.

pub mod bes;
pub mod erasure;
pub mod error;
pub mod fading;
pub mod gap;
pub mod gaussian;
pub mod quad;
pub mod region;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
