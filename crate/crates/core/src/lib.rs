//! Spectral truncations of the circle: Toeplitz operator systems, their
//! state spaces, and the spectral (Connes) distance on them.

pub mod distance;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod gh;
pub mod linalg;
pub mod states;
pub mod toeplitz;
pub mod transport;

pub use error::{Error, Result};
