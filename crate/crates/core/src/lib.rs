//! Physics-informed networks for time-dependent diffusion on closed surfaces.

pub mod bench;
pub mod diffengine;
pub mod error;
pub mod geometry;
pub mod irk;
pub mod legendre;
pub mod network;
pub mod residuals;
pub mod sampling;
pub mod trainer;

pub use error::{Error, Result};
