//! Reduced rectangular Morley finite elements on rectangular grids.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod fields;
pub mod grid;
pub mod interpolation;
pub mod linalg;
pub mod output;
pub mod problems;
pub mod quadrature;
pub mod verify;

pub use error::{Result, RrmError};
