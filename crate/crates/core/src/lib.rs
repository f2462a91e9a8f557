//! Berry phases of dressed states in multiphoton Jaynes-Cummings models.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod models;
pub mod presets;
pub mod raman;
pub mod ramsey;
pub mod spectra;
pub mod sweep;
pub mod table;
pub mod verify;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
