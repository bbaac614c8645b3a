//! Pseudospectral solver and diagnostics for focusing Schrödinger and wave
//! equations with electromagnetic potentials.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod operators;
pub mod oracle;
pub mod potentials;
pub mod verify;

pub use error::{Error, Result};
