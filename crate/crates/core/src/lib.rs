//! Monodomain and bidomain models of cardiac electrophysiology on box grids:
//! forward simulation, adjoint gradients, optimal control of the
//! extracellular stimulus, and numerical checks of the stability, a-priori
//! and regularity estimates.

pub mod adjoint;
pub mod assembly;
pub mod control;
pub mod error;
pub mod exec;
pub mod forward;
pub mod grid;
pub mod ionic;
pub mod presets;
pub mod verify;

pub use error::{Error, Result};
