//! Chains of matrix Darboux transformations with singular links.
//!
//! A chain acts on a diagonal reference system `-psi'' + V0 psi = E psi`.
//! The first links act only on a leading block of channels (singular
//! links); the rest act on all of them. The resulting potential and
//! transformed solutions are expressed as ratios of block determinants.

pub mod chain;
pub mod cli;
pub mod detkit;
pub mod diff;
pub mod error;
pub mod jet;
pub mod samples;
pub mod scattering;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
