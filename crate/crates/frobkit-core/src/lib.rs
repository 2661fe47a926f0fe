//! frobkit-core: exact arithmetic for semilinear Frobenius modules over
//! p-adic local fields.
//!
//! The crate computes with free modules over Q_q tensor L carrying a
//! sigma-semilinear bijection: Newton slopes and isoclinic decompositions,
//! descent along coefficient-field extensions with cocycle obstructions,
//! integral lattices with Frobenius and Verschiebung, and validation of
//! Frobenius characteristic-polynomial datasets.

pub mod cocycle;
pub mod coeff;
pub mod descent;
pub mod dieudonne;
pub mod error;
pub mod expr;
pub mod fp;
pub mod frobdata;
pub mod isocrystal;
pub mod linalg;
pub mod padic;
pub mod slopes;
pub mod testutil;

pub use error::{Error, Result};
