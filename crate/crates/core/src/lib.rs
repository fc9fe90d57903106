//! Casimir pressures between superconducting plates and the membrane
//! force-sensing pipeline used to measure them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod comparison;
pub mod error;
pub mod lifshitz;
pub mod membrane;
pub mod permittivity;
pub mod physcore;
pub mod quadrature;

pub use error::{Error, Result};
