//! Beam alignment for millimeter-wave links: channel and codebook models,
//! exhaustive, hierarchical and two-stage beam search, an analytical
//! misalignment bound with its decay-rate theory, and a seeded Monte Carlo
//! harness.

// NaN-rejecting guards are written as `!(x > y)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod codebook;
mod error;
pub mod quad;
pub mod search;
pub mod simkit;

pub use error::{Error, Result};
