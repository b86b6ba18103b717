//! Stochastic feedforward ReLU networks in max-plus form.
//!
//! The crate simulates networks whose integer weights and real biases are
//! random, tracks each layer as a difference `F − G` of tropical polynomials,
//! checks the concentration bounds that hold for such networks by Monte
//! Carlo, builds the expected classifier with its error bounds and picks a
//! layer count by backward-induction optimal stopping.

// Validation code uses `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod concentration;
pub mod error;
pub mod harness;
pub mod layer_select;
pub mod rng;
pub mod sdnn;
pub mod tropical;

pub use error::{Error, Result};
