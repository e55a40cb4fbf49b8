//! Equilibrium toolkit for a partially segmented over-the-counter market.
//!
//! Investors are either owners of one unit of one of K assets or
//! non-owners. High-type non-owners search for a single asset, meet
//! low-type owners of that asset at rate λ_i, and trade at a Nash-bargained
//! price. The crate solves the mean-field steady state, certifies its
//! stability, evaluates prices, runs comparative statics, and checks the
//! mean-field picture against a finite-population simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod pricing;
pub mod stability;
pub mod statics;

pub use error::{Error, Result};
pub use model::{FullState, ModelParams, ReducedState, ValidatedParams};
