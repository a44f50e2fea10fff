//! Local probabilities of randomly stopped sums of heavy-tailed lattice
//! random variables, their asymptotic predictors, and the clustering
//! analysis of power-law random intersection graphs.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asym;
pub mod clustering;
pub mod diagnostics;
pub mod error;
pub mod lattice;
pub mod numeric;
pub mod report;
pub mod rig;
pub mod rng;
pub mod stopsum;
pub mod verify;

pub use error::{Error, Result};
