//! Metric uniform-distribution toolkit: sequences in the unit cube, exact
//! discrepancies, discrepancy-satisfying schedules, local ubiquity checks,
//! truncated limsup-set measures and weighted dimension formulas.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod discrepancy;
pub mod dss;
pub mod error;
pub mod limsup;
pub mod rng;
pub mod sequences;
pub mod ubiquity;

pub use error::{Error, ErrorClass, Result};
