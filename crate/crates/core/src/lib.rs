//! Numerical laboratory for joint-probability-distribution tests of
//! correlation inequalities.
//!
//! The same n-cycle inequality is evaluated in three physical settings:
//! compatible measurements on one system (contextuality), sequential
//! measurements of an evolving observable (temporal, Leggett-Garg type) and
//! measurements on two separated subsystems (spatial, Bell type). Classical
//! models are characterized by linear programming over deterministic
//! assignments, and temporal violations are decomposed into
//! consistent-histories interference terms.

// `!(x <= bound)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
mod error;
pub mod histories;
pub mod parallel;
pub mod qmat;
pub mod quantum;
pub mod random;
pub mod scenario;
pub mod search;

pub use error::{Error, Result};
pub use parallel::Execution;
