//! Exact laws, moment computations and simulation for the α-skew random walk.
//!
//! The walk moves from the origin up with probability `α` and down with
//! probability `1 − α`; away from the origin it steps like a fair coin.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod error;
pub mod lattice;
pub mod moments;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{LatticePmf, SkewParam};
pub use rng::RngContract;
