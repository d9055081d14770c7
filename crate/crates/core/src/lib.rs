//! Response of an Unruh-deWitt detector whose trajectory is a quantum
//! superposition of uniformly accelerated worldlines.
//!
//! Natural units (c = ħ = k_B = 1), signature (−,+,+,+), scalar massless
//! field in its Minkowski vacuum.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod correlators;
pub mod error;
pub mod kinematics;
pub mod quadrature;
pub mod response_closed;
pub mod response_numeric;
pub mod superposition_state;
pub mod validity;

pub use error::{Error, Result};
