//! Push-sum consensus and distributed optimization over time-varying
//! directed graphs.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod consensus;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod optim;
pub mod rng;
pub mod trace;
pub mod weights;

pub use error::{Error, Result};
