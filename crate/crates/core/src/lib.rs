//! Clustering under center-based stability assumptions.

// `!(x >= 0.0)` is how parameter checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod config;
pub mod datasets;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod kmeans;
pub mod perceptron;
pub mod rng;
pub mod robust;
pub mod stability;
pub mod stable;
pub mod suites;
pub mod synth;

pub use error::{Error, Result};
pub use instance::{Clustering, Instance, Matrix};
