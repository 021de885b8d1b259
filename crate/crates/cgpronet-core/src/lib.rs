//! Core engine for causal graph process forecasting on directed graphs.
//!
//! The crate is `no_std` (with `alloc`) so the numerical machinery can run in
//! constrained environments; all file formats, the CLI, and experiment
//! orchestration live in the companion `cgpronet` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod filter;
pub mod graph;
pub mod model;
pub mod rng;
pub mod series;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use series::TimeSeries;

/// Node-count limit above which dense N x N intermediates are refused by
/// default. Overridable everywhere a cap is taken as an argument.
pub const DEFAULT_DENSE_CAP: usize = 2000;
