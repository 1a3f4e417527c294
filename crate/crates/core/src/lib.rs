//! Random walk driven by the one-dimensional simple symmetric exclusion process.
//!
//! The crate is organised bottom-up:
//!
//! * [`graphical`] — Poisson arrow fields, ζ-path tracing and configuration evolution.
//! * [`environment`] — the [`environment::Environment`] trait the walker reads, plus presets.
//! * [`walker`] — the coupled walk (one clock, shared uniform marks) and its sandwich walks.
//! * [`scales`] — block schedule, block geometry, block predicates and the Σ̂ count.
//! * [`percolation`] — block percolation: traversal, ψ, sup oracle, tail bounds.
//! * [`isrw`] — independent random walks, exact kernels and exact small-window moments.
//! * [`harness`] — replica orchestration, experiments and reports.

// `!(x > 0.0)` guards are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod graphical;
pub mod harness;
pub mod isrw;
pub mod percolation;
pub mod rng;
pub mod scales;
pub mod walker;

pub use error::{Error, Result};
