//! Randomized sparsification of graph Laplacians with bootstrap error
//! certificates.
//!
//! A [`SparsifiedSample`](sampling::SparsifiedSample) stores `N` i.i.d. edge
//! draws. The [`bootstrap`] routines resample those draws to bound the error
//! of the sparsified Laplacian: quantiles of error functionals, simultaneous
//! intervals for cut values and eigenvalues, and forecasts of the sample size
//! needed to reach a target error.

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod functionals;
pub mod graph;
pub mod harness;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
