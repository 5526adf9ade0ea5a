//! Cluster expansions for abstract polymer systems.
//!
//! The crate evaluates the cluster series of `log Z` and of correlation
//! functions for a polymer gas given by a measure space and a pair
//! interaction `ζ`, checks the convergence criterion with weight functions
//! `a`, `b`, `c`, and verifies the bounds that the criterion implies.
//!
//! - [`ursell`]: graph enumeration, Ursell function, minimal connecting cost,
//!   set partitions.
//! - [`polymer_space`]: discrete and sampled polymer spaces, kernels, weights.
//! - [`expansion`]: `log Z` series, `Ẑ`, correlation ratios, direct sums.
//! - [`convergence`]: criterion checks, bounds, `γ`, decay estimates.
//! - [`models`]: classical gas, lattice polymers, quantum-gas criterion.
//! - [`oracle`]: exact brute-force references.
//! - [`cli`]: the command-line front end.

pub mod cli;
mod cluster;
pub mod convergence;
pub mod error;
pub mod expansion;
pub mod models;
pub mod number;
pub mod oracle;
pub mod polymer_space;
pub mod rng;
pub mod ursell;

pub use error::{Error, Result};
pub use number::Number;
