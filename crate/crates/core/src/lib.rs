//! Neighbourhood components analysis for tabular data.
//!
//! `ncakit-core` implements the soft nearest-neighbour family of metric
//! learners, from classic linear NCA up to a deep variant with periodic
//! numerical embeddings and stochastic neighbourhood sampling, together with
//! the evaluation protocol used to compare them (seeded splits, accuracy and
//! RMSE, average ranks, Welch t-test win/tie/lose).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV loading and
//! the command-line front end live in the `ncakit` crate.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod data;
pub mod diff;
pub mod error;
pub mod eval;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod neighborhood;
pub mod rng;
pub mod search;
pub mod synth;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;
