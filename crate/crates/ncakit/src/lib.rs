//! File formats, experiment harness and command line for `ncakit-core`.

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod io;
pub mod manifest;
pub mod run;

pub use error::{Error, Result};
pub use ncakit_core as core;
