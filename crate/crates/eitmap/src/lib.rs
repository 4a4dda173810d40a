//! File formats, configuration and pipeline orchestration around
//! [`eitmap_core`].
//!
//! * [`dataio`]: EITF frame sequences, trigger files, pixel maps (CSV + PGM).
//! * [`rules`]: rule-base JSON loading and the embedded default models.
//! * [`config`]: the pipeline configuration file.
//! * [`run`]: stage runners used by the `eitmap` binary.

#![forbid(unsafe_code)]

pub mod config;
pub mod dataio;
pub mod error;
pub mod rules;
pub mod run;

pub use error::{ErrorClass, RunError};
