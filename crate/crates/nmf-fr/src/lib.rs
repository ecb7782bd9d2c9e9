//! Command-line companion to `nmf-fr-core`: corpus file formats, result
//! serialization, the benchmark harness, and 2-D PCA projection.
//!
//! The core crate stays `no_std`; everything touching the filesystem, the
//! system clock, or threads lives here.

pub mod bench;
pub mod clock;
pub mod error;
pub mod io;
pub mod project;
pub mod report;
pub mod settings;

pub use error::{AppError, AppResult};
