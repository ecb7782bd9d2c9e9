//! Deterministic text-clustering core: TF-IDF weighting, NNDSVD-initialized
//! coordinate-descent NMF, argmax term grouping with L2 feature
//! agglomeration, optional LSA, and spherical K-Means seeded from an
//! r-nearest-neighbors graph.
//!
//! Every stage is deterministic by construction (no random starts, fixed
//! update and reduction orders), so repeated runs on the same corpus give
//! bitwise-identical clusterings. The only randomness in the crate lives in
//! the explicitly seeded baseline pipelines used for benchmarking.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `nmf-fr` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agglomeration;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod factorization;
pub mod linalg;
pub mod matrix;
pub mod pipeline;
pub mod weighting;

pub use error::{Error, Result, StageError};
