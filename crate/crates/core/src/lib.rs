//! Approximate polytope membership via quadtree space decomposition, with the
//! classical baselines, preconditioning, and a lifted approximate nearest
//! neighbor index built on top.

pub mod ann;
pub mod approx;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod precondition;
pub mod splitreduce;
pub mod workloads;

pub use error::{Error, Result};
