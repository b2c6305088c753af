//! Censored random walks on monotone subsets of the Boolean hypercube.

pub mod bridge;
pub mod correlation;
pub mod cube;
pub mod digraph;
pub mod error;
pub mod fkg;
pub mod flow;
pub mod linalg;
pub mod mset;
pub mod projection;
pub mod report;
pub mod suite;
pub mod walk;

pub use error::{Error, Result};
