//! Sparse linear covariance model (Sparse LCM) estimation.
//!
//! The estimator treats the half-vectorized sample covariance `vech(S)` as a
//! response in a generalized least-squares regression whose error covariance is
//! the Wishart covariance of `vech(S)`. An l1 penalty on the off-diagonal
//! entries gives sparsity, the diagonal is pinned to the sample variances, and
//! an eigenvalue floor keeps the estimate positive definite. The problem is
//! solved by ADMM ([`splcm`]) with the error precision built from a CLIME
//! estimate of the inverse covariance ([`clime`], [`wishart_error`]).
//!
//! Supporting modules cover BIC tuning ([`tuning`]), synthetic benchmarks
//! ([`simbench`]) and downstream uses ([`downstream`]).

pub mod clime;
pub mod densela;
pub mod downstream;
pub mod error;
pub mod par;
pub mod simbench;
pub mod splcm;
pub mod symvec;
pub mod tuning;
pub mod wishart_error;

pub use error::{Error, Result};
pub use par::Execution;
pub use symvec::{HalfVec, IndexPartition, SymMatrix};
