//! Randomized subspace iteration for the dominant eigenvalues of large
//! sparse matrices.
//!
//! The iteration repeatedly multiplies a block of sparse iterate columns by
//! the target matrix, stochastically compressing each column to a fixed
//! nonzero budget first. Eigenvalues are extracted by projecting against a
//! fixed trial subspace and averaging the small projected matrices along the
//! trajectory before solving, which keeps the nonlinear eigensolve away from
//! the high-variance iterates.
//!
//! Modules:
//! - [`sparse`]: sparse vector/matrix types and exact kernels
//! - [`compress`]: stochastic pivotal compression of single vectors/blocks
//! - [`sharded`]: multi-shard compression pipeline (budget apportionment)
//! - [`engine`]: the trajectory iteration and its accumulator
//! - [`estimate`]: eigenvalue extraction and autocorrelation-aware errors
//! - [`baseline`]: quadratic Rayleigh-Ritz reference iteration
//! - [`oracle`]: brute-force references (feature `oracle`, on by default)
//! - [`mm`]: Matrix Market I/O
//! - [`log`]: binary trajectory log

pub mod compress;
pub mod engine;
pub mod error;
pub mod estimate;
mod linalg;
pub mod mm;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod rng;
pub mod sharded;
pub mod sparse;

pub use error::{Error, Result};
