//! Finite-blocklength bounds for binary quantum hypothesis testing.
//!
//! The crate evaluates concentration-based bounds on the optimal type-II
//! error of testing `rho` against `sigma`, both for independent copies and
//! for correlated families whose `n`-site marginals factorize up to a
//! constant. An exact Neyman-Pearson oracle for small dimensions serves as
//! the ground truth the bounds are checked against.
//!
//! Everything here is pure arithmetic on dense complex matrices and works
//! without `std` (an allocator is required).

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]
// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod bounds_corr;
pub mod bounds_iid;
pub mod concentration;
pub mod cq_channel;
pub mod divergences;
pub mod fcs_gibbs;
pub mod modular;
pub mod normal;
pub mod np_oracle;
pub mod numerics;
pub mod states;

pub use error::{Error, ErrorKind, Result};
pub use numerics::{CMatrix, Eigen, HermitianMatrix};
pub use states::DensityMatrix;

/// Largest Hilbert-space dimension any routine will materialize.
pub const MAX_DIM: usize = 4096;
