//! Exact integer and dyadic-rational matrix kernel.
//!
//! Everything here is arbitrary precision; there is no floating point.

mod dyadic;
pub mod f2;
pub mod hnf;
mod matrix;
mod snf;

pub use dyadic::{invert_dyadic, is_power_of_two, log2_exact, DyadicMatrix};
pub use f2::{kernel_mod2, F2Matrix, F2Vec};
pub use hnf::{hnf, hnf_basis, left_kernel};
pub use matrix::IntMatrix;
pub use snf::snf;

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("inverse is not dyadic: |det| = {det} is not a power of two")]
    NonDyadicInverse { det: BigInt },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}
