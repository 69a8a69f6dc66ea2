//! Sparse and dense linear-algebra kernels shared by the rest of the crate.

mod cholesky;
mod lowrank;
mod norm;
mod sparse;

pub use cholesky::{spd_factorize, spd_factorize_with, SpdFactorization, SpdOptions, DEFAULT_DIRECT_LIMIT};
pub use lowrank::{compress, LowRankSymmetric};
pub use norm::{functional_norm, power_iteration_m_norm, weighted_operator_norm, Operand, POWER_ITERATION_CAP};
pub use sparse::SparseMatrix;
