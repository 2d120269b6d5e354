//! Bit-packed linear algebra over F2: vectors, matrices, subspaces in
//! canonical reduced row-echelon form, affine (power) cosets, quotients,
//! kernels, and the pigeonhole zero-sum subset search.

mod coset;
mod matrix;
mod subspace;
mod vector;

pub use coset::{
    decode_triple, encode_triple, AffineCoset, AffinePowerCoset, DEFAULT_ENUM_BUDGET,
};
pub use matrix::{left_kernel_basis, subset_sum_zero, F2Matrix, Rref};
pub use subspace::{coset_reps, Subspace};
pub use vector::F2Vector;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum F2Error {
    /// No nonempty zero-sum subset exists among the allowed rows; the
    /// caller violated the pigeonhole precondition.
    #[error("no nonempty zero-sum subset within the first {limit} rows")]
    NoZeroSubset { limit: usize },
    #[error("the first space is not a subspace of the second")]
    NotSubspaceOf,
    #[error("enumeration needs {required} elements, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
}
