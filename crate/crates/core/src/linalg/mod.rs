//! Exact integer linear algebra: Smith normal form, kernels, cokernels and
//! lattice indices over arbitrary-precision integers.

mod group;
mod matrix;
mod quotient;
mod rational;
mod smith;

pub use group::FiniteAbelianGroup;
pub use matrix::IntMatrix;
pub use quotient::FiniteQuotient;
pub use rational::RatMatrix;
pub use smith::{
    cokernel, express_in_basis, image_basis, kernel_basis, preimage_lattice, quotient_index, rank, smith_normal_form,
    AbelianGroup, Smith,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sublattice is not contained in the ambient lattice")]
    Containment,
    #[error("columns are not linearly independent")]
    NotABasis,
    #[error("matrix is singular")]
    Singular,
    #[error("quotient is infinite (free rank {0})")]
    Infinite(usize),
    #[error("invalid finite abelian group: {0}")]
    InvalidGroup(String),
    #[error("group of order {0} is too large to enumerate")]
    TooLarge(String),
}
