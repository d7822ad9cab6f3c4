//! Minimal dense linear algebra and seeded randomness.

mod eigen;
mod matrix;
mod rng;

pub use eigen::{
    eigensolvers, eigh_symmetric, null_space_basis, orient_columns, Eigen, JacobiSolver,
    LanczosSolver, SymmetricEigensolver, DEFAULT_KERNEL_TOL,
};
pub use matrix::{dist, dist_sq, dot, norm, Matrix, Vector};
pub use rng::Rng;
