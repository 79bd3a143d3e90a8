//! Dense complex linear algebra at small dimensions plus seeded randomness.
//!
//! Everything else in the crate is built on these pieces: row-major complex
//! matrices, tensor-factor bookkeeping (partial trace / transpose / operator
//! embedding), a Hermitian eigensolver, and reproducible Haar sampling.

pub mod density;
pub mod eigen;
pub mod matrix;
pub mod rng;
pub mod tensor;

pub use density::{DensityMatrix, MAX_TOTAL_DIM};
pub use eigen::{hermitian_eigensystem, min_hermitian_eigenvalue, psd_sqrt, Eigensystem};
pub use matrix::{
    basis_vector, sigma_x, sigma_y, sigma_z, trace_product, vec_inner, vec_norm, vec_normalize,
    vec_outer, vec_tensor, Complex64, ComplexMatrix, C_ONE, C_ZERO,
};
pub use rng::{
    random_density_matrix, random_unitary, splitmix64, Seed, TRIAL_SEED_DERIVATION,
};
pub use tensor::{embed_operator, partial_trace_raw, partial_transpose_raw};
