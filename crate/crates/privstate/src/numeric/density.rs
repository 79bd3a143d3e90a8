//! Density matrices: Hermitian, unit-trace, positive semidefinite operators
//! together with the tensor-factor dimensions they live on.

use crate::error::{Error, Result};
use crate::numeric::eigen::{cholesky_psd_probe, min_hermitian_eigenvalue};
use crate::numeric::matrix::{Complex64, ComplexMatrix};
use crate::numeric::tensor::{partial_trace_raw, partial_transpose_raw, total_dim};

/// Hard cap on the total Hilbert-space dimension this crate materializes.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Validation tolerances for state invariants.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

/// Check the three state invariants with explicit tolerances. Positivity uses
/// a shifted Cholesky probe (O(n³/3)) rather than a full eigensolve.
pub(crate) fn validate_state(
    matrix: &ComplexMatrix,
    herm_tol: f64,
    trace_tol: f64,
    psd_tol: f64,
) -> Result<()> {
    let dev = matrix.hermiticity_deviation();
    if dev > herm_tol {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: herm_tol,
        });
    }
    let tr = matrix.trace();
    let tdev = (tr - Complex64::new(1.0, 0.0)).norm();
    if tdev > trace_tol {
        return Err(Error::TraceNotOne {
            deviation: tdev,
            tolerance: trace_tol,
        });
    }
    if let Err(pivot_estimate) = cholesky_psd_probe(matrix, psd_tol) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: pivot_estimate,
        });
    }
    Ok(())
}

impl DensityMatrix {
    /// Validate and wrap a matrix as a density matrix over the given factor
    /// dimensions.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix::new",
                expected: matrix.rows(),
                actual: matrix.cols(),
            });
        }
        let n = total_dim(&dims);
        if n != matrix.rows() || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix::new dims",
                expected: matrix.rows(),
                actual: n,
            });
        }
        if n > MAX_TOTAL_DIM {
            return Err(Error::DimensionOverflow {
                dim: n,
                max: MAX_TOTAL_DIM,
            });
        }
        validate_state(&matrix, HERMITICITY_TOL, TRACE_TOL, PSD_TOL)?;
        Ok(Self { matrix, dims })
    }

    /// Wrap without validation. Callers must have established the invariants
    /// another way (e.g. channel-output checks with their own tolerances).
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(total_dim(&dims), matrix.rows());
        Self { matrix, dims }
    }

    /// Pure state |ψ⟩⟨ψ| from an (unnormalized) state vector.
    pub fn from_pure(state: &[Complex64], dims: Vec<usize>) -> Result<Self> {
        use crate::numeric::matrix::{vec_norm, vec_outer};
        let norm = vec_norm(state);
        if norm < 1e-150 {
            return Err(Error::ZeroMatrix { max_abs: norm });
        }
        let normalized: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Self::new(vec_outer(&normalized, &normalized), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims);
        let m = &ComplexMatrix::identity(n) * (1.0 / n as f64);
        Self::from_parts_unchecked(m, dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Reinterpret the same operator over a different factorization of the
    /// same total dimension.
    pub fn regroup(self, dims: Vec<usize>) -> Result<Self> {
        if total_dim(&dims) != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix::regroup",
                expected: self.dim(),
                actual: total_dim(&dims),
            });
        }
        Ok(Self {
            matrix: self.matrix,
            dims,
        })
    }

    /// Reduced state over the kept subsystems (strictly ascending indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (reduced, kept_dims) = partial_trace_raw(&self.matrix, &self.dims, keep)?;
        // Trace is preserved exactly; hermiticity/PSD follow from the input,
        // so re-running the full validator here would only cost time.
        Ok(DensityMatrix::from_parts_unchecked(reduced, kept_dims))
    }

    /// Transpose the listed subsystems. The result is Hermitian but not
    /// necessarily positive, so a bare matrix is returned.
    pub fn partial_transpose(&self, transpose: &[usize]) -> Result<ComplexMatrix> {
        partial_transpose_raw(&self.matrix, &self.dims, transpose)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_hermitian_eigenvalue(&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::matrix::{basis_vector, vec_tensor, C_ONE};
    use crate::numeric::rng::{random_density_matrix, Seed};

    #[test]
    fn product_state_partial_trace_factorizes() {
        let a = random_density_matrix(2, Seed(1));
        let b = random_density_matrix(3, Seed(2));
        let joint = DensityMatrix::new(a.matrix().kron(b.matrix()), vec![2, 3]).unwrap();
        let ra = joint.partial_trace(&[0]).unwrap();
        let rb = joint.partial_trace(&[1]).unwrap();
        assert!((ra.matrix() - a.matrix()).max_abs() < 1e-12);
        assert!((rb.matrix() - b.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let rho = random_density_matrix(8, Seed(3)).regroup(vec![2, 2, 2]).unwrap();
        for keep in [vec![0], vec![1], vec![0, 2], vec![0, 1, 2]] {
            let reduced = rho.partial_trace(&keep).unwrap();
            assert!((reduced.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_unit_trace() {
        let m = &ComplexMatrix::identity(2) * 0.7;
        assert!(matches!(
            DensityMatrix::new(m, vec![2]),
            Err(Error::TraceNotOne { .. })
        ));
    }

    #[test]
    fn rejects_negative_state() {
        let m = ComplexMatrix::from_diagonal(&[
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.5, 0.0),
        ]);
        assert!(matches!(
            DensityMatrix::new(m, vec![2]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn rejects_dimension_overflow() {
        let m = ComplexMatrix::identity(8192);
        assert!(matches!(
            DensityMatrix::new(m, vec![8192]),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn pure_state_constructor_normalizes() {
        let v = vec_tensor(&basis_vector(2, 0), &basis_vector(2, 0));
        let doubled: Vec<Complex64> = v.iter().map(|z| z * 2.0).collect();
        let rho = DensityMatrix::from_pure(&doubled, vec![2, 2]).unwrap();
        assert!((rho.matrix().get(0, 0) - C_ONE).norm() < 1e-12);
    }
}
