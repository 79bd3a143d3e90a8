//! Hermitian eigendecomposition, PSD square roots, and a fast PSD probe.
//!
//! The eigensolver is backed by nalgebra's Hermitian `symmetric_eigen`; this
//! module owns the tolerance policy and the descending-order contract.

use crate::error::{Error, Result};
use crate::numeric::matrix::{Complex64, ComplexMatrix};
use nalgebra::DMatrix;

/// Max |M - M^H| accepted before an eigendecomposition is attempted.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues in [-PSD_CLAMP, 0) are treated as zero by `psd_sqrt`; anything
/// below is a genuine negativity and is rejected.
pub const PSD_CLAMP: f64 = 1e-8;

pub struct Eigensystem {
    /// Descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered to match `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

fn to_dmatrix(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c))
}

/// Eigendecomposition of a Hermitian matrix.
pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_eigensystem",
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    let dev = m.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: HERMITICITY_TOL,
        });
    }
    let n = m.rows();
    // Symmetrize exactly so roundoff in the input cannot leak through.
    let herm = ComplexMatrix::from_fn(n, n, |r, c| {
        let avg = (m.get(r, c) + m.get(c, r).conj()) * Complex64::new(0.5, 0.0);
        if r == c {
            Complex64::new(avg.re, 0.0)
        } else {
            avg
        }
    });
    let se = to_dmatrix(&herm).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Eigensystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eigensystem(m)?;
    Ok(*eig.eigenvalues.last().expect("non-empty spectrum"))
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-PSD_CLAMP, 0)` are clamped to zero (roundoff from channel
/// composition); anything below `-PSD_CLAMP` is rejected.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigensystem(m)?;
    let min = *eig.eigenvalues.last().expect("non-empty spectrum");
    if min < -PSD_CLAMP {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let n = m.rows();
    let roots: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0))
        .collect();
    let v = &eig.eigenvectors;
    let scaled = ComplexMatrix::from_fn(n, n, |r, c| v.get(r, c) * roots[c]);
    Ok(&scaled * &v.dagger())
}

/// Cheap PSD test: returns true iff `m + shift·I` admits a Cholesky
/// factorization, i.e. the smallest eigenvalue of `m` is ≳ `-shift`.
///
/// O(n³/3) and no eigenvector work, so it is the validation path for large
/// density matrices. The probe assumes `m` is (numerically) Hermitian.
pub(crate) fn cholesky_psd_probe(m: &ComplexMatrix, shift: f64) -> std::result::Result<(), f64> {
    debug_assert!(m.is_square());
    let n = m.rows();
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d <= 0.0 {
            // Estimated negativity of the original matrix at this pivot.
            return Err(d - shift);
        }
        let root = d.sqrt();
        l[j * n + j] = Complex64::new(root, 0.0);
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = v / root;
        }
    }
    Ok(())
}
