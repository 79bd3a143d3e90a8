//! Dense complex matrices in row-major order, plus small vector helpers.
//!
//! This is the workhorse representation for every operator in the crate:
//! density matrices, unitaries, Kraus operators, and measurement projectors.
//! Dimensions stay small (total Hilbert-space dimension capped at 4096), so a
//! plain `Vec<Complex64>` with cache-friendly loops is all we need.

use crate::error::{Error, Result};
use num_complex::Complex;
use std::ops::{Add, Mul, Neg, Sub};

pub type Complex64 = Complex<f64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build a matrix from row-major entries, rejecting non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::new",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        for (pos, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: pos / cols.max(1),
                    col: pos % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C_ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = C_ONE;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let z = f(r, c);
                assert!(
                    z.re.is_finite() && z.im.is_finite(),
                    "non-finite entry at ({r},{c})"
                );
                data.push(z);
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    /// Real matrix entries promoted to complex, row-major.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise |M - M^H|; zero for exactly Hermitian matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol
    }

    /// Max entrywise |U^H U - I|.
    pub fn unitarity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let gram = &self.dagger() * self;
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let expect = if r == c { C_ONE } else { C_ZERO };
                dev = dev.max((gram.get(r, c) - expect).norm());
            }
        }
        dev
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![C_ZERO; rows * cols];
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.data[r1 * self.cols + c1];
                if a == C_ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    let dst_row = r1 * other.rows + r2;
                    let dst = dst_row * cols + c1 * other.cols;
                    let src = r2 * other.cols;
                    for c2 in 0..other.cols {
                        data[dst + c2] = a * other.data[src + c2];
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        let mut out = vec![C_ZERO; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    fn matmul_into(&self, other: &Self, out: &mut [Complex64]) {
        let (n, k, m) = (self.rows, self.cols, other.cols);
        // i-k-j loop order keeps the inner accumulation contiguous in `other`.
        let work = |rows: &mut [Complex64], row_offset: usize| {
            for (local, chunk) in rows.chunks_mut(m).enumerate() {
                let i = row_offset + local;
                for kk in 0..k {
                    let a = self.data[i * k + kk];
                    if a == C_ZERO {
                        continue;
                    }
                    let brow = &other.data[kk * m..(kk + 1) * m];
                    for (o, b) in chunk.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
            }
        };
        #[cfg(feature = "parallel")]
        {
            // Row-parallel above a size threshold; per-row outputs are
            // independent, so results match the sequential path bit-for-bit.
            if n * k * m >= 1 << 21 {
                use rayon::prelude::*;
                out.par_chunks_mut(64 * m)
                    .enumerate()
                    .for_each(|(blk, rows)| work(rows, blk * 64));
                return;
            }
        }
        work(out, 0);
    }

    /// Sequential matrix product, exposed for benchmark comparison against
    /// the (feature-gated) parallel path used by `Mul`.
    pub fn matmul_seq(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut data = vec![C_ZERO; self.rows * other.cols];
        let m = other.cols;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C_ZERO {
                    continue;
                }
                let brow = &other.data[k * m..(k + 1) * m];
                let orow = &mut data[i * m..(i + 1) * m];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self::from_parts(self.rows, other.cols, data)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut data = vec![C_ZERO; self.rows * rhs.cols];
        self.matmul_into(rhs, &mut data);
        ComplexMatrix::from_parts(self.rows, rhs.cols, data)
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Tr(A·B) without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    assert_eq!(a.cols(), b.rows());
    assert_eq!(b.cols(), a.rows());
    let mut acc = C_ZERO;
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            acc += a.get(r, c) * b.get(c, r);
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Pauli matrices (used by Bell settings and correlation-matrix code).
// ---------------------------------------------------------------------------

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_parts(2, 2, vec![C_ZERO, C_ONE, C_ONE, C_ZERO])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_parts(
        2,
        2,
        vec![
            C_ZERO,
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            C_ZERO,
        ],
    )
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_parts(
        2,
        2,
        vec![C_ONE, C_ZERO, C_ZERO, Complex64::new(-1.0, 0.0)],
    )
}

// ---------------------------------------------------------------------------
// Vector helpers. State vectors are plain `Vec<Complex64>`.
// ---------------------------------------------------------------------------

pub fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    assert!(index < dim);
    let mut v = vec![C_ZERO; dim];
    v[index] = C_ONE;
    v
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

/// Inner product ⟨a|b⟩ (conjugate-linear in the first argument).
pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Outer product |a⟩⟨b|.
pub fn vec_outer(a: &[Complex64], b: &[Complex64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(a.len(), b.len());
    for (r, &x) in a.iter().enumerate() {
        for (c, &y) in b.iter().enumerate() {
            m.set(r, c, x * y.conj());
        }
    }
    m
}

pub fn vec_tensor(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}
