//! Private states: construction from a twisting recipe, key-measurement
//! statistics, and the compressed key-part representation.
//!
//! A private state on N parties is assembled from a key dimension `d`, one
//! shield factor per party, a set of `d` twisting unitaries acting on the
//! whole shield, and a shield state. The tensor layout places all key factors
//! first (one qudit per party) followed by all shield factors, so tracing the
//! shield away is a single contiguous partial trace.

use crate::error::{Error, Result};
use crate::numeric::density::{DensityMatrix, MAX_TOTAL_DIM};
use crate::numeric::eigen::hermitian_eigensystem;
use crate::numeric::matrix::{Complex64, ComplexMatrix};
use crate::numeric::tensor::{total_dim, uniform_rep_index};

/// Unitarity tolerance for the twisting operators.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Tolerances on the compressed key-part coefficients.
pub const ALPHA_HERMITICITY_TOL: f64 = 1e-10;
pub const ALPHA_DIAGONAL_TOL: f64 = 1e-10;

/// Recipe for a private state.
#[derive(Clone, Debug)]
pub struct PrivateStateSpec {
    key_dim: usize,
    n_parties: usize,
    shield_dims: Vec<usize>,
    twist_unitaries: Vec<ComplexMatrix>,
    shield_state: DensityMatrix,
}

impl PrivateStateSpec {
    pub fn new(
        key_dim: usize,
        n_parties: usize,
        shield_dims: Vec<usize>,
        twist_unitaries: Vec<ComplexMatrix>,
        shield_state: DensityMatrix,
    ) -> Result<Self> {
        if key_dim < 2 {
            return Err(Error::DimensionMismatch {
                context: "PrivateStateSpec key_dim (must be >= 2)",
                expected: 2,
                actual: key_dim,
            });
        }
        if n_parties < 2 {
            return Err(Error::DimensionMismatch {
                context: "PrivateStateSpec n_parties (must be >= 2)",
                expected: 2,
                actual: n_parties,
            });
        }
        if shield_dims.len() != n_parties || shield_dims.iter().any(|&s| s == 0) {
            return Err(Error::InvalidSubsystems {
                reason: format!(
                    "expected {} nonzero shield dimensions, got {:?}",
                    n_parties, shield_dims
                ),
            });
        }
        let shield_total = total_dim(&shield_dims);
        if twist_unitaries.len() != key_dim {
            return Err(Error::DimensionMismatch {
                context: "PrivateStateSpec twist unitaries",
                expected: key_dim,
                actual: twist_unitaries.len(),
            });
        }
        for u in &twist_unitaries {
            if !u.is_square() || u.rows() != shield_total {
                return Err(Error::DimensionMismatch {
                    context: "twist unitary side",
                    expected: shield_total,
                    actual: u.rows(),
                });
            }
            let dev = u.unitarity_deviation();
            if dev > UNITARITY_TOL {
                return Err(Error::NotUnitary {
                    deviation: dev,
                    tolerance: UNITARITY_TOL,
                });
            }
        }
        if shield_state.dim() != shield_total {
            return Err(Error::DimensionMismatch {
                context: "shield state side",
                expected: shield_total,
                actual: shield_state.dim(),
            });
        }
        let spec = Self {
            key_dim,
            n_parties,
            shield_dims,
            twist_unitaries,
            shield_state,
        };
        let total = spec.total_dim()?;
        if total > MAX_TOTAL_DIM {
            return Err(Error::DimensionOverflow {
                dim: total,
                max: MAX_TOTAL_DIM,
            });
        }
        Ok(spec)
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn shield_dims(&self) -> &[usize] {
        &self.shield_dims
    }

    pub fn shield_dim(&self) -> usize {
        total_dim(&self.shield_dims)
    }

    pub fn twist_unitaries(&self) -> &[ComplexMatrix] {
        &self.twist_unitaries
    }

    pub fn twist_unitary(&self, i: usize) -> &ComplexMatrix {
        &self.twist_unitaries[i]
    }

    pub fn shield_state(&self) -> &DensityMatrix {
        &self.shield_state
    }

    /// Factor list of the constructed state: N key qudits then the shields.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.key_dim; self.n_parties];
        dims.extend_from_slice(&self.shield_dims);
        dims
    }

    /// Total Hilbert-space dimension d^N · (shield product), with overflow
    /// checking.
    pub fn total_dim(&self) -> Result<usize> {
        let mut total: u128 = 1;
        for &d in self.dims().iter() {
            total = total.checked_mul(d as u128).ok_or(Error::DimensionOverflow {
                dim: usize::MAX,
                max: MAX_TOTAL_DIM,
            })?;
            if total > MAX_TOTAL_DIM as u128 {
                return Err(Error::DimensionOverflow {
                    dim: total.min(usize::MAX as u128) as usize,
                    max: MAX_TOTAL_DIM,
                });
            }
        }
        Ok(total as usize)
    }

    /// X_{kl} = U_k ρ U_l†, the shield-space operator whose product-vector
    /// expectation witnesses the (k, l) coefficient.
    pub fn twisted_shield_operator(&self, k: usize, l: usize) -> ComplexMatrix {
        let uk = &self.twist_unitaries[k];
        let ul = &self.twist_unitaries[l];
        &(uk * self.shield_state.matrix()) * &ul.dagger()
    }
}

/// Assemble the private state for a recipe.
///
/// The result is (1/d) Σ_{i,j} (|i⟩⟨j|)^{⊗N} ⊗ U_i ρ U_j† laid out key
/// factors first, validated against the density-matrix invariants.
pub fn construct_private_state(spec: &PrivateStateSpec) -> Result<DensityMatrix> {
    let d = spec.key_dim;
    let n = spec.n_parties;
    let s = spec.shield_dim();
    let total = spec.total_dim()?;
    let inv_d = Complex64::new(1.0 / d as f64, 0.0);

    let mut matrix = ComplexMatrix::zeros(total, total);
    for i in 0..d {
        let row_base = uniform_rep_index(i, n, d) * s;
        for j in 0..d {
            let col_base = uniform_rep_index(j, n, d) * s;
            let block = spec.twisted_shield_operator(i, j);
            for r in 0..s {
                for c in 0..s {
                    matrix.set(row_base + r, col_base + c, inv_d * block.get(r, c));
                }
            }
        }
    }
    DensityMatrix::new(matrix, spec.dims())
}

/// Probabilities of computational-basis key outcomes.
///
/// Entry `K` of the returned table (flattened row-major over the N key
/// indices) is Tr[(|k₁..k_N⟩⟨k₁..k_N| ⊗ 1_shield) ρ].
pub fn key_measurement_distribution(
    state: &DensityMatrix,
    key_dim: usize,
    n_parties: usize,
) -> Result<Vec<f64>> {
    let dims = state.dims();
    if dims.len() < n_parties || dims[..n_parties].iter().any(|&d| d != key_dim) {
        return Err(Error::DimensionMismatch {
            context: "key_measurement_distribution: leading factors",
            expected: key_dim,
            actual: *dims.first().unwrap_or(&0),
        });
    }
    let key_total = key_dim.pow(n_parties as u32);
    let shield_total = total_dim(&dims[n_parties..]);
    let m = state.matrix();
    let mut probs = vec![0.0f64; key_total];
    for (key_index, p) in probs.iter_mut().enumerate() {
        let base = key_index * shield_total;
        *p = (0..shield_total).map(|t| m.get(base + t, base + t).re).sum();
    }
    Ok(probs)
}

/// Max deviation of a key-outcome table from the perfectly-correlated
/// uniform distribution (P(k,...,k) = 1/d, zero elsewhere).
pub fn key_distribution_deviation(probs: &[f64], key_dim: usize, n_parties: usize) -> f64 {
    if probs.len() != key_dim.pow(n_parties as u32) {
        return f64::INFINITY;
    }
    let correlated: Vec<usize> = (0..key_dim)
        .map(|k| uniform_rep_index(k, n_parties, key_dim))
        .collect();
    let target = 1.0 / key_dim as f64;
    probs
        .iter()
        .enumerate()
        .map(|(idx, &p)| {
            if correlated.contains(&idx) {
                (p - target).abs()
            } else {
                p.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// True iff the table is the perfectly-correlated uniform distribution
/// within `tol`.
pub fn key_distribution_is_uniform_correlated(
    probs: &[f64],
    key_dim: usize,
    n_parties: usize,
    tol: f64,
) -> bool {
    key_distribution_deviation(probs, key_dim, n_parties) <= tol
}

/// Compressed key-part state: the d×d coefficient matrix over N parties.
///
/// Entry (k, l) multiplies (|k⟩⟨l|)^{⊗N} in the expanded operator, so the
/// expansion's spectrum is the coefficient matrix's spectrum padded with
/// zeros.
#[derive(Clone, Debug)]
pub struct KeyPartState {
    n_parties: usize,
    key_dim: usize,
    alpha: ComplexMatrix,
}

impl KeyPartState {
    pub fn new(n_parties: usize, key_dim: usize, alpha: ComplexMatrix) -> Result<Self> {
        if n_parties == 0 {
            return Err(Error::DimensionMismatch {
                context: "KeyPartState n_parties",
                expected: 1,
                actual: 0,
            });
        }
        if !alpha.is_square() || alpha.rows() != key_dim {
            return Err(Error::DimensionMismatch {
                context: "KeyPartState coefficient matrix",
                expected: key_dim,
                actual: alpha.rows(),
            });
        }
        let dev = alpha.hermiticity_deviation();
        if dev > ALPHA_HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation: dev,
                tolerance: ALPHA_HERMITICITY_TOL,
            });
        }
        let target = 1.0 / key_dim as f64;
        for k in 0..key_dim {
            let diag = alpha.get(k, k);
            let dev = (diag - Complex64::new(target, 0.0)).norm();
            if dev > ALPHA_DIAGONAL_TOL {
                return Err(Error::ToleranceViolation {
                    stage: "KeyPartState",
                    quantity: "diagonal coefficient deviation from 1/d",
                    value: dev,
                    tolerance: ALPHA_DIAGONAL_TOL,
                });
            }
        }
        Ok(Self {
            n_parties,
            key_dim,
            alpha,
        })
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn alpha(&self) -> &ComplexMatrix {
        &self.alpha
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.alpha.get(k, l)
    }

    /// On-demand positivity check of the expanded operator, done on the
    /// coefficient matrix (its spectrum is the expansion's minus zeros).
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let eig = hermitian_eigensystem(&self.alpha)?;
        Ok(*eig.eigenvalues.last().expect("non-empty spectrum") >= -tol)
    }

    /// Materialize Σ_{k,l} α_{kl} (|k⟩⟨l|)^{⊗N} as an explicit state.
    pub fn expand(&self) -> Result<DensityMatrix> {
        let mut side: u128 = 1;
        for _ in 0..self.n_parties {
            side = side.checked_mul(self.key_dim as u128).ok_or(Error::DimensionOverflow {
                dim: usize::MAX,
                max: MAX_TOTAL_DIM,
            })?;
            if side > MAX_TOTAL_DIM as u128 {
                return Err(Error::DimensionOverflow {
                    dim: side as usize,
                    max: MAX_TOTAL_DIM,
                });
            }
        }
        let side = side as usize;
        if !self.is_psd(1e-9)? {
            let min = hermitian_eigensystem(&self.alpha)?
                .eigenvalues
                .last()
                .copied()
                .unwrap_or(f64::NAN);
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        let mut m = ComplexMatrix::zeros(side, side);
        for k in 0..self.key_dim {
            let r = uniform_rep_index(k, self.n_parties, self.key_dim);
            for l in 0..self.key_dim {
                let c = uniform_rep_index(l, self.n_parties, self.key_dim);
                m.set(r, c, self.alpha.get(k, l));
            }
        }
        Ok(DensityMatrix::from_parts_unchecked(
            m,
            vec![self.key_dim; self.n_parties],
        ))
    }
}

/// Read the coefficient matrix back off an expanded key-part operator.
pub fn alpha_from_expanded(
    m: &ComplexMatrix,
    key_dim: usize,
    n_parties: usize,
) -> Result<ComplexMatrix> {
    let side = key_dim.pow(n_parties as u32);
    if !m.is_square() || m.rows() != side {
        return Err(Error::DimensionMismatch {
            context: "alpha_from_expanded",
            expected: side,
            actual: m.rows(),
        });
    }
    let mut alpha = ComplexMatrix::zeros(key_dim, key_dim);
    for k in 0..key_dim {
        let r = uniform_rep_index(k, n_parties, key_dim);
        for l in 0..key_dim {
            let c = uniform_rep_index(l, n_parties, key_dim);
            alpha.set(k, l, m.get(r, c));
        }
    }
    Ok(alpha)
}

/// Deterministic regression anchors plus seeded ensemble coverage.
pub mod fixtures {
    use super::*;
    use crate::numeric::rng::{random_density_matrix, random_unitary, Seed};

    fn trivial_shield(n_parties: usize) -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::identity(1), vec![1; n_parties])
            .expect("scalar shield state")
    }

    fn scalar_unitaries(count: usize) -> Vec<ComplexMatrix> {
        (0..count).map(|_| ComplexMatrix::identity(1)).collect()
    }

    /// Two parties, one key bit, trivial shield: the Bell state recipe.
    pub fn bell() -> PrivateStateSpec {
        PrivateStateSpec::new(2, 2, vec![1; 2], scalar_unitaries(2), trivial_shield(2))
            .expect("bell fixture")
    }

    /// N parties, one key bit each, trivial shield: the GHZ recipe.
    pub fn ghz(n_parties: usize) -> PrivateStateSpec {
        PrivateStateSpec::new(
            2,
            n_parties,
            vec![1; n_parties],
            scalar_unitaries(2),
            trivial_shield(n_parties),
        )
        .expect("ghz fixture")
    }

    /// Trivial-shield qudit generalization of the GHZ recipe.
    pub fn ghz_qudit(key_dim: usize, n_parties: usize) -> PrivateStateSpec {
        PrivateStateSpec::new(
            key_dim,
            n_parties,
            vec![1; n_parties],
            scalar_unitaries(key_dim),
            trivial_shield(n_parties),
        )
        .expect("qudit ghz fixture")
    }

    /// Two parties with a qubit shield each; the second twisting unitary
    /// swaps the shields. The shield starts in |00⟩.
    pub fn swap_shield() -> PrivateStateSpec {
        let mut swap = ComplexMatrix::zeros(4, 4);
        swap.set(0, 0, crate::numeric::matrix::C_ONE);
        swap.set(1, 2, crate::numeric::matrix::C_ONE);
        swap.set(2, 1, crate::numeric::matrix::C_ONE);
        swap.set(3, 3, crate::numeric::matrix::C_ONE);
        let shield = DensityMatrix::from_pure(
            &crate::numeric::matrix::basis_vector(4, 0),
            vec![2, 2],
        )
        .expect("shield |00>");
        PrivateStateSpec::new(
            2,
            2,
            vec![2, 2],
            vec![ComplexMatrix::identity(4), swap],
            shield,
        )
        .expect("swap-shield fixture")
    }

    /// Seeded random recipe: Haar twisting unitaries and a Gaussian shield
    /// state, `shield_dim_per_party` dimensions per party.
    pub fn random(
        key_dim: usize,
        n_parties: usize,
        shield_dim_per_party: usize,
        seed: Seed,
    ) -> Result<PrivateStateSpec> {
        let shield_dims = vec![shield_dim_per_party; n_parties];
        let shield_total = total_dim(&shield_dims);
        let unitaries: Vec<ComplexMatrix> = (0..key_dim)
            .map(|i| random_unitary(shield_total, seed.derive(0x5EED_0000 + i as u64)))
            .collect();
        let shield_state = random_density_matrix(shield_total, seed.derive(0x5EED_FFFF))
            .regroup(shield_dims.clone())?;
        PrivateStateSpec::new(key_dim, n_parties, shield_dims, unitaries, shield_state)
    }

    /// Names of the fixtures exercised by the command-line `fixtures` mode.
    pub const NAMED: [&str; 3] = ["bell", "ghz3", "swap-shield"];

    pub fn by_name(name: &str) -> Option<PrivateStateSpec> {
        match name {
            "bell" => Some(bell()),
            "ghz3" => Some(ghz(3)),
            "swap-shield" => Some(swap_shield()),
            _ => None,
        }
    }
}
