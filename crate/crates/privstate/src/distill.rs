//! Local key-distillation channels.
//!
//! Each party applies a two-outcome quantum channel that is diagonal in its
//! key index: branch V acts with a per-key operator Ṽ_k on the party's shield
//! factor, branch W with the complementary Kraus operator
//! W̃_k = (1 - Ṽ_k†Ṽ_k)^{1/2}. Applying all channels and discarding the
//! shield leaves the compressed key-part state; this module implements both
//! the full Kraus simulation and the closed-form coefficient formula, plus
//! the seeded product-vector search used to pick a channel that keeps a
//! chosen off-diagonal coefficient nonzero.

use crate::error::{Error, Result};
use crate::numeric::density::DensityMatrix;
use crate::numeric::eigen::{hermitian_eigensystem, psd_sqrt};
use crate::numeric::matrix::{
    trace_product, vec_inner, vec_norm, vec_normalize, vec_outer, vec_tensor, Complex64,
    ComplexMatrix, C_ONE, C_ZERO,
};
use crate::numeric::rng::{random_unit_vector, Seed};
use crate::numeric::tensor::{embed_operator, partial_trace_raw, total_dim, unflatten};
use crate::par::{map_collect, Parallelism};
use crate::private::{alpha_from_expanded, KeyPartState, PrivateStateSpec};

/// Kraus completeness tolerance: max |V†V + W†W - 1| per party.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Largest admissible singular value of a branch operator Ṽ.
pub const SINGULAR_VALUE_TOL: f64 = 1e-10;

/// Acceptance threshold of the product-vector search, relative to max |X|.
pub const WITNESS_THRESHOLD_REL: f64 = 1e-8;

const MIN_RESTARTS: usize = 8;
const MAX_RESTARTS: usize = 64;
const MAX_SWEEPS: usize = 100;

/// One party's branch operators, indexed by key value.
#[derive(Clone, Debug)]
struct PartyKraus {
    v: Vec<ComplexMatrix>,
    w: Vec<ComplexMatrix>,
}

/// A concrete choice of per-party, per-key branch operators Ṽ_k.
#[derive(Clone, Debug)]
pub struct LocalChannelChoice {
    parties: Vec<PartyKraus>,
}

impl LocalChannelChoice {
    /// Build from the Ṽ operators (`v_tilde[party][key]`), deriving each
    /// W̃ = (1 - Ṽ†Ṽ)^{1/2} and checking Kraus completeness.
    pub fn new(v_tilde: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if v_tilde.is_empty() {
            return Err(Error::InvalidSubsystems {
                reason: "channel choice needs at least one party".into(),
            });
        }
        let key_dim = v_tilde[0].len();
        let mut parties = Vec::with_capacity(v_tilde.len());
        for ops in &v_tilde {
            if ops.len() != key_dim || key_dim == 0 {
                return Err(Error::DimensionMismatch {
                    context: "channel choice: branch operators per party",
                    expected: key_dim.max(1),
                    actual: ops.len(),
                });
            }
            let side = ops[0].rows();
            let mut v = Vec::with_capacity(key_dim);
            let mut w = Vec::with_capacity(key_dim);
            for op in ops {
                if !op.is_square() || op.rows() != side {
                    return Err(Error::DimensionMismatch {
                        context: "channel choice: branch operator side",
                        expected: side,
                        actual: op.rows(),
                    });
                }
                let gram = &op.dagger() * op;
                let eig = hermitian_eigensystem(&gram)?;
                let top = eig.eigenvalues.first().copied().unwrap_or(0.0);
                if top > (1.0 + SINGULAR_VALUE_TOL) * (1.0 + SINGULAR_VALUE_TOL) {
                    return Err(Error::ToleranceViolation {
                        stage: "channel choice",
                        quantity: "largest singular value of a branch operator",
                        value: top.sqrt(),
                        tolerance: 1.0 + SINGULAR_VALUE_TOL,
                    });
                }
                let complement = &ComplexMatrix::identity(side) - &gram;
                let wk = psd_sqrt(&complement)?;
                let total = &gram + &(&wk.dagger() * &wk);
                let dev = (&total - &ComplexMatrix::identity(side)).max_abs();
                if dev > COMPLETENESS_TOL {
                    return Err(Error::ToleranceViolation {
                        stage: "channel choice",
                        quantity: "Kraus completeness deviation",
                        value: dev,
                        tolerance: COMPLETENESS_TOL,
                    });
                }
                v.push(op.clone());
                w.push(wk);
            }
            parties.push(PartyKraus { v, w });
        }
        Ok(Self { parties })
    }

    /// The do-nothing choice: every branch operator is the identity.
    pub fn identity(key_dim: usize, shield_dims: &[usize]) -> Self {
        let v_tilde = shield_dims
            .iter()
            .map(|&s| vec![ComplexMatrix::identity(s); key_dim])
            .collect();
        Self::new(v_tilde).expect("identity channels are complete")
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn key_dim(&self) -> usize {
        self.parties[0].v.len()
    }

    pub fn shield_dim(&self, party: usize) -> usize {
        self.parties[party].v[0].rows()
    }

    pub fn v_tilde(&self, party: usize, key: usize) -> &ComplexMatrix {
        &self.parties[party].v[key]
    }

    pub fn w_tilde(&self, party: usize, key: usize) -> &ComplexMatrix {
        &self.parties[party].w[key]
    }

    /// Full Kraus operator of one party's branch on its (key ⊗ shield) pair:
    /// Σ_k |k⟩⟨k| ⊗ M̃_k with M̃ the V or W family.
    fn party_kraus(&self, party: usize, branch_w: bool) -> ComplexMatrix {
        let d = self.key_dim();
        let s = self.shield_dim(party);
        let mut out = ComplexMatrix::zeros(d * s, d * s);
        for k in 0..d {
            let op = if branch_w {
                &self.parties[party].w[k]
            } else {
                &self.parties[party].v[k]
            };
            for r in 0..s {
                for c in 0..s {
                    out.set(k * s + r, k * s + c, op.get(r, c));
                }
            }
        }
        out
    }

    pub fn kraus_v(&self, party: usize) -> ComplexMatrix {
        self.party_kraus(party, false)
    }

    pub fn kraus_w(&self, party: usize) -> ComplexMatrix {
        self.party_kraus(party, true)
    }

    /// Ṽ_l†Ṽ_k + W̃_l†W̃_k for one party: the operator whose tensor product
    /// over parties is traced against U_k ρ U_l† in the closed form.
    pub fn effective_pair_operator(&self, party: usize, k: usize, l: usize) -> ComplexMatrix {
        let p = &self.parties[party];
        &(&p.v[l].dagger() * &p.v[k]) + &(&p.w[l].dagger() * &p.w[k])
    }
}

/// A normalized product vector over the per-party shield factors.
#[derive(Clone, Debug)]
pub struct ProductVector {
    factors: Vec<Vec<Complex64>>,
}

impl ProductVector {
    pub fn new(factors: Vec<Vec<Complex64>>) -> Result<Self> {
        for f in &factors {
            let norm = vec_norm(f);
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::ToleranceViolation {
                    stage: "ProductVector",
                    quantity: "factor norm deviation from 1",
                    value: (norm - 1.0).abs(),
                    tolerance: 1e-10,
                });
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn factor(&self, party: usize) -> &[Complex64] {
        &self.factors[party]
    }

    /// The full tensor-product vector.
    pub fn tensor(&self) -> Vec<Complex64> {
        let mut out = vec![C_ONE];
        for f in &self.factors {
            out = vec_tensor(&out, f);
        }
        out
    }
}

fn rayleigh(x: &ComplexMatrix, psi: &[Complex64]) -> Complex64 {
    vec_inner(psi, &x.mul_vec(psi))
}

/// M[a,b] = ⟨..ψ, a, ψ..| X |..ψ, b, ψ..⟩: the single-party matrix seen when
/// every factor except `party` is fixed.
fn effective_single_party_matrix(
    x: &ComplexMatrix,
    dims: &[usize],
    factors: &[Vec<Complex64>],
    party: usize,
) -> ComplexMatrix {
    let s = total_dim(dims);
    let sp = dims[party];
    // columns e_b: tensor product with basis vector b in the party slot
    let mut cols = vec![vec![C_ZERO; s]; sp];
    for flat in 0..s {
        let idx = unflatten(flat, dims);
        let mut amp = C_ONE;
        for (i, f) in factors.iter().enumerate() {
            if i != party {
                amp *= f[idx[i]];
            }
        }
        if amp != C_ZERO {
            cols[idx[party]][flat] = amp;
        }
    }
    let xe: Vec<Vec<Complex64>> = cols.iter().map(|e| x.mul_vec(e)).collect();
    ComplexMatrix::from_fn(sp, sp, |a, b| vec_inner(&cols[a], &xe[b]))
}

/// One alternating-ascent pass from a given starting point. Returns the
/// locally optimal factors, the witness value, and the |value| history (one
/// entry per accepted per-party update), which is non-decreasing.
fn ascend(
    x: &ComplexMatrix,
    dims: &[usize],
    mut factors: Vec<Vec<Complex64>>,
) -> Result<(Vec<Vec<Complex64>>, Complex64, Vec<f64>)> {
    let scale = x.max_abs();
    let mut value = rayleigh(x, &ProductVector { factors: factors.clone() }.tensor());
    let mut history = vec![value.norm()];
    let active: Vec<usize> = (0..dims.len()).filter(|&p| dims[p] > 1).collect();
    if active.is_empty() {
        return Ok((factors, value, history));
    }
    for _sweep in 0..MAX_SWEEPS {
        let mut improved = false;
        for &p in &active {
            let m = effective_single_party_matrix(x, dims, &factors, p);
            // Phase-align so the top eigenvector of the Hermitian part can
            // only increase |⟨ψ|X|ψ⟩|.
            let phase = if value.norm() > 0.0 {
                value / value.norm()
            } else {
                C_ONE
            };
            let aligned = &m.scale(phase.conj()) + &m.dagger().scale(phase);
            let h = aligned.scale(Complex64::new(0.5, 0.0));
            let eig = hermitian_eigensystem(&h)?;
            let mut candidate: Vec<Complex64> =
                (0..dims[p]).map(|r| eig.eigenvectors.get(r, 0)).collect();
            vec_normalize(&mut candidate);
            factors[p] = candidate;
            let new_value = rayleigh(x, &ProductVector { factors: factors.clone() }.tensor());
            // monotone by construction, up to roundoff
            debug_assert!(
                new_value.norm() >= value.norm() - 1e-12 * scale.max(1.0),
                "ascent regressed: {} -> {}",
                value.norm(),
                new_value.norm()
            );
            if new_value.norm() > value.norm() + 1e-12 * scale.max(1.0) {
                improved = true;
            }
            value = new_value;
            history.push(value.norm());
        }
        if !improved {
            break;
        }
    }
    Ok((factors, value, history))
}

#[cfg(test)]
pub(crate) fn ascend_history(
    x: &ComplexMatrix,
    dims: &[usize],
    factors: Vec<Vec<Complex64>>,
) -> Result<Vec<f64>> {
    ascend(x, dims, factors).map(|(_, _, h)| h)
}

/// Seeded search for a product vector with a nonzero expectation ⟨ψ|X|ψ⟩.
///
/// Random product starts followed by alternating per-party ascent: with all
/// factors but one fixed, the best remaining factor is the top eigenvector of
/// the phase-aligned Hermitian part of the effective single-party matrix.
/// Up to 64 restarts; the returned vector satisfies
/// |⟨ψ|X|ψ⟩| ≥ 1e-8 · max|X| or the search fails.
pub fn find_product_vector(
    x: &ComplexMatrix,
    shield_dims: &[usize],
    seed: Seed,
) -> Result<(ProductVector, Complex64)> {
    let s = total_dim(shield_dims);
    if !x.is_square() || x.rows() != s {
        return Err(Error::DimensionMismatch {
            context: "find_product_vector",
            expected: s,
            actual: x.rows(),
        });
    }
    let scale = x.max_abs();
    if scale <= 1e-12 {
        return Err(Error::ZeroMatrix { max_abs: scale });
    }
    let threshold = WITNESS_THRESHOLD_REL * scale;

    let mut best: Option<(Vec<Vec<Complex64>>, Complex64)> = None;
    let mut restarts_done = 0;
    for restart in 0..MAX_RESTARTS {
        let mut rng = seed.derive(restart as u64).rng();
        let start: Vec<Vec<Complex64>> = shield_dims
            .iter()
            .map(|&dim| {
                if dim == 1 {
                    vec![C_ONE]
                } else {
                    random_unit_vector(dim, &mut rng)
                }
            })
            .collect();
        let (factors, value, _) = ascend(x, shield_dims, start)?;
        restarts_done = restart + 1;
        let better = match &best {
            None => true,
            Some((_, b)) => value.norm() > b.norm(),
        };
        if better {
            best = Some((factors, value));
        }
        let best_norm = best.as_ref().map(|(_, v)| v.norm()).unwrap_or(0.0);
        if restarts_done >= MIN_RESTARTS && best_norm >= threshold {
            break;
        }
    }
    let (factors, value) = best.expect("at least one restart ran");
    if value.norm() < threshold {
        return Err(Error::SearchFailed {
            restarts: restarts_done,
            best: value.norm(),
            threshold,
        });
    }
    Ok((ProductVector::new(factors)?, value))
}

/// Channel choice that preserves the (k, l) coefficient witnessed by `psi`:
/// Ṽ_k = |ψ_i⟩⟨ψ_i| per party, Ṽ_l = 1, and Ṽ_j = 1 for every other key.
pub fn build_channel_choice(
    spec: &PrivateStateSpec,
    pair: (usize, usize),
    psi: &ProductVector,
) -> Result<LocalChannelChoice> {
    let (k, l) = pair;
    let d = spec.key_dim();
    if k >= l || l >= d {
        return Err(Error::InvalidSubsystems {
            reason: format!("pair ({k},{l}) is not ordered inside key dimension {d}"),
        });
    }
    if psi.factors().len() != spec.n_parties() {
        return Err(Error::DimensionMismatch {
            context: "build_channel_choice: product-vector parties",
            expected: spec.n_parties(),
            actual: psi.factors().len(),
        });
    }
    let mut v_tilde = Vec::with_capacity(spec.n_parties());
    for (party, &s) in spec.shield_dims().iter().enumerate() {
        if psi.factor(party).len() != s {
            return Err(Error::DimensionMismatch {
                context: "build_channel_choice: factor dimension",
                expected: s,
                actual: psi.factor(party).len(),
            });
        }
        let mut ops = vec![ComplexMatrix::identity(s); d];
        ops[k] = vec_outer(psi.factor(party), psi.factor(party));
        v_tilde.push(ops);
    }
    LocalChannelChoice::new(v_tilde)
}

/// Relaxed validity tolerances for channel outputs (roundoff accumulates over
/// the 2^N Kraus branches).
const CHANNEL_TRACE_TOL: f64 = 1e-9;
const CHANNEL_HERM_TOL: f64 = 1e-9;
const CHANNEL_PSD_TOL: f64 = 1e-8;

/// Full Kraus simulation: apply every party's channel to the private state,
/// trace out the shield, and read off the key-part coefficients.
pub fn apply_distillation_channels(
    gamma: &DensityMatrix,
    spec: &PrivateStateSpec,
    choice: &LocalChannelChoice,
) -> Result<KeyPartState> {
    let n = spec.n_parties();
    let d = spec.key_dim();
    let dims = spec.dims();
    if gamma.dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch {
            context: "apply_distillation_channels: state dims",
            expected: total_dim(&dims),
            actual: gamma.dim(),
        });
    }
    if choice.n_parties() != n || choice.key_dim() != d {
        return Err(Error::DimensionMismatch {
            context: "apply_distillation_channels: channel shape",
            expected: n,
            actual: choice.n_parties(),
        });
    }
    for party in 0..n {
        if choice.shield_dim(party) != spec.shield_dims()[party] {
            return Err(Error::DimensionMismatch {
                context: "apply_distillation_channels: shield dims",
                expected: spec.shield_dims()[party],
                actual: choice.shield_dim(party),
            });
        }
    }

    // Party i's Kraus operators act on factors (i, N+i) of the full space.
    let mut v_full = Vec::with_capacity(n);
    let mut w_full = Vec::with_capacity(n);
    for party in 0..n {
        let targets = [party, n + party];
        v_full.push(embed_operator(&choice.kraus_v(party), &dims, &targets)?);
        w_full.push(embed_operator(&choice.kraus_w(party), &dims, &targets)?);
    }

    // 2^N branches; matrices computed in parallel, summed in branch order.
    let branches: Vec<usize> = (0..1usize << n).collect();
    let terms = map_collect(branches, Parallelism::Rayon, |branch| {
        let mut kraus: Option<ComplexMatrix> = None;
        for party in 0..n {
            let op = if branch >> party & 1 == 1 {
                &w_full[party]
            } else {
                &v_full[party]
            };
            kraus = Some(match kraus {
                None => op.clone(),
                Some(acc) => op * &acc,
            });
        }
        let k = kraus.expect("n >= 2 parties");
        &(&k * gamma.matrix()) * &k.dagger()
    });
    let mut out = ComplexMatrix::zeros(gamma.dim(), gamma.dim());
    for term in terms {
        out = &out + &term;
    }

    let trace_dev = (out.trace() - C_ONE).norm();
    if trace_dev > CHANNEL_TRACE_TOL {
        return Err(Error::ToleranceViolation {
            stage: "channel application",
            quantity: "output trace deviation from 1",
            value: trace_dev,
            tolerance: CHANNEL_TRACE_TOL,
        });
    }
    let herm_dev = out.hermiticity_deviation();
    if herm_dev > CHANNEL_HERM_TOL {
        return Err(Error::ToleranceViolation {
            stage: "channel application",
            quantity: "output hermiticity deviation",
            value: herm_dev,
            tolerance: CHANNEL_HERM_TOL,
        });
    }
    if let Err(pivot) = crate::numeric::eigen::cholesky_psd_probe(&out, CHANNEL_PSD_TOL) {
        return Err(Error::ToleranceViolation {
            stage: "channel application",
            quantity: "output minimum-eigenvalue estimate",
            value: pivot,
            tolerance: CHANNEL_PSD_TOL,
        });
    }

    let keep: Vec<usize> = (0..n).collect();
    let (key_part, _) = partial_trace_raw(&out, &dims, &keep)?;

    // The channels are key-diagonal, so the reduced operator must vanish off
    // the (k..k),(l..l) pattern.
    let side = d.pow(n as u32);
    let reps: Vec<usize> = (0..d)
        .map(|v| crate::numeric::tensor::uniform_rep_index(v, n, d))
        .collect();
    let mut off_pattern: f64 = 0.0;
    for r in 0..side {
        for c in 0..side {
            if !reps.contains(&r) || !reps.contains(&c) {
                off_pattern = off_pattern.max(key_part.get(r, c).norm());
            }
        }
    }
    if off_pattern > 1e-10 {
        return Err(Error::ToleranceViolation {
            stage: "channel application",
            quantity: "off-pattern key-part residue",
            value: off_pattern,
            tolerance: 1e-10,
        });
    }

    let alpha = alpha_from_expanded(&key_part, d, n)?;
    KeyPartState::new(n, d, alpha)
}

/// Closed-form coefficients: α_{kl} = (1/d)·Tr[⊗_i (Ṽ_l†Ṽ_k + W̃_l†W̃_k) ·
/// U_k ρ U_l†].
pub fn compute_alpha_closed_form(
    spec: &PrivateStateSpec,
    choice: &LocalChannelChoice,
) -> Result<KeyPartState> {
    let d = spec.key_dim();
    let n = spec.n_parties();
    if choice.n_parties() != n || choice.key_dim() != d {
        return Err(Error::DimensionMismatch {
            context: "compute_alpha_closed_form: channel shape",
            expected: n,
            actual: choice.n_parties(),
        });
    }
    for party in 0..n {
        if choice.shield_dim(party) != spec.shield_dims()[party] {
            return Err(Error::DimensionMismatch {
                context: "compute_alpha_closed_form: shield dims",
                expected: spec.shield_dims()[party],
                actual: choice.shield_dim(party),
            });
        }
    }
    let inv_d = Complex64::new(1.0 / d as f64, 0.0);
    let mut alpha = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let mut effective = choice.effective_pair_operator(0, k, l);
            for party in 1..n {
                effective = effective.kron(&choice.effective_pair_operator(party, k, l));
            }
            let x = spec.twisted_shield_operator(k, l);
            alpha.set(k, l, inv_d * trace_product(&effective, &x));
        }
    }
    KeyPartState::new(n, d, alpha)
}

/// Outcome of a full distillation run on one private-state recipe.
#[derive(Clone, Debug)]
pub struct DistillationOutcome {
    pub pair: (usize, usize),
    pub product_vector: ProductVector,
    pub witness_value: Complex64,
    pub key_state: KeyPartState,
}

/// Scan all pairs k < l for the strongest product-vector witness, build the
/// corresponding channel choice, and return the distilled key-part state.
///
/// The scan order (and the tie-break toward lexicographically smaller pairs)
/// is fixed, so results are deterministic for a given seed regardless of the
/// parallel schedule.
pub fn distill_key_state(spec: &PrivateStateSpec, seed: Seed) -> Result<DistillationOutcome> {
    let d = spec.key_dim();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|k| ((k + 1)..d).map(move |l| (k, l)))
        .collect();
    let shield_dims = spec.shield_dims().to_vec();

    let candidates = map_collect(
        pairs.iter().copied().enumerate().collect(),
        Parallelism::Rayon,
        |(index, (k, l))| {
            let x = spec.twisted_shield_operator(k, l);
            match find_product_vector(&x, &shield_dims, seed.derive(index as u64)) {
                Ok((psi, value)) => Ok(Some(((k, l), psi, value))),
                // A pair without a usable witness is skipped, not fatal.
                Err(Error::SearchFailed { .. }) | Err(Error::ZeroMatrix { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        },
    );

    let mut best: Option<((usize, usize), ProductVector, Complex64)> = None;
    for cand in candidates {
        let Some(cand) = cand? else { continue };
        let better = match &best {
            None => true,
            Some((_, _, b)) => cand.2.norm() > b.norm(),
        };
        if better {
            best = Some(cand);
        }
    }
    let (pair, psi, witness) = best.ok_or(Error::DistillationFailed)?;

    let choice = build_channel_choice(spec, pair, &psi)?;
    let key_state = compute_alpha_closed_form(spec, &choice)?;
    let achieved = key_state.entry(pair.0, pair.1).norm();
    let promised = witness.norm() / d as f64 - 1e-10;
    if achieved < promised {
        return Err(Error::ToleranceViolation {
            stage: "distillation",
            quantity: "coefficient magnitude below witness/d",
            value: achieved,
            tolerance: promised,
        });
    }
    Ok(DistillationOutcome {
        pair,
        product_vector: psi,
        witness_value: witness,
        key_state,
    })
}
