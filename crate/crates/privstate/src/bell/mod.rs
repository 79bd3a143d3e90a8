//! Bell tests for distilled key states: CH evaluation, optimal settings,
//! multipartite reduction by local projection, the partial-transpose
//! diagnostic, and the end-to-end nonlocality pipeline.

pub mod inequality;
pub mod scenario;
pub mod settings;

pub use inequality::{
    ch_facet_max, ch_functional, ch_value, ch_value_relabeled, chsh_from_ch, tsirelson_ch,
    CHResult, Relabeling, CH_VIOLATION_EPS,
};
pub use scenario::{
    born_probabilities, BellScenario, CorrelationTable, MeasurementSetting, TableShape,
};
pub use settings::{
    correlation_matrix, embed_qudit_settings, horodecki_m, optimal_x_state_settings,
    refine_settings, SettingsDescription, SettingsPlan,
};

use crate::distill::distill_key_state;
use crate::error::{Error, Result};
use crate::numeric::density::DensityMatrix;
use crate::numeric::eigen::min_hermitian_eigenvalue;
use crate::numeric::matrix::Complex64;
use crate::numeric::rng::Seed;
use crate::polytope::{check_membership_with, LocalityVerdict, MembershipOptions};
use crate::private::{
    construct_private_state, key_measurement_distribution, KeyPartState, PrivateStateSpec,
};
use std::time::{Duration, Instant};

/// Project `parties_to_project` parties of a key-part state onto the uniform
/// superposition (|0⟩ + ... + |d-1⟩)/√d.
///
/// The surviving parties keep the same coefficient matrix; the success
/// probability is (1/d)^(projected parties).
pub fn project_onto_plus(
    key: &KeyPartState,
    parties_to_project: usize,
) -> Result<(KeyPartState, f64)> {
    let n = key.n_parties();
    if parties_to_project >= n {
        return Err(Error::ProjectionDepth {
            requested: parties_to_project,
            parties: n,
        });
    }
    let remaining = n - parties_to_project;
    let probability = (1.0 / key.key_dim() as f64).powi(parties_to_project as i32);
    let projected = KeyPartState::new(remaining, key.key_dim(), key.alpha().clone())?;
    Ok((projected, probability))
}

/// Minimum eigenvalue of the partial transpose over the given subsystems.
/// Negative values witness entanglement (NPT); for key-part states the
/// spectrum dips to -max |α_kl| off the diagonal.
pub fn partial_transpose_min_eigenvalue(
    state: &DensityMatrix,
    transpose: &[usize],
) -> Result<f64> {
    let pt = state.partial_transpose(transpose)?;
    min_hermitian_eigenvalue(&pt)
}

/// Tolerances used by the nonlocality pipeline's internal assertions.
#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    /// Minimum CH value accepted as a violation.
    pub ch_violation_eps: f64,
    /// Max deviation of the key statistics from uniform correlated.
    pub key_uniform_tol: f64,
    /// Tolerances handed to the local-polytope oracle.
    pub membership: MembershipOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            ch_violation_eps: CH_VIOLATION_EPS,
            key_uniform_tol: 1e-10,
            membership: MembershipOptions::default(),
        }
    }
}

/// Everything the pipeline certifies about one private-state recipe.
#[derive(Clone, Debug)]
pub struct NonlocalityReport {
    pub spec_digest: String,
    pub key_dim: usize,
    pub n_parties: usize,
    /// The coefficient pair targeted by the distillation channels.
    pub pair: (usize, usize),
    /// ⟨ψ|U_k ρ U_l†|ψ⟩ for the winning product vector.
    pub witness_value: Complex64,
    /// α_{kl} of the bipartite key state fed to the Bell test.
    pub alpha: Complex64,
    /// (1/d)^(N-2); 1 when no projection was needed.
    pub projection_probability: f64,
    pub settings: SettingsDescription,
    pub ch_value: f64,
    pub chsh_value: f64,
    pub violated: bool,
    pub lp_verdict: LocalityVerdict,
    pub lp_agrees: bool,
    pub key_statistic_ok: bool,
    pub pt_min_eigenvalue: f64,
    pub elapsed: Duration,
}

/// Run the full certification pipeline with default tolerances.
pub fn verify_nonlocality_pipeline(
    spec: &PrivateStateSpec,
    seed: Seed,
) -> Result<NonlocalityReport> {
    verify_nonlocality_pipeline_with(spec, seed, &PipelineOptions::default())
}

/// Construct the private state, check its key statistics, distill the key
/// part, reduce to two parties, run the CH test with analytic settings, and
/// cross-check the verdict against the local-polytope oracle.
///
/// Every stage asserts its own tolerance; any failure surfaces as an error
/// naming the stage, so a returned report always describes a certified
/// violation.
pub fn verify_nonlocality_pipeline_with(
    spec: &PrivateStateSpec,
    seed: Seed,
    options: &PipelineOptions,
) -> Result<NonlocalityReport> {
    let start = Instant::now();
    let d = spec.key_dim();
    let n = spec.n_parties();

    let gamma = construct_private_state(spec)?;

    // Key statistics: perfectly correlated and uniform.
    let probs = key_measurement_distribution(&gamma, d, n)?;
    let key_dev = crate::private::key_distribution_deviation(&probs, d, n);
    if key_dev > options.key_uniform_tol {
        return Err(Error::ToleranceViolation {
            stage: "pipeline key statistic",
            quantity: "deviation from uniform correlated distribution",
            value: key_dev,
            tolerance: options.key_uniform_tol,
        });
    }

    let outcome = distill_key_state(spec, seed)?;

    // Reduce to two parties before the Bell test.
    let (key2, projection_probability) = if n > 2 {
        project_onto_plus(&outcome.key_state, n - 2)?
    } else {
        (outcome.key_state.clone(), 1.0)
    };

    let plan = if d == 2 {
        optimal_x_state_settings(&key2)?
    } else {
        embed_qudit_settings(&key2, outcome.pair)?
    };

    let state2 = key2.expand()?;
    let table = born_probabilities(&state2, &plan.scenario)?;
    let ch = ch_value(&table)?;
    if ch.value <= options.ch_violation_eps {
        return Err(Error::ToleranceViolation {
            stage: "pipeline CH test",
            quantity: "CH value",
            value: ch.value,
            tolerance: options.ch_violation_eps,
        });
    }

    let lp_verdict = check_membership_with(&table, &options.membership)?;
    if lp_verdict.is_member() {
        return Err(Error::ToleranceViolation {
            stage: "pipeline locality oracle",
            quantity: "oracle admitted a CH-violating table as local; CH value",
            value: ch.value,
            tolerance: options.ch_violation_eps,
        });
    }

    let pt_min_eigenvalue =
        partial_transpose_min_eigenvalue(&state2, &[1])?;

    Ok(NonlocalityReport {
        spec_digest: crate::report::spec_digest(spec),
        key_dim: d,
        n_parties: n,
        pair: outcome.pair,
        witness_value: outcome.witness_value,
        alpha: key2.entry(outcome.pair.0, outcome.pair.1),
        projection_probability,
        settings: plan.description,
        ch_value: ch.value,
        chsh_value: chsh_from_ch(ch.value),
        violated: ch.violated,
        lp_verdict,
        lp_agrees: true,
        key_statistic_ok: true,
        pt_min_eigenvalue,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::matrix::{vec_tensor, ComplexMatrix};
    use crate::numeric::tensor::unflatten;
    use crate::private::fixtures;

    /// Explicit-matrix oracle: project the listed parties of an expanded
    /// key-part state onto (|0⟩+...+|d-1⟩)/√d and return the reduced state
    /// and the success probability.
    fn explicit_projection(
        key: &KeyPartState,
        project: &[usize],
    ) -> (ComplexMatrix, f64) {
        let d = key.key_dim();
        let n = key.n_parties();
        let m = n - project.len();
        let rho = key.expand().unwrap();
        let full = rho.matrix();
        let dims = vec![d; n];
        let keep: Vec<usize> = (0..n).filter(|p| !project.contains(p)).collect();
        let side_out = d.pow(m as u32);
        let side_in = d.pow(n as u32);
        let amp = 1.0 / (d as f64).sqrt();
        // rectangular map M: ⟨φ| on projected slots, identity on the rest
        let mut map = ComplexMatrix::zeros(side_out, side_in);
        for col in 0..side_in {
            let idx = unflatten(col, &dims);
            let mut row = 0usize;
            for &p in &keep {
                row = row * d + idx[p];
            }
            let weight = Complex64::new(amp.powi(project.len() as i32), 0.0);
            map.set(row, col, map.get(row, col) + weight);
        }
        let reduced_unnorm = &(&map * full) * &map.dagger();
        let prob = reduced_unnorm.trace().re;
        let reduced = reduced_unnorm.scale(Complex64::new(1.0 / prob, 0.0));
        (reduced, prob)
    }

    #[test]
    fn ghz3_projection_leaves_bell_coefficients() {
        let half = Complex64::new(0.5, 0.0);
        let alpha = ComplexMatrix::new(2, 2, vec![half; 4]).unwrap();
        let key = KeyPartState::new(3, 2, alpha).unwrap();
        let (reduced, prob) = project_onto_plus(&key, 1).unwrap();
        assert!((prob - 0.5).abs() < 1e-12);
        assert_eq!(reduced.n_parties(), 2);
        // oracle: explicit 8x8 projection of the first party
        let (explicit, explicit_prob) = explicit_projection(&key, &[0]);
        assert!((explicit_prob - prob).abs() < 1e-10);
        let expanded = reduced.expand().unwrap();
        assert!((&explicit - expanded.matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn qudit_projection_probability_and_alpha_preservation() {
        // N=4 → m=2 at d=3: probability (1/3)², coefficients unchanged.
        let d = 3;
        let third = Complex64::new(1.0 / 3.0, 0.0);
        let mut alpha = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            alpha.set(i, i, third);
        }
        let a = Complex64::new(0.21, 0.05);
        alpha.set(0, 2, a);
        alpha.set(2, 0, a.conj());
        let key = KeyPartState::new(4, d, alpha.clone()).unwrap();
        let (reduced, prob) = project_onto_plus(&key, 2).unwrap();
        assert!((prob - 1.0 / 9.0).abs() < 1e-12);
        assert!((reduced.alpha() - &alpha).max_abs() < 1e-12);
        // oracle agrees on a non-prefix subset as well
        let (explicit, explicit_prob) = explicit_projection(&key, &[1, 3]);
        assert!((explicit_prob - prob).abs() < 1e-10);
        assert!((&explicit - reduced.expand().unwrap().matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn zero_projection_is_identity() {
        let half = Complex64::new(0.5, 0.0);
        let alpha = ComplexMatrix::new(2, 2, vec![half; 4]).unwrap();
        let key = KeyPartState::new(3, 2, alpha.clone()).unwrap();
        let (same, prob) = project_onto_plus(&key, 0).unwrap();
        assert_eq!(prob, 1.0);
        assert_eq!(same.n_parties(), 3);
        assert!((same.alpha() - &alpha).max_abs() == 0.0);
    }

    #[test]
    fn projecting_all_parties_is_rejected() {
        let half = Complex64::new(0.5, 0.0);
        let alpha = ComplexMatrix::new(2, 2, vec![half; 4]).unwrap();
        let key = KeyPartState::new(2, 2, alpha).unwrap();
        assert!(matches!(
            project_onto_plus(&key, 2),
            Err(Error::ProjectionDepth { .. })
        ));
    }

    #[test]
    fn bell_state_partial_transpose_minimum() {
        let half = Complex64::new(0.5, 0.0);
        let alpha = ComplexMatrix::new(2, 2, vec![half; 4]).unwrap();
        let state = KeyPartState::new(2, 2, alpha).unwrap().expand().unwrap();
        let min = partial_transpose_min_eigenvalue(&state, &[1]).unwrap();
        assert!((min + 0.5).abs() < 1e-10);
    }

    #[test]
    fn product_state_partial_transpose_stays_positive() {
        let e0 = crate::numeric::matrix::basis_vector(2, 0);
        let state =
            DensityMatrix::from_pure(&vec_tensor(&e0, &e0), vec![2, 2]).unwrap();
        let min = partial_transpose_min_eigenvalue(&state, &[1]).unwrap();
        assert!(min >= -1e-10);
    }

    #[test]
    fn x_state_partial_transpose_minimum_is_minus_alpha() {
        // PT spectrum {1/2, 1/2, ±|α|} computed directly.
        for &(re, im) in &[(0.3, 0.0), (0.1, -0.2)] {
            let a = Complex64::new(re, im);
            let half = Complex64::new(0.5, 0.0);
            let alpha = ComplexMatrix::new(2, 2, vec![half, a, a.conj(), half]).unwrap();
            let state = KeyPartState::new(2, 2, alpha).unwrap().expand().unwrap();
            let min = partial_transpose_min_eigenvalue(&state, &[1]).unwrap();
            assert!((min + a.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn bell_fixture_end_to_end() {
        let report = verify_nonlocality_pipeline(&fixtures::bell(), Seed(5)).unwrap();
        assert_eq!(report.pair, (0, 1));
        assert!((report.alpha.norm() - 0.5).abs() < 1e-10);
        assert!((report.ch_value - tsirelson_ch()).abs() < 1e-8);
        assert!(report.violated);
        assert!(!report.lp_verdict.is_member());
        assert!((report.pt_min_eigenvalue + 0.5).abs() < 1e-9);
    }

    #[test]
    fn ghz3_fixture_end_to_end() {
        let report = verify_nonlocality_pipeline(&fixtures::ghz(3), Seed(6)).unwrap();
        assert!((report.projection_probability - 0.5).abs() < 1e-12);
        assert!((report.ch_value - tsirelson_ch()).abs() < 1e-8);
        assert!(!report.lp_verdict.is_member());
    }

    #[test]
    fn qudit_fixture_end_to_end() {
        let report =
            verify_nonlocality_pipeline(&fixtures::ghz_qudit(3, 2), Seed(7)).unwrap();
        // α_kl = 1/3 at the chosen pair, so the normalized two-qubit
        // submatrix is a Bell state and the embedded value is (2/3)·CH_max.
        let expect = 2.0 / 3.0 * tsirelson_ch();
        assert!((report.ch_value - expect).abs() < 1e-8);
        assert!(!report.lp_verdict.is_member());
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let spec = fixtures::random(3, 2, 2, Seed(77)).unwrap();
        let a = verify_nonlocality_pipeline(&spec, Seed(1)).unwrap();
        let b = verify_nonlocality_pipeline(&spec, Seed(1)).unwrap();
        assert_eq!(a.ch_value.to_bits(), b.ch_value.to_bits());
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.pair, b.pair);
    }
}
