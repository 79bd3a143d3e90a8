//! Optimal CH settings for distilled key states.
//!
//! For a two-qubit key state the correlation matrix has singular values
//! (1, 2|α|, 2|α|); the settings place one observable pair along z and one
//! along the in-plane axis tied to the phase of α, with the Bob angle fixed
//! by tan θ = 2|α|. For key dimension d > 2 the same qubit settings are
//! embedded as rank-one projectors on span{|k⟩, |l⟩}, second outcome 1 - P.

use crate::error::{Error, Result};
use crate::numeric::density::DensityMatrix;
use crate::numeric::eigen::hermitian_eigensystem;
use crate::numeric::matrix::{
    sigma_x, sigma_y, sigma_z, trace_product, vec_outer, Complex64, ComplexMatrix, C_ZERO,
};
use crate::private::KeyPartState;
use serde::{Deserialize, Serialize};

use super::inequality::ch_value;
use super::scenario::{born_probabilities, BellScenario, MeasurementSetting};

/// Bloch axes of the two dichotomic settings per party, plus the key-basis
/// pair they are embedded on when the local dimension exceeds two.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SettingsDescription {
    pub alice_axes: [[f64; 3]; 2],
    pub bob_axes: [[f64; 3]; 2],
    pub embedded_pair: Option<(usize, usize)>,
}

/// A measurement scenario together with its serializable description.
#[derive(Clone, Debug)]
pub struct SettingsPlan {
    pub scenario: BellScenario,
    pub description: SettingsDescription,
}

/// Two-qubit CHSH criterion: sum of the two largest eigenvalues of TᵀT,
/// where T_uv = Tr[ρ σ_u ⊗ σ_v]. The state violates CHSH iff the result
/// exceeds 1, with maximal CHSH value 2√M.
pub fn horodecki_m(state: &DensityMatrix) -> Result<f64> {
    if state.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            context: "horodecki_m: two-qubit state required",
            expected: 4,
            actual: state.dim(),
        });
    }
    let t = correlation_matrix(state);
    // TᵀT is real symmetric 3x3; reuse the complex Hermitian solver.
    let mut tt = ComplexMatrix::zeros(3, 3);
    for r in 0..3 {
        for c in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += t[k][r] * t[k][c];
            }
            tt.set(r, c, Complex64::new(acc, 0.0));
        }
    }
    let eig = hermitian_eigensystem(&tt)?;
    Ok(eig.eigenvalues[0] + eig.eigenvalues[1])
}

/// T_uv = Tr[ρ σ_u ⊗ σ_v] for u, v in {x, y, z}.
pub fn correlation_matrix(state: &DensityMatrix) -> [[f64; 3]; 3] {
    let paulis = [sigma_x(), sigma_y(), sigma_z()];
    let mut t = [[0.0f64; 3]; 3];
    for (u, su) in paulis.iter().enumerate() {
        for (v, sv) in paulis.iter().enumerate() {
            t[u][v] = trace_product(state.matrix(), &su.kron(sv)).re;
        }
    }
    t
}

fn normalize_axis(axis: [f64; 3]) -> [f64; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    [axis[0] / n, axis[1] / n, axis[2] / n]
}

/// The qubit axes realizing the maximal CH value for an X-form state with
/// off-diagonal coefficient `alpha` (|alpha| ≤ 1/2).
fn x_state_axes(alpha: Complex64) -> ([[f64; 3]; 2], [[f64; 3]; 2]) {
    let a = alpha.norm();
    let phi = alpha.arg();
    // Correlations: E(z, z) = 1 and E(x-axis, (cos φ, -sin φ, 0)) = 2|α|;
    // the in-plane cross terms vanish. tan θ = 2|α| balances the two.
    let theta = (2.0 * a).atan();
    let alice = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    let in_plane = [phi.cos(), -phi.sin(), 0.0];
    let b1 = normalize_axis([
        theta.sin() * in_plane[0],
        theta.sin() * in_plane[1],
        theta.cos(),
    ]);
    let b2 = normalize_axis([
        -theta.sin() * in_plane[0],
        -theta.sin() * in_plane[1],
        theta.cos(),
    ]);
    (alice, [b1, b2])
}

/// Optimal dichotomic settings for a bipartite qubit key state.
///
/// The resulting CH value is (√(1 + 4|α|²) - 1)/2; the phase of α is absorbed
/// into the Bob axes.
pub fn optimal_x_state_settings(key: &KeyPartState) -> Result<SettingsPlan> {
    if key.n_parties() != 2 || key.key_dim() != 2 {
        return Err(Error::ScenarioShape {
            reason: format!(
                "optimal_x_state_settings needs N=2, d=2 (got N={}, d={})",
                key.n_parties(),
                key.key_dim()
            ),
        });
    }
    let alpha = key.entry(0, 1);
    if alpha.norm() == 0.0 {
        return Err(Error::AlphaZero { k: 0, l: 1 });
    }
    let (alice_axes, bob_axes) = x_state_axes(alpha);
    let scenario = BellScenario::new(vec![
        vec![
            MeasurementSetting::from_bloch_axis(alice_axes[0])?,
            MeasurementSetting::from_bloch_axis(alice_axes[1])?,
        ],
        vec![
            MeasurementSetting::from_bloch_axis(bob_axes[0])?,
            MeasurementSetting::from_bloch_axis(bob_axes[1])?,
        ],
    ])?;
    Ok(SettingsPlan {
        scenario,
        description: SettingsDescription {
            alice_axes,
            bob_axes,
            embedded_pair: None,
        },
    })
}

/// Qubit state on span{|k⟩, |l⟩} for a Bloch axis.
fn embedded_projector(axis: [f64; 3], dim: usize, k: usize, l: usize) -> ComplexMatrix {
    let theta = axis[2].clamp(-1.0, 1.0).acos();
    let phi = axis[1].atan2(axis[0]);
    let mut psi = vec![C_ZERO; dim];
    psi[k] = Complex64::new((theta / 2.0).cos(), 0.0);
    psi[l] = Complex64::from_polar((theta / 2.0).sin(), phi);
    vec_outer(&psi, &psi)
}

/// Settings for a bipartite qudit key state: the optimal qubit settings of
/// the normalized 2x2 submatrix at the pair (k, l), embedded as rank-one
/// projectors with second outcome 1 - P.
pub fn embed_qudit_settings(key: &KeyPartState, pair: (usize, usize)) -> Result<SettingsPlan> {
    let (k, l) = pair;
    let d = key.key_dim();
    if key.n_parties() != 2 {
        return Err(Error::ScenarioShape {
            reason: format!("embed_qudit_settings needs N=2 (got N={})", key.n_parties()),
        });
    }
    if k >= l || l >= d {
        return Err(Error::InvalidSubsystems {
            reason: format!("pair ({k},{l}) is not ordered inside key dimension {d}"),
        });
    }
    let alpha = key.entry(k, l);
    if alpha.norm() == 0.0 {
        return Err(Error::AlphaZero { k, l });
    }
    // The submatrix {k,l}x{k,l} is (2/d) times a two-qubit X state with
    // off-diagonal (d/2)·α.
    let normalized_alpha = alpha * Complex64::new(d as f64 / 2.0, 0.0);
    let (alice_axes, bob_axes) = x_state_axes(normalized_alpha);
    let build = |axes: &[[f64; 3]; 2]| -> Result<Vec<MeasurementSetting>> {
        axes.iter()
            .map(|&axis| MeasurementSetting::dichotomic(embedded_projector(axis, d, k, l)))
            .collect()
    };
    let scenario = BellScenario::new(vec![build(&alice_axes)?, build(&bob_axes)?])?;
    Ok(SettingsPlan {
        scenario,
        description: SettingsDescription {
            alice_axes,
            bob_axes,
            embedded_pair: Some(pair),
        },
    })
}

fn axis_to_angles(axis: [f64; 3]) -> (f64, f64) {
    (axis[2].clamp(-1.0, 1.0).acos(), axis[1].atan2(axis[0]))
}

fn angles_to_axis(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Gradient-free refinement of two-qubit settings: cyclic coordinate ascent
/// over the eight Bloch angles with a shrinking step, stopping once the step
/// falls below `step_tol`. Used as a numerical cross-check of the analytic
/// settings.
pub fn refine_settings(
    state: &DensityMatrix,
    init: &SettingsDescription,
    step_tol: f64,
) -> Result<(f64, SettingsDescription)> {
    if state.dims() != [2, 2] {
        return Err(Error::DimensionMismatch {
            context: "refine_settings: two-qubit state required",
            expected: 4,
            actual: state.dim(),
        });
    }
    let mut angles = [0.0f64; 8];
    for (i, axis) in init
        .alice_axes
        .iter()
        .chain(init.bob_axes.iter())
        .enumerate()
    {
        let (theta, phi) = axis_to_angles(*axis);
        angles[2 * i] = theta;
        angles[2 * i + 1] = phi;
    }
    let evaluate = |angles: &[f64; 8]| -> Result<f64> {
        let axes: Vec<[f64; 3]> = (0..4)
            .map(|i| angles_to_axis(angles[2 * i], angles[2 * i + 1]))
            .collect();
        let scenario = BellScenario::new(vec![
            vec![
                MeasurementSetting::from_bloch_axis(axes[0])?,
                MeasurementSetting::from_bloch_axis(axes[1])?,
            ],
            vec![
                MeasurementSetting::from_bloch_axis(axes[2])?,
                MeasurementSetting::from_bloch_axis(axes[3])?,
            ],
        ])?;
        let table = born_probabilities(state, &scenario)?;
        Ok(ch_value(&table)?.value)
    };
    let mut best = evaluate(&angles)?;
    let mut step = 0.3f64;
    while step > step_tol {
        let mut improved = false;
        for i in 0..8 {
            for sign in [1.0f64, -1.0] {
                let mut candidate = angles;
                candidate[i] += sign * step;
                let value = evaluate(&candidate)?;
                if value > best + 1e-15 {
                    best = value;
                    angles = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let axes: Vec<[f64; 3]> = (0..4)
        .map(|i| angles_to_axis(angles[2 * i], angles[2 * i + 1]))
        .collect();
    Ok((
        best,
        SettingsDescription {
            alice_axes: [axes[0], axes[1]],
            bob_axes: [axes[2], axes[3]],
            embedded_pair: init.embedded_pair,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::inequality::{chsh_from_ch, tsirelson_ch};
    use crate::numeric::matrix::basis_vector;

    fn x_state(alpha: Complex64) -> KeyPartState {
        let half = Complex64::new(0.5, 0.0);
        let alpha_mat = ComplexMatrix::new(2, 2, vec![half, alpha, alpha.conj(), half]).unwrap();
        KeyPartState::new(2, 2, alpha_mat).unwrap()
    }

    #[test]
    fn horodecki_of_bell_state_is_two() {
        // Oracle: T = diag(1, -1, 1) by direct trace computation.
        let key = x_state(Complex64::new(0.5, 0.0));
        let rho = key.expand().unwrap();
        let t = correlation_matrix(&rho);
        let expect = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        for u in 0..3 {
            for v in 0..3 {
                assert!((t[u][v] - expect[u][v]).abs() < 1e-12, "t[{u}][{v}]");
            }
        }
        let m = horodecki_m(&rho).unwrap();
        assert!((m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn horodecki_of_x_state_closed_form() {
        // Symbolic T for the X state: t_zz = 1, in-plane singular values
        // 2|α| each, so M = 1 + 4|α|².
        for &(re, im) in &[(0.3, 0.0), (0.1, 0.2), (0.0, 0.45), (0.05, -0.1)] {
            let alpha = Complex64::new(re, im);
            let rho = x_state(alpha).expand().unwrap();
            let m = horodecki_m(&rho).unwrap();
            assert!((m - (1.0 + 4.0 * alpha.norm_sqr())).abs() < 1e-10);
        }
    }

    #[test]
    fn horodecki_of_product_state_is_one() {
        let e0 = basis_vector(2, 0);
        let pure = crate::numeric::matrix::vec_tensor(&e0, &e0);
        let rho = DensityMatrix::from_pure(&pure, vec![2, 2]).unwrap();
        let m = horodecki_m(&rho).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn optimal_settings_reach_bell_state_maximum() {
        let key = x_state(Complex64::new(0.5, 0.0));
        let plan = optimal_x_state_settings(&key).unwrap();
        let table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
        let ch = ch_value(&table).unwrap();
        assert!((ch.value - tsirelson_ch()).abs() < 1e-8);
        assert!((chsh_from_ch(ch.value) - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn optimal_settings_match_closed_form_for_small_alpha() {
        let key = x_state(Complex64::new(0.1, 0.0));
        let plan = optimal_x_state_settings(&key).unwrap();
        let table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
        let ch = ch_value(&table).unwrap();
        let expect = ((1.0f64 + 4.0 * 0.01).sqrt() - 1.0) / 2.0;
        assert!((ch.value - expect).abs() < 1e-8);
        assert!((expect - 0.009_901_951_359_278_449).abs() < 1e-12);
    }

    #[test]
    fn phase_is_absorbed_into_settings() {
        let a = Complex64::from_polar(0.1, std::f64::consts::PI / 3.0);
        let key = x_state(a);
        let plan = optimal_x_state_settings(&key).unwrap();
        let table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
        let ch = ch_value(&table).unwrap();
        let expect = ((1.0f64 + 4.0 * 0.01).sqrt() - 1.0) / 2.0;
        assert!((ch.value - expect).abs() < 1e-8);
    }

    #[test]
    fn zero_alpha_is_rejected() {
        let key = x_state(Complex64::new(0.0, 0.0));
        assert!(matches!(
            optimal_x_state_settings(&key),
            Err(Error::AlphaZero { .. })
        ));
        // every pair zero in the qudit case
        let d = 3;
        let diag = ComplexMatrix::from_diagonal(&vec![Complex64::new(1.0 / 3.0, 0.0); d]);
        let key = KeyPartState::new(2, 3, diag).unwrap();
        assert!(matches!(
            embed_qudit_settings(&key, (0, 2)),
            Err(Error::AlphaZero { .. })
        ));
    }

    #[test]
    fn embedded_settings_scale_like_two_over_d() {
        // d=4 with α = 1/4 at (0,3): the normalized submatrix is a Bell
        // state, so the embedded CH value is (2/d)(√2-1)/2.
        let d = 4;
        let mut alpha = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            alpha.set(i, i, Complex64::new(0.25, 0.0));
        }
        alpha.set(0, 3, Complex64::new(0.25, 0.0));
        alpha.set(3, 0, Complex64::new(0.25, 0.0));
        let key = KeyPartState::new(2, d, alpha).unwrap();
        let plan = embed_qudit_settings(&key, (0, 3)).unwrap();
        let table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
        let ch = ch_value(&table).unwrap();
        let expect = (std::f64::consts::SQRT_2 - 1.0) / 4.0;
        assert!((ch.value - expect).abs() < 1e-9);
        assert!((expect - 0.103_553_390_593_273_7).abs() < 1e-12);
    }

    #[test]
    fn embedded_value_tracks_generating_qubit_value() {
        // Oracle: embedded CH on the full state equals (2/d) times the CH of
        // the normalized two-qubit submatrix state under its own settings.
        for d in [3usize, 4, 5] {
            let pair = (0usize, d - 1);
            let mag = 1.0 / (2.0 * d as f64); // |α| = 1/(2d), normalized 1/4
            let mut alpha = ComplexMatrix::zeros(d, d);
            for i in 0..d {
                alpha.set(i, i, Complex64::new(1.0 / d as f64, 0.0));
            }
            let a = Complex64::from_polar(mag, 0.3);
            alpha.set(pair.0, pair.1, a);
            alpha.set(pair.1, pair.0, a.conj());
            let key = KeyPartState::new(2, d, alpha).unwrap();
            let plan = embed_qudit_settings(&key, pair).unwrap();
            let table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
            let embedded_ch = ch_value(&table).unwrap().value;

            let normalized = x_state(a * Complex64::new(d as f64 / 2.0, 0.0));
            let qubit_plan = optimal_x_state_settings(&normalized).unwrap();
            let qubit_table =
                born_probabilities(&normalized.expand().unwrap(), &qubit_plan.scenario).unwrap();
            let qubit_ch = ch_value(&qubit_table).unwrap().value;

            assert!(
                (embedded_ch - 2.0 / d as f64 * qubit_ch).abs() < 1e-9,
                "d = {d}"
            );
        }
    }

    #[test]
    fn refinement_does_not_beat_horodecki_bound() {
        let key = x_state(Complex64::new(0.3, 0.1));
        let rho = key.expand().unwrap();
        let m = horodecki_m(&rho).unwrap();
        let plan = optimal_x_state_settings(&key).unwrap();
        let (refined_ch, _) = refine_settings(&rho, &plan.description, 1e-6).unwrap();
        let chsh = chsh_from_ch(refined_ch);
        assert!(chsh <= 2.0 * m.sqrt() + 1e-6);
        assert!((chsh - 2.0 * m.sqrt()).abs() < 1e-3);
    }
}
