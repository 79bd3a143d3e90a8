//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; every tolerance is pinned in code.

use privstate::bell::{
    born_probabilities, ch_facet_max, ch_value, chsh_from_ch, embed_qudit_settings, horodecki_m,
    optimal_x_state_settings, project_onto_plus, tsirelson_ch, verify_nonlocality_pipeline,
    BellScenario, CorrelationTable, MeasurementSetting, NonlocalityReport, TableShape,
};
use privstate::distill::{apply_distillation_channels, build_channel_choice, distill_key_state};
use privstate::numeric::{random_density_matrix, Complex64, ComplexMatrix, Seed};
use privstate::par::{map_collect, Parallelism};
use privstate::polytope::{check_membership, enumerate_strategies};
use privstate::private::{
    construct_private_state, fixtures, key_measurement_distribution, key_distribution_deviation,
    KeyPartState, PrivateStateSpec,
};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

fn pass(criterion: usize, message: &str) {
    println!("acceptance {criterion:>2}: PASS  {message}");
}

// ---------------------------------------------------------------------------
// Shared ensemble (criteria 3, 9, 10): 50 seeded random private states across
// d in {2,3,4}, N in {2,3}, qubit shields per party.
// ---------------------------------------------------------------------------

struct Ensemble {
    runs: Vec<(PrivateStateSpec, NonlocalityReport)>,
    elapsed: Duration,
}

fn ensemble() -> &'static Ensemble {
    static CELL: OnceLock<Ensemble> = OnceLock::new();
    CELL.get_or_init(|| {
        let combos = [(2usize, 2usize), (3, 2), (4, 2), (2, 3), (3, 3), (4, 3)];
        let base = Seed(0xACCE_97);
        let start = Instant::now();
        let runs = map_collect((0..50u64).collect(), Parallelism::Rayon, |trial| {
            let (d, n) = combos[trial as usize % combos.len()];
            let spec = fixtures::random(d, n, 2, base.for_trial(trial))
                .expect("ensemble spec construction");
            let report = verify_nonlocality_pipeline(&spec, base.for_trial(trial).derive(1))
                .expect("ensemble pipeline");
            (spec, report)
        });
        Ensemble {
            runs,
            elapsed: start.elapsed(),
        }
    })
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_bell_state_fixture() {
    let start = Instant::now();
    let report = verify_nonlocality_pipeline(&fixtures::bell(), Seed(1)).unwrap();
    let elapsed = start.elapsed();

    assert!((report.alpha.norm() - 0.5).abs() <= 1e-10, "alpha = {}", report.alpha);
    assert!(
        (report.ch_value - tsirelson_ch()).abs() <= 1e-8,
        "CH = {}",
        report.ch_value
    );
    assert!(
        (report.chsh_value - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-7,
        "CHSH = {}",
        report.chsh_value
    );
    assert!(!report.lp_verdict.is_member());
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass(
        1,
        &format!(
            "Bell fixture: alpha=1/2, CH={:.9}, CHSH={:.9}, LP nonmember in {elapsed:?}",
            report.ch_value, report.chsh_value
        ),
    );
}

#[test]
fn acceptance_02_route_equivalence() {
    let start = Instant::now();
    let base = Seed(0x0E02_5000);
    let worst = map_collect((0..100u64).collect(), Parallelism::Rayon, |trial| {
        let d = 2 + (trial % 2) as usize;
        let shield = 1 + (trial % 3) as usize;
        let spec = fixtures::random(d, 2, shield, base.for_trial(trial)).unwrap();
        let outcome = distill_key_state(&spec, base.for_trial(trial).derive(7)).unwrap();
        let choice = build_channel_choice(&spec, outcome.pair, &outcome.product_vector).unwrap();
        let gamma = construct_private_state(&spec).unwrap();
        let simulated = apply_distillation_channels(&gamma, &spec, &choice).unwrap();
        (simulated.alpha() - outcome.key_state.alpha()).max_abs()
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    let elapsed = start.elapsed();

    assert!(worst <= 1e-10, "worst coefficient disagreement {worst:.3e}");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass(
        2,
        &format!("route equivalence on 100 specs: worst disagreement {worst:.2e} in {elapsed:?}"),
    );
}

#[test]
fn acceptance_03_main_theorem_ensemble() {
    let ens = ensemble();
    assert_eq!(ens.runs.len(), 50);
    for (i, (_, report)) in ens.runs.iter().enumerate() {
        assert!(
            report.alpha.norm() > 1e-6,
            "trial {i}: |alpha| = {:.3e}",
            report.alpha.norm()
        );
        assert!(report.ch_value > 1e-9, "trial {i}: CH = {:.3e}", report.ch_value);
        assert!(report.violated, "trial {i}");
        assert!(!report.lp_verdict.is_member(), "trial {i}");
        assert!(report.lp_agrees, "trial {i}");
    }
    assert!(
        ens.elapsed < Duration::from_secs(300),
        "took {:?}",
        ens.elapsed
    );
    pass(
        3,
        &format!(
            "50/50 random private states violate CH and are LP-nonmember in {:?}",
            ens.elapsed
        ),
    );
}

#[test]
fn acceptance_04_horodecki_closed_form() {
    for &mag in &[0.05f64, 0.1, 0.25, 0.5] {
        let half = Complex64::new(0.5, 0.0);
        let alpha = Complex64::new(mag, 0.0);
        let key = KeyPartState::new(
            2,
            2,
            ComplexMatrix::new(2, 2, vec![half, alpha, alpha.conj(), half]).unwrap(),
        )
        .unwrap();
        let state = key.expand().unwrap();
        // Right-hand side recomputed from the correlation-matrix oracle.
        let m = horodecki_m(&state).unwrap();
        let expected_chsh = 2.0 * m.sqrt();
        // Measured: analytic settings, Born probabilities, CH -> CHSH.
        let plan = optimal_x_state_settings(&key).unwrap();
        let table = born_probabilities(&state, &plan.scenario).unwrap();
        let measured = chsh_from_ch(ch_value(&table).unwrap().value);
        assert!(
            (measured - expected_chsh).abs() <= 1e-6,
            "|alpha| = {mag}: measured {measured}, expected {expected_chsh}"
        );
    }
    pass(4, "optimal CHSH matches 2*sqrt(M) within 1e-6 for |alpha| in {0.05, 0.1, 0.25, 0.5}");
}

#[test]
fn acceptance_05_two_over_d_scaling() {
    let mut checked = 0;
    for d in [3usize, 4, 5] {
        for (mag_rel, phase) in [(0.7, 0.0), (1.0, 1.1)] {
            // |alpha| = mag_rel / d keeps the coefficient admissible.
            let a = Complex64::from_polar(mag_rel / d as f64, phase);
            let pair = (0usize, d - 1);
            let mut alpha = ComplexMatrix::zeros(d, d);
            for i in 0..d {
                alpha.set(i, i, Complex64::new(1.0 / d as f64, 0.0));
            }
            alpha.set(pair.0, pair.1, a);
            alpha.set(pair.1, pair.0, a.conj());
            let key = KeyPartState::new(2, d, alpha).unwrap();

            let plan = embed_qudit_settings(&key, pair).unwrap();
            let embedded_table =
                born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
            let embedded_ch = ch_value(&embedded_table).unwrap().value;

            // Generating two-qubit state: off-diagonal (d/2)·alpha.
            let half = Complex64::new(0.5, 0.0);
            let na = a * Complex64::new(d as f64 / 2.0, 0.0);
            let qubit_key = KeyPartState::new(
                2,
                2,
                ComplexMatrix::new(2, 2, vec![half, na, na.conj(), half]).unwrap(),
            )
            .unwrap();
            let qubit_plan = optimal_x_state_settings(&qubit_key).unwrap();
            let qubit_table =
                born_probabilities(&qubit_key.expand().unwrap(), &qubit_plan.scenario).unwrap();
            let qubit_ch = ch_value(&qubit_table).unwrap().value;

            let expect = 2.0 / d as f64 * qubit_ch;
            assert!(
                (embedded_ch - expect).abs() <= 1e-9,
                "d={d}: embedded {embedded_ch}, (2/d)*qubit {expect}"
            );
            checked += 1;
        }
    }
    pass(
        5,
        &format!("embedded CH equals (2/d) x two-qubit CH within 1e-9 ({checked} cases, d in {{3,4,5}})"),
    );
}

/// Explicit-matrix projection oracle: project the given parties of the
/// expanded state onto (|0>+...+|d-1>)/sqrt(d).
fn explicit_projection(key: &KeyPartState, project: &[usize]) -> (ComplexMatrix, f64) {
    let d = key.key_dim();
    let n = key.n_parties();
    let keep: Vec<usize> = (0..n).filter(|p| !project.contains(p)).collect();
    let rho = key.expand().unwrap();
    let side_in = d.pow(n as u32);
    let side_out = d.pow(keep.len() as u32);
    let amp = (1.0 / (d as f64).sqrt()).powi(project.len() as i32);
    let mut map = ComplexMatrix::zeros(side_out, side_in);
    for col in 0..side_in {
        // decode the full multi-index
        let mut rest = col;
        let mut idx = vec![0usize; n];
        for slot in (0..n).rev() {
            idx[slot] = rest % d;
            rest /= d;
        }
        let mut row = 0usize;
        for &p in &keep {
            row = row * d + idx[p];
        }
        map.set(row, col, map.get(row, col) + Complex64::new(amp, 0.0));
    }
    let unnorm = &(&map * rho.matrix()) * &map.dagger();
    let prob = unnorm.trace().re;
    (unnorm.scale(Complex64::new(1.0 / prob, 0.0)), prob)
}

#[test]
fn acceptance_06_projection_reduction() {
    // Distilled key states of all built-in fixtures, plus a quartit variant.
    let sources: Vec<(&str, KeyPartState)> = vec![
        (
            "bell",
            distill_key_state(&fixtures::bell(), Seed(11)).unwrap().key_state,
        ),
        (
            "ghz3",
            distill_key_state(&fixtures::ghz(3), Seed(12)).unwrap().key_state,
        ),
        (
            "swap-shield",
            distill_key_state(&fixtures::swap_shield(), Seed(13)).unwrap().key_state,
        ),
        (
            "ghz-qutrit-3",
            distill_key_state(&fixtures::ghz_qudit(3, 3), Seed(14)).unwrap().key_state,
        ),
        (
            "ghz-quartit-2",
            distill_key_state(&fixtures::ghz_qudit(4, 2), Seed(15)).unwrap().key_state,
        ),
    ];
    let mut cases = 0;
    for (label, key) in &sources {
        let n = key.n_parties();
        for projected in 1..n {
            let (closed, prob) = project_onto_plus(key, projected).unwrap();
            let expect_prob = (1.0 / key.key_dim() as f64).powi(projected as i32);
            assert!(
                (prob - expect_prob).abs() <= 1e-10,
                "{label}: probability {prob} vs {expect_prob}"
            );
            // closed form keeps alpha bit-for-bit
            assert!((closed.alpha() - key.alpha()).max_abs() == 0.0);
            // explicit-matrix oracle agrees on state and probability
            let project: Vec<usize> = (0..projected).collect();
            let (explicit, explicit_prob) = explicit_projection(key, &project);
            assert!(
                (explicit_prob - prob).abs() <= 1e-10,
                "{label}: oracle probability {explicit_prob} vs {prob}"
            );
            let expanded = closed.expand().unwrap();
            assert!(
                (&explicit - expanded.matrix()).max_abs() <= 1e-10,
                "{label}: projected state mismatch"
            );
            cases += 1;
        }
    }
    pass(
        6,
        &format!("projection reduction matches explicit matrix oracle within 1e-10 ({cases} cases)"),
    );
}

#[test]
fn acceptance_07_oracle_completeness_at_222() {
    let shape = TableShape {
        parties: 2,
        settings: 2,
        outcomes: 2,
    };
    let strategies = enumerate_strategies(shape).unwrap();
    let base = Seed(0x07AC);
    let mut quantum = 0usize;
    let mut local = 0usize;

    let verdicts = map_collect((0..500u64).collect(), Parallelism::Rayon, |trial| {
        let seed = base.for_trial(trial);
        let table = if trial % 2 == 0 {
            // quantum-generated: random two-qubit state, random Bloch axes
            let rho = random_density_matrix(4, seed)
                .regroup(vec![2, 2])
                .unwrap();
            let mut rng = seed.derive(1).rng();
            use rand::Rng;
            let mut axes = Vec::with_capacity(4);
            while axes.len() < 4 {
                let axis = [
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                ];
                let norm = (axis[0].powi(2) + axis[1].powi(2) + axis[2].powi(2)).sqrt();
                if norm > 1e-3 {
                    axes.push([axis[0] / norm, axis[1] / norm, axis[2] / norm]);
                }
            }
            let scenario = BellScenario::new(vec![
                vec![
                    MeasurementSetting::from_bloch_axis(axes[0]).unwrap(),
                    MeasurementSetting::from_bloch_axis(axes[1]).unwrap(),
                ],
                vec![
                    MeasurementSetting::from_bloch_axis(axes[2]).unwrap(),
                    MeasurementSetting::from_bloch_axis(axes[3]).unwrap(),
                ],
            ])
            .unwrap();
            born_probabilities(&rho, &scenario).unwrap()
        } else {
            // locally-generated: a random convex mixture of strategies
            let mut rng = seed.rng();
            use rand::Rng;
            let picks = 1 + (rng.random::<u64>() % 4) as usize;
            let mut weights = vec![0.0f64; strategies.len()];
            let mut total = 0.0;
            for _ in 0..picks {
                let s = (rng.random::<u64>() as usize) % strategies.len();
                let w: f64 = rng.random::<f64>() + 0.1;
                weights[s] += w;
                total += w;
            }
            let mut probs = vec![0.0f64; shape.table_len()];
            for (s, &w) in strategies.iter().zip(&weights) {
                if w > 0.0 {
                    for (cell, v) in s.table_vector(shape).iter().enumerate() {
                        probs[cell] += w / total * v;
                    }
                }
            }
            CorrelationTable::new(shape, probs).unwrap()
        };
        let member = check_membership(&table).unwrap().is_member();
        let facet = ch_facet_max(&table).unwrap();
        (trial % 2 == 0, member, facet.value)
    });

    for (is_quantum, member, facet_value) in verdicts {
        assert_eq!(
            member,
            facet_value <= 1e-9,
            "LP and CH-facet oracle disagree (facet max {facet_value:.3e})"
        );
        if is_quantum {
            quantum += 1;
        } else {
            local += 1;
            assert!(member, "a convex mixture of strategies must be local");
        }
    }
    assert_eq!(quantum + local, 500);

    // Werner visibility threshold bracketed by LP bisection.
    let key = KeyPartState::new(
        2,
        2,
        ComplexMatrix::new(2, 2, vec![Complex64::new(0.5, 0.0); 4]).unwrap(),
    )
    .unwrap();
    let plan = optimal_x_state_settings(&key).unwrap();
    let bell_table = born_probabilities(&key.expand().unwrap(), &plan.scenario).unwrap();
    let uniform = CorrelationTable::uniform(shape);
    let member_at = |v: f64| {
        let mixed = CorrelationTable::mix(&bell_table, &uniform, v).unwrap();
        check_membership(&mixed).unwrap().is_member()
    };
    assert!(member_at(0.70), "v = 0.70 must be local");
    assert!(!member_at(0.72), "v = 0.72 must be nonlocal");
    let (mut lo, mut hi) = (0.70f64, 0.72f64);
    for _ in 0..25 {
        let mid = 0.5 * (lo + hi);
        if member_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    assert!(
        (threshold - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4,
        "threshold {threshold}"
    );
    pass(
        7,
        &format!(
            "LP and CH facets agree on {quantum} quantum + {local} local tables; \
             Werner threshold {threshold:.6} in [0.70, 0.72]"
        ),
    );
}

#[test]
fn acceptance_08_local_bound_exactness() {
    let shape = TableShape {
        parties: 2,
        settings: 2,
        outcomes: 2,
    };
    let strategies = enumerate_strategies(shape).unwrap();
    assert_eq!(strategies.len(), 16);
    let mut max_value = f64::NEG_INFINITY;
    for strategy in &strategies {
        let value = ch_value(&strategy.table(shape)).unwrap().value;
        assert!(value <= 0.0, "deterministic strategy exceeded the CH bound: {value}");
        max_value = max_value.max(value);
    }
    assert_eq!(max_value, 0.0, "the bound must be attained");
    pass(8, "all 16 deterministic strategies give CH <= 0 with equality attained");
}

#[test]
fn acceptance_09_key_statistics() {
    // Fixtures, checked directly against the distribution.
    for (label, spec) in [
        ("bell", fixtures::bell()),
        ("ghz3", fixtures::ghz(3)),
        ("swap-shield", fixtures::swap_shield()),
    ] {
        let gamma = construct_private_state(&spec).unwrap();
        let probs = key_measurement_distribution(&gamma, spec.key_dim(), spec.n_parties()).unwrap();
        let dev = key_distribution_deviation(&probs, spec.key_dim(), spec.n_parties());
        assert!(dev <= 1e-10, "{label}: deviation {dev:.3e}");
    }
    // Ensemble states, as certified inside the pipeline.
    let ens = ensemble();
    assert!(ens.runs.iter().all(|(_, r)| r.key_statistic_ok));
    pass(
        9,
        "every constructed private state has perfectly correlated, uniform key statistics (1e-10)",
    );
}

#[test]
fn acceptance_10_partial_transpose_diagnostic() {
    // Fixtures first.
    for (label, spec, seed) in [
        ("bell", fixtures::bell(), 31u64),
        ("ghz3", fixtures::ghz(3), 32),
        ("swap-shield", fixtures::swap_shield(), 33),
    ] {
        let report = verify_nonlocality_pipeline(&spec, Seed(seed)).unwrap();
        assert!(
            report.pt_min_eigenvalue <= -report.alpha.norm() + 1e-9,
            "{label}: PT min {} vs -|alpha| {}",
            report.pt_min_eigenvalue,
            -report.alpha.norm()
        );
    }
    let ens = ensemble();
    for (i, (_, report)) in ens.runs.iter().enumerate() {
        assert!(
            report.pt_min_eigenvalue <= -report.alpha.norm() + 1e-9,
            "trial {i}: PT min {} vs -|alpha| {}",
            report.pt_min_eigenvalue,
            -report.alpha.norm()
        );
    }
    pass(
        10,
        "PT minimum eigenvalue <= -|alpha_kl| + 1e-9 on all fixtures and ensemble key states",
    );
}
