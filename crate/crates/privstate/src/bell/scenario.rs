//! Measurement scenarios and correlation tables.
//!
//! A scenario fixes, for each party, a list of projective measurements; the
//! Born rule turns a state plus a scenario into a dense table of conditional
//! outcome probabilities, the object the locality oracle reasons about.

use crate::error::{Error, Result};
use crate::numeric::density::DensityMatrix;
use crate::numeric::matrix::{trace_product, ComplexMatrix};
use serde::{Deserialize, Serialize};

/// Projector validation tolerances.
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Correlation-table validation tolerances.
pub const TABLE_ENTRY_TOL: f64 = 1e-10;
pub const TABLE_NORMALIZATION_TOL: f64 = 1e-9;

/// One projective measurement: outcome projectors summing to the identity.
/// Outcome 0 is the distinguished "first result" used by the CH functional.
#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    projectors: Vec<ComplexMatrix>,
}

impl MeasurementSetting {
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::ScenarioShape {
                reason: "measurement needs at least one outcome".into(),
            });
        }
        let dim = projectors[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for p in &projectors {
            if !p.is_square() || p.rows() != dim {
                return Err(Error::DimensionMismatch {
                    context: "MeasurementSetting projector side",
                    expected: dim,
                    actual: p.rows(),
                });
            }
            let herm = p.hermiticity_deviation();
            if herm > PROJECTOR_TOL {
                return Err(Error::NotHermitian {
                    deviation: herm,
                    tolerance: PROJECTOR_TOL,
                });
            }
            let idem = (&(p * p) - p).max_abs();
            if idem > PROJECTOR_TOL {
                return Err(Error::ToleranceViolation {
                    stage: "MeasurementSetting",
                    quantity: "projector idempotence deviation",
                    value: idem,
                    tolerance: PROJECTOR_TOL,
                });
            }
            sum = &sum + p;
        }
        let complete = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if complete > PROJECTOR_TOL {
            return Err(Error::ToleranceViolation {
                stage: "MeasurementSetting",
                quantity: "completeness deviation",
                value: complete,
                tolerance: PROJECTOR_TOL,
            });
        }
        Ok(Self { projectors })
    }

    /// Two-outcome measurement (P, 1-P) with `first` as the first result.
    pub fn dichotomic(first: ComplexMatrix) -> Result<Self> {
        let dim = first.rows();
        let complement = &ComplexMatrix::identity(dim) - &first;
        Self::new(vec![first, complement])
    }

    /// Qubit measurement along a Bloch axis: first outcome (1 + n·σ)/2.
    pub fn from_bloch_axis(axis: [f64; 3]) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::ToleranceViolation {
                stage: "MeasurementSetting",
                quantity: "Bloch axis norm deviation",
                value: (norm - 1.0).abs(),
                tolerance: 1e-9,
            });
        }
        let n_sigma = &(&(&crate::numeric::matrix::sigma_x() * axis[0])
            + &(&crate::numeric::matrix::sigma_y() * axis[1]))
            + &(&crate::numeric::matrix::sigma_z() * axis[2]);
        let first = &(&ComplexMatrix::identity(2) + &n_sigma) * 0.5;
        Self::dichotomic(first)
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }

    pub fn projector(&self, outcome: usize) -> &ComplexMatrix {
        &self.projectors[outcome]
    }
}

/// Per-party measurement settings (the same number of settings per party and
/// the same number of outcomes per setting).
#[derive(Clone, Debug)]
pub struct BellScenario {
    parties: Vec<Vec<MeasurementSetting>>,
}

impl BellScenario {
    pub fn new(parties: Vec<Vec<MeasurementSetting>>) -> Result<Self> {
        if parties.is_empty() || parties[0].is_empty() {
            return Err(Error::ScenarioShape {
                reason: "scenario needs at least one party and one setting".into(),
            });
        }
        let settings = parties[0].len();
        let outcomes = parties[0][0].outcomes();
        for (i, settings_list) in parties.iter().enumerate() {
            if settings_list.len() != settings {
                return Err(Error::ScenarioShape {
                    reason: format!("party {i} has {} settings, expected {settings}", settings_list.len()),
                });
            }
            let dim = settings_list[0].dim();
            for s in settings_list {
                if s.dim() != dim || s.outcomes() != outcomes {
                    return Err(Error::ScenarioShape {
                        reason: format!("party {i} mixes dimensions or outcome counts"),
                    });
                }
            }
        }
        Ok(Self { parties })
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn settings_per_party(&self) -> usize {
        self.parties[0].len()
    }

    pub fn outcomes_per_setting(&self) -> usize {
        self.parties[0][0].outcomes()
    }

    pub fn party_dim(&self, party: usize) -> usize {
        self.parties[party][0].dim()
    }

    pub fn setting(&self, party: usize, setting: usize) -> &MeasurementSetting {
        &self.parties[party][setting]
    }

    pub fn shape(&self) -> TableShape {
        TableShape {
            parties: self.n_parties(),
            settings: self.settings_per_party(),
            outcomes: self.outcomes_per_setting(),
        }
    }
}

/// Scenario shape: (parties, settings per party, outcomes per setting).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableShape {
    pub parties: usize,
    pub settings: usize,
    pub outcomes: usize,
}

impl TableShape {
    pub fn setting_combos(&self) -> usize {
        self.settings.pow(self.parties as u32)
    }

    pub fn outcome_combos(&self) -> usize {
        self.outcomes.pow(self.parties as u32)
    }

    pub fn table_len(&self) -> usize {
        self.setting_combos() * self.outcome_combos()
    }
}

/// Dense table of conditional probabilities P(outcomes | settings).
///
/// Flat layout: settings multi-index (row-major over parties) is the major
/// axis, outcomes multi-index the minor one.
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    shape: TableShape,
    probs: Vec<f64>,
}

impl CorrelationTable {
    pub fn new(shape: TableShape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.table_len() {
            return Err(Error::DimensionMismatch {
                context: "CorrelationTable length",
                expected: shape.table_len(),
                actual: probs.len(),
            });
        }
        for &p in &probs {
            if !p.is_finite() || p < -TABLE_ENTRY_TOL || p > 1.0 + TABLE_ENTRY_TOL {
                return Err(Error::ToleranceViolation {
                    stage: "CorrelationTable",
                    quantity: "probability outside [0, 1]",
                    value: p,
                    tolerance: TABLE_ENTRY_TOL,
                });
            }
        }
        let block = shape.outcome_combos();
        for combo in 0..shape.setting_combos() {
            let sum: f64 = probs[combo * block..(combo + 1) * block].iter().sum();
            if (sum - 1.0).abs() > TABLE_NORMALIZATION_TOL {
                return Err(Error::ToleranceViolation {
                    stage: "CorrelationTable",
                    quantity: "conditional distribution normalization",
                    value: (sum - 1.0).abs(),
                    tolerance: TABLE_NORMALIZATION_TOL,
                });
            }
        }
        Ok(Self { shape, probs })
    }

    /// The uniformly random table: every outcome combo equally likely.
    pub fn uniform(shape: TableShape) -> Self {
        let p = 1.0 / shape.outcome_combos() as f64;
        Self {
            shape,
            probs: vec![p; shape.table_len()],
        }
    }

    /// Convex mixture weight·a + (1-weight)·b.
    pub fn mix(a: &Self, b: &Self, weight: f64) -> Result<Self> {
        if a.shape != b.shape {
            return Err(Error::ScenarioShape {
                reason: "cannot mix tables of different shapes".into(),
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::ToleranceViolation {
                stage: "CorrelationTable::mix",
                quantity: "mixture weight outside [0, 1]",
                value: weight,
                tolerance: 0.0,
            });
        }
        let probs = a
            .probs
            .iter()
            .zip(&b.probs)
            .map(|(&x, &y)| weight * x + (1.0 - weight) * y)
            .collect();
        Self::new(a.shape, probs)
    }

    pub fn shape(&self) -> TableShape {
        self.shape
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    fn flat_index(&self, settings: &[usize], outcomes: &[usize]) -> usize {
        debug_assert_eq!(settings.len(), self.shape.parties);
        debug_assert_eq!(outcomes.len(), self.shape.parties);
        let mut s = 0usize;
        for &j in settings {
            debug_assert!(j < self.shape.settings);
            s = s * self.shape.settings + j;
        }
        let mut a = 0usize;
        for &o in outcomes {
            debug_assert!(o < self.shape.outcomes);
            a = a * self.shape.outcomes + o;
        }
        s * self.shape.outcome_combos() + a
    }

    pub fn prob(&self, settings: &[usize], outcomes: &[usize]) -> f64 {
        self.probs[self.flat_index(settings, outcomes)]
    }
}

/// Quantum side of the experiment: P(a|A) = Tr[ρ · ⊗_i Π_{a_i}].
pub fn born_probabilities(
    state: &DensityMatrix,
    scenario: &BellScenario,
) -> Result<CorrelationTable> {
    let n = scenario.n_parties();
    if state.dims().len() != n {
        return Err(Error::DimensionMismatch {
            context: "born_probabilities: party count",
            expected: n,
            actual: state.dims().len(),
        });
    }
    for party in 0..n {
        if state.dims()[party] != scenario.party_dim(party) {
            return Err(Error::DimensionMismatch {
                context: "born_probabilities: party dimension",
                expected: scenario.party_dim(party),
                actual: state.dims()[party],
            });
        }
    }
    let shape = scenario.shape();
    let mut probs = Vec::with_capacity(shape.table_len());
    let mut settings = vec![0usize; n];
    loop {
        let mut outcomes = vec![0usize; n];
        loop {
            let mut joint = scenario.setting(0, settings[0]).projector(outcomes[0]).clone();
            for party in 1..n {
                joint = joint.kron(scenario.setting(party, settings[party]).projector(outcomes[party]));
            }
            probs.push(trace_product(state.matrix(), &joint).re);
            // advance outcome multi-index
            let mut done = true;
            for slot in (0..n).rev() {
                outcomes[slot] += 1;
                if outcomes[slot] < shape.outcomes {
                    done = false;
                    break;
                }
                outcomes[slot] = 0;
            }
            if done {
                break;
            }
        }
        let mut done = true;
        for slot in (0..n).rev() {
            settings[slot] += 1;
            if settings[slot] < shape.settings {
                done = false;
                break;
            }
            settings[slot] = 0;
        }
        if done {
            break;
        }
    }
    CorrelationTable::new(shape, probs)
}
