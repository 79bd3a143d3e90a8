//! The Clauser-Horne functional and its symmetry relabelings.
//!
//! Everything is evaluated in CH form, where the local bound is exactly zero;
//! CHSH values quoted in reports use the affine relation CHSH = 4·CH + 2,
//! valid for dichotomic projective settings. Marginals are read from the
//! (first, first) setting block; quantum tables are no-signaling so the
//! choice only fixes a convention.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

use super::scenario::{CorrelationTable, TableShape};

/// A CH value above this threshold counts as a violation.
pub const CH_VIOLATION_EPS: f64 = 1e-9;

/// Quantum maximum of the CH value, (√2 - 1)/2.
pub fn tsirelson_ch() -> f64 {
    (std::f64::consts::SQRT_2 - 1.0) / 2.0
}

pub fn chsh_from_ch(ch: f64) -> f64 {
    4.0 * ch + 2.0
}

/// Symmetry relabeling of a two-party, two-setting, two-outcome experiment.
/// The eight combinations generate the full CHSH facet class from the base
/// CH functional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    pub swap_a_settings: bool,
    pub swap_b_settings: bool,
    pub flip_a_outcomes: bool,
}

impl Relabeling {
    pub fn all() -> [Relabeling; 8] {
        let mut out = [Relabeling::default(); 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Relabeling {
                swap_a_settings: i & 1 != 0,
                swap_b_settings: i & 2 != 0,
                flip_a_outcomes: i & 4 != 0,
            };
        }
        out
    }

    /// Image of a table cell under this relabeling (an involution).
    fn map_cell(&self, ja: usize, jb: usize, a: usize, b: usize) -> (usize, usize, usize, usize) {
        let ja = if self.swap_a_settings { 1 - ja } else { ja };
        let jb = if self.swap_b_settings { 1 - jb } else { jb };
        let a = if self.flip_a_outcomes { 1 - a } else { a };
        (ja, jb, a, b)
    }
}

/// Result of evaluating the CH functional on a table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CHResult {
    pub value: f64,
    pub violated: bool,
    /// The setting/outcome relabeling under which the value was obtained.
    pub relabeling: Relabeling,
}

fn require_222(shape: TableShape, context: &str) -> Result<()> {
    if shape.parties != 2 || shape.settings != 2 || shape.outcomes != 2 {
        return Err(Error::ScenarioShape {
            reason: format!(
                "{context} needs a (2 parties, 2 settings, 2 outcomes) table, got \
                 ({}, {}, {})",
                shape.parties, shape.settings, shape.outcomes
            ),
        });
    }
    Ok(())
}

/// CH coefficient vector over the canonical cell order of a 2x2x2 table.
///
/// The base functional is P(A1B1) + P(A2B1) + P(A1B2) - P(A2B2) - P(A1) -
/// P(B1) with joints taken at outcome (first, first) and both marginals read
/// from the (A1, B1) block.
pub fn ch_functional(relabeling: Relabeling) -> Vec<f64> {
    let shape = TableShape {
        parties: 2,
        settings: 2,
        outcomes: 2,
    };
    let mut coeff = vec![0.0f64; shape.table_len()];
    let idx = |ja: usize, jb: usize, a: usize, b: usize| ((ja * 2 + jb) * 2 + a) * 2 + b;
    let mut add = |cell: (usize, usize, usize, usize), value: f64| {
        let (ja, jb, a, b) = relabeling.map_cell(cell.0, cell.1, cell.2, cell.3);
        coeff[idx(ja, jb, a, b)] += value;
    };
    // joint first-outcome terms
    add((0, 0, 0, 0), 1.0);
    add((1, 0, 0, 0), 1.0);
    add((0, 1, 0, 0), 1.0);
    add((1, 1, 0, 0), -1.0);
    // -P(A1): marginal of a=0 in the (0,0) block
    add((0, 0, 0, 0), -1.0);
    add((0, 0, 0, 1), -1.0);
    // -P(B1): marginal of b=0 in the (0,0) block
    add((0, 0, 0, 0), -1.0);
    add((0, 0, 1, 0), -1.0);
    coeff
}

fn evaluate_functional(coeff: &[f64], table: &CorrelationTable) -> f64 {
    coeff
        .iter()
        .zip(table.probabilities())
        .map(|(&c, &p)| c * p)
        .sum()
}

/// Left-hand side of the CH inequality on a 2x2x2 table; the local bound is
/// zero.
pub fn ch_value(table: &CorrelationTable) -> Result<CHResult> {
    ch_value_relabeled(table, Relabeling::default())
}

/// CH value under a specific relabeling of settings/outcomes.
pub fn ch_value_relabeled(table: &CorrelationTable, relabeling: Relabeling) -> Result<CHResult> {
    require_222(table.shape(), "ch_value")?;
    let value = evaluate_functional(&ch_functional(relabeling), table);
    Ok(CHResult {
        value,
        violated: value > CH_VIOLATION_EPS,
        relabeling,
    })
}

/// Maximum CH value over all eight relabelings. For no-signaling tables this
/// is an exact locality test: the CHSH facet class is complete at 2x2x2.
pub fn ch_facet_max(table: &CorrelationTable) -> Result<CHResult> {
    require_222(table.shape(), "ch_facet_max")?;
    let mut best: Option<CHResult> = None;
    for relabeling in Relabeling::all() {
        let result = ch_value_relabeled(table, relabeling)?;
        let better = match &best {
            None => true,
            Some(b) => result.value > b.value,
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("eight relabelings evaluated"))
}
