//! Independent nonlocality certification against the local polytope.
//!
//! A correlation table is local iff it is a convex combination of
//! deterministic strategies (each party answers every setting with a fixed
//! outcome). Membership is decided by linear feasibility over the strategy
//! vertices; the verdict always carries a certificate that is re-verified by
//! direct arithmetic before being returned: convex weights reproducing the
//! table, or a separating functional with its enumerated local bound.

mod simplex;

use crate::bell::inequality::{ch_facet_max, ch_functional};
use crate::bell::scenario::{CorrelationTable, TableShape};
use crate::error::{Error, Result};

/// Enumeration guard: total number of deterministic strategies.
pub const STRATEGY_LIMIT: u128 = 1_000_000;

/// Tolerances of the membership test.
#[derive(Clone, Copy, Debug)]
pub struct MembershipOptions {
    /// Max ∞-norm residual of the reconstructed table for a member verdict.
    pub primal_residual: f64,
    /// Weights are clamped to zero down to this floor.
    pub weight_floor: f64,
    /// Required separation of a nonmember functional over its local bound.
    pub separation_eps: f64,
    /// Phase-1 objective below which the system counts as feasible.
    pub feasibility_tol: f64,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        Self {
            primal_residual: 1e-8,
            weight_floor: -1e-10,
            separation_eps: 1e-9,
            feasibility_tol: 1e-9,
        }
    }
}

/// One deterministic strategy: for each party, the outcome it answers to
/// each setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    assignments: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        self.assignments[party][setting]
    }

    /// The strategy's (deterministic) correlation table as a flat vector in
    /// canonical cell order.
    pub fn table_vector(&self, shape: TableShape) -> Vec<f64> {
        let mut probs = vec![0.0f64; shape.table_len()];
        let outcome_combos = shape.outcome_combos();
        for combo in 0..shape.setting_combos() {
            // decode the setting multi-index
            let mut rest = combo;
            let mut settings = vec![0usize; shape.parties];
            for slot in (0..shape.parties).rev() {
                settings[slot] = rest % shape.settings;
                rest /= shape.settings;
            }
            let mut outcome_flat = 0usize;
            for party in 0..shape.parties {
                outcome_flat = outcome_flat * shape.outcomes + self.outcome(party, settings[party]);
            }
            probs[combo * outcome_combos + outcome_flat] = 1.0;
        }
        probs
    }

    pub fn table(&self, shape: TableShape) -> CorrelationTable {
        CorrelationTable::new(shape, self.table_vector(shape))
            .expect("deterministic tables are normalized")
    }
}

/// All (outcomes^settings)^parties deterministic strategies, in lexicographic
/// order, without duplicates.
pub fn enumerate_strategies(shape: TableShape) -> Result<Vec<DeterministicStrategy>> {
    let per_party = (shape.outcomes as u128).pow(shape.settings as u32);
    let total = per_party.pow(shape.parties as u32);
    if total > STRATEGY_LIMIT {
        return Err(Error::ScenarioTooLarge {
            strategies: total,
            limit: STRATEGY_LIMIT,
        });
    }
    let per_party = per_party as usize;
    let total = total as usize;
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut rest = code;
        let mut assignments = Vec::with_capacity(shape.parties);
        for _ in 0..shape.parties {
            let mut party_code = rest % per_party;
            rest /= per_party;
            let mut per_setting = vec![0usize; shape.settings];
            for slot in (0..shape.settings).rev() {
                per_setting[slot] = party_code % shape.outcomes;
                party_code /= shape.outcomes;
            }
            assignments.push(per_setting);
        }
        out.push(DeterministicStrategy { assignments });
    }
    Ok(out)
}

/// Certified membership verdict.
#[derive(Clone, Debug)]
pub enum LocalityVerdict {
    Member {
        /// Convex weights over `enumerate_strategies` order, reproducing the
        /// table within the primal-residual tolerance.
        weights: Vec<f64>,
    },
    NonMember {
        /// Coefficients per table cell (canonical order).
        functional: Vec<f64>,
        /// max over deterministic strategies of functional · strategy table.
        local_bound: f64,
        /// functional · table, exceeding the bound by at least the
        /// separation tolerance.
        observed: f64,
    },
}

impl LocalityVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, LocalityVerdict::Member { .. })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Decide local-polytope membership with default tolerances.
pub fn check_membership(table: &CorrelationTable) -> Result<LocalityVerdict> {
    check_membership_with(table, &MembershipOptions::default())
}

/// Decide local-polytope membership of a correlation table.
///
/// Feasibility of "table = convex combination of strategy tables" is solved
/// by a phase-1 simplex. For the 2x2x2 scenario an infeasible table is first
/// certified by the violated CH facet (exact there); otherwise the simplex
/// multipliers provide the separating functional. Both certificate kinds are
/// re-verified before returning; verification failure is a solver error,
/// never silently coerced into a verdict.
pub fn check_membership_with(
    table: &CorrelationTable,
    options: &MembershipOptions,
) -> Result<LocalityVerdict> {
    let shape = table.shape();
    let strategies = enumerate_strategies(shape)?;
    let columns: Vec<Vec<f64>> = strategies.iter().map(|s| s.table_vector(shape)).collect();

    let cells = shape.table_len();
    // Rows: one per table cell plus the normalization row Σ w = 1.
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(cells + 1);
    for cell in 0..cells {
        a.push(columns.iter().map(|col| col[cell]).collect());
    }
    a.push(vec![1.0; strategies.len()]);
    let mut b: Vec<f64> = table
        .probabilities()
        .iter()
        .map(|&p| p.max(0.0)) // clamp the -1e-10-tolerated noise
        .collect();
    b.push(1.0);

    let feasibility = simplex::solve_feasibility(&a, &b)?;
    if feasibility.objective <= options.feasibility_tol {
        return verify_member(feasibility.solution, table, &columns, options)?.ok_or_else(|| {
            Error::SolverFailure {
                reason: "feasible phase-1 solution failed certificate re-verification".into(),
            }
        });
    }

    // Infeasible: produce a separating functional. At 2x2x2 the violated CH
    // facet is the canonical certificate; the simplex multipliers cover
    // every other case.
    let is_222 = shape.parties == 2 && shape.settings == 2 && shape.outcomes == 2;
    let mut functional: Option<Vec<f64>> = None;
    if is_222 {
        let facet = ch_facet_max(table)?;
        if facet.value > options.separation_eps {
            functional = Some(ch_functional(facet.relabeling));
        }
    }
    if functional.is_none() {
        let dual = &feasibility.dual[..cells]; // drop the normalization multiplier
        let scale = dual.iter().map(|y| y.abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            functional = Some(dual.iter().map(|y| y / scale).collect());
        }
    }
    if let Some(functional) = functional {
        let local_bound = columns
            .iter()
            .map(|col| dot(&functional, col))
            .fold(f64::NEG_INFINITY, f64::max);
        let observed = dot(&functional, table.probabilities());
        if observed > local_bound + options.separation_eps {
            return Ok(LocalityVerdict::NonMember {
                functional,
                local_bound,
                observed,
            });
        }
    }

    // Boundary zone: the point is within certificate tolerance of the
    // polytope surface. Accept the phase-1 weights if they still reproduce
    // the table within the primal residual.
    if let Some(verdict) = verify_member(feasibility.solution, table, &columns, options)? {
        return Ok(verdict);
    }
    Err(Error::SolverFailure {
        reason: format!(
            "no certificate verified (phase-1 objective {:.3e})",
            feasibility.objective
        ),
    })
}

/// Clamp and re-verify candidate member weights. Returns Ok(None) when the
/// reconstruction misses the table by more than the primal residual.
fn verify_member(
    mut weights: Vec<f64>,
    table: &CorrelationTable,
    columns: &[Vec<f64>],
    options: &MembershipOptions,
) -> Result<Option<LocalityVerdict>> {
    for w in weights.iter_mut() {
        if *w < 0.0 {
            if *w < options.weight_floor {
                return Err(Error::SolverFailure {
                    reason: format!("weight {w} below floor {}", options.weight_floor),
                });
            }
            *w = 0.0;
        }
    }
    let weight_sum: f64 = weights.iter().sum();
    if (weight_sum - 1.0).abs() > options.primal_residual {
        return Ok(None);
    }
    let cells = table.probabilities().len();
    let mut residual: f64 = 0.0;
    for cell in 0..cells {
        let recon: f64 = columns
            .iter()
            .zip(&weights)
            .map(|(col, &w)| col[cell] * w)
            .sum();
        residual = residual.max((recon - table.probabilities()[cell]).abs());
    }
    if residual > options.primal_residual {
        return Ok(None);
    }
    Ok(Some(LocalityVerdict::Member { weights }))
}
