//! Phase-1 simplex for equality-form feasibility with nonnegative variables.
//!
//! Solves: does A·x = b admit x ≥ 0? One artificial variable per row, Bland's
//! rule against cycling. On success the structural solution is read from the
//! basis; on failure the simplex multipliers give a Farkas certificate
//! y with yᵀA ≤ 0 componentwise and yᵀb > 0.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const REDUCED_COST_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 50_000;

pub(crate) struct Feasibility {
    /// Phase-1 optimum: total artificial mass left in the system.
    pub objective: f64,
    /// Structural solution (meaningful when `objective` ~ 0).
    pub solution: Vec<f64>,
    /// Simplex multipliers y (the Farkas certificate when infeasible).
    pub dual: Vec<f64>,
}

/// `a` is row-major m x n, `b` has length m and must be componentwise ≥ 0.
pub(crate) fn solve_feasibility(a: &[Vec<f64>], b: &[f64]) -> Result<Feasibility> {
    let m = a.len();
    let n = if m > 0 { a[0].len() } else { 0 };
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::SolverFailure {
            reason: "inconsistent constraint dimensions".into(),
        });
    }
    if b.iter().any(|&x| x < 0.0) {
        return Err(Error::SolverFailure {
            reason: "right-hand side must be nonnegative".into(),
        });
    }

    // Tableau: m rows of [A | I | b], plus the phase-1 reduced-cost row.
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(width);
            row.extend_from_slice(&a[i]);
            for j in 0..m {
                row.push(if i == j { 1.0 } else { 0.0 });
            }
            row.push(b[i]);
            row
        })
        .collect();
    // basis[i] = column index of the basic variable in row i
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs r_j = c_j - Σ_i T[i][j] with c = (0..0, 1..1); the last
    // entry carries -objective.
    let mut cost = vec![0.0f64; width];
    for j in 0..width {
        let col_sum: f64 = (0..m).map(|i| tab[i][j]).sum();
        let c_j = if (n..n + m).contains(&j) { 1.0 } else { 0.0 };
        cost[j] = c_j - col_sum;
    }
    // last column of the cost row currently holds -Σ b_i = -objective

    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::SolverFailure {
                reason: format!("phase-1 simplex exceeded {MAX_ITERATIONS} iterations"),
            });
        }
        // Bland: entering column = smallest index with negative reduced cost.
        let entering = (0..n + m).find(|&j| cost[j] < -REDUCED_COST_TOL);
        let Some(entering) = entering else { break };

        // Ratio test; Bland tie-break on the smallest basic variable index.
        let mut leaving: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[entering] > PIVOT_TOL {
                let ratio = row[width - 1] / row[entering];
                let replace = match leaving {
                    None => true,
                    Some((best_row, best_ratio)) => {
                        ratio < best_ratio - PIVOT_TOL
                            || (ratio < best_ratio + PIVOT_TOL && basis[i] < basis[best_row])
                    }
                };
                if replace {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leaving else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0);
            // numerically treat as failure.
            return Err(Error::SolverFailure {
                reason: "phase-1 ratio test found no pivot".into(),
            });
        };

        // Pivot.
        let pivot = tab[pivot_row][entering];
        for v in tab[pivot_row].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != pivot_row && tab[i][entering].abs() > 0.0 {
                let factor = tab[i][entering];
                let (pivot_vec, row) = {
                    let (lo, hi) = tab.split_at_mut(pivot_row.max(i));
                    if i < pivot_row {
                        (&hi[0], &mut lo[i])
                    } else {
                        (&lo[pivot_row], &mut hi[0])
                    }
                };
                for (rv, pv) in row.iter_mut().zip(pivot_vec.iter()) {
                    *rv -= factor * pv;
                }
            }
        }
        let factor = cost[entering];
        if factor.abs() > 0.0 {
            for (cv, pv) in cost.iter_mut().zip(tab[pivot_row].iter()) {
                *cv -= factor * pv;
            }
        }
        basis[pivot_row] = entering;
    }

    let objective = -cost[width - 1];
    let mut solution = vec![0.0f64; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            solution[var] = tab[i][width - 1];
        }
    }
    // y_i = c_artificial - reduced cost of artificial column i = 1 - r_{n+i}
    let dual: Vec<f64> = (0..m).map(|i| 1.0 - cost[n + i]).collect();
    Ok(Feasibility {
        objective,
        solution,
        dual,
    })
}
