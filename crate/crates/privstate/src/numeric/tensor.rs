//! Subsystem-indexed operations on tensor-product spaces.
//!
//! A Hilbert space is described by an ordered list of factor dimensions
//! `dims`; basis states are flattened row-major (the first factor is the most
//! significant index). These helpers implement partial trace, partial
//! transpose, and embedding of operators that act on a subset of factors.

use crate::error::{Error, Result};
use crate::numeric::matrix::{ComplexMatrix, C_ZERO};

/// Row-major strides for a factor list: `stride[i] = prod(dims[i+1..])`.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

pub(crate) fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Decode a flat index into per-factor indices.
pub(crate) fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; dims.len()];
    for i in (0..dims.len()).rev() {
        idx[i] = flat % dims[i];
        flat /= dims[i];
    }
    idx
}

/// Flat index of the uniform multi-index (i, i, ..., i) over `n` factors of
/// dimension `d`.
pub(crate) fn uniform_rep_index(value: usize, n: usize, d: usize) -> usize {
    let mut idx = 0usize;
    for _ in 0..n {
        idx = idx * d + value;
    }
    idx
}

fn check_subset(dims: &[usize], subset: &[usize], context: &str) -> Result<()> {
    let mut seen = vec![false; dims.len()];
    for &t in subset {
        if t >= dims.len() {
            return Err(Error::InvalidSubsystems {
                reason: format!("{context}: index {t} out of range for {} factors", dims.len()),
            });
        }
        if seen[t] {
            return Err(Error::InvalidSubsystems {
                reason: format!("{context}: duplicate index {t}"),
            });
        }
        seen[t] = true;
    }
    Ok(())
}

/// Embed an operator acting on the factors listed in `targets` (in that
/// order) into the full space described by `dims`, acting as identity
/// elsewhere.
pub fn embed_operator(
    op: &ComplexMatrix,
    dims: &[usize],
    targets: &[usize],
) -> Result<ComplexMatrix> {
    check_subset(dims, targets, "embed_operator")?;
    let target_dim: usize = targets.iter().map(|&t| dims[t]).product();
    if !op.is_square() || op.rows() != target_dim {
        return Err(Error::DimensionMismatch {
            context: "embed_operator",
            expected: target_dim,
            actual: op.rows(),
        });
    }
    let n = total_dim(dims);
    let full_strides = strides(dims);
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !targets.contains(i)).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&i| dims[i]).collect();
    let rest_total = total_dim(&rest_dims);
    let target_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();

    // Flat offset of a target multi-index within the full space.
    let target_offsets: Vec<usize> = (0..target_dim)
        .map(|flat| {
            unflatten(flat, &target_dims)
                .iter()
                .zip(targets)
                .map(|(&part, &t)| part * full_strides[t])
                .sum()
        })
        .collect();

    let mut out = ComplexMatrix::zeros(n, n);
    for ctx in 0..rest_total {
        let base: usize = unflatten(ctx, &rest_dims)
            .iter()
            .zip(&rest)
            .map(|(&part, &f)| part * full_strides[f])
            .sum();
        for tr in 0..target_dim {
            let row = base + target_offsets[tr];
            for tc in 0..target_dim {
                let v = op.get(tr, tc);
                if v != C_ZERO {
                    out.set(row, base + target_offsets[tc], v);
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace keeping the factors in `keep` (strictly ascending). Returns
/// the reduced matrix together with the kept factor dimensions.
pub fn partial_trace_raw(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<(ComplexMatrix, Vec<usize>)> {
    check_subset(dims, keep, "partial_trace")?;
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSubsystems {
            reason: "partial_trace: keep indices must be strictly ascending".into(),
        });
    }
    if !m.is_square() || m.rows() != total_dim(dims) {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: total_dim(dims),
            actual: m.rows(),
        });
    }
    let full_strides = strides(dims);
    let keep_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let keep_total = total_dim(&keep_dims);
    let traced_total = total_dim(&traced_dims);

    let offset = |flat: usize, sub_dims: &[usize], subset: &[usize]| -> usize {
        unflatten(flat, sub_dims)
            .iter()
            .zip(subset)
            .map(|(&part, &f)| part * full_strides[f])
            .sum()
    };
    let keep_offsets: Vec<usize> = (0..keep_total).map(|f| offset(f, &keep_dims, keep)).collect();
    let traced_offsets: Vec<usize> =
        (0..traced_total).map(|f| offset(f, &traced_dims, &traced)).collect();

    let mut out = ComplexMatrix::zeros(keep_total, keep_total);
    for kr in 0..keep_total {
        for kc in 0..keep_total {
            let mut acc = C_ZERO;
            for &t in &traced_offsets {
                acc += m.get(keep_offsets[kr] + t, keep_offsets[kc] + t);
            }
            out.set(kr, kc, acc);
        }
    }
    Ok((out, keep_dims))
}

/// Transpose the factors listed in `transpose`, leaving the rest untouched.
pub fn partial_transpose_raw(
    m: &ComplexMatrix,
    dims: &[usize],
    transpose: &[usize],
) -> Result<ComplexMatrix> {
    check_subset(dims, transpose, "partial_transpose")?;
    let n = total_dim(dims);
    if !m.is_square() || m.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "partial_transpose",
            expected: n,
            actual: m.rows(),
        });
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let ridx = unflatten(r, dims);
        for c in 0..n {
            let mut rr = ridx.clone();
            let mut cc = unflatten(c, dims);
            for &t in transpose {
                std::mem::swap(&mut rr[t], &mut cc[t]);
            }
            let src_r = rr.iter().zip(strides(dims)).map(|(&i, s)| i * s).sum::<usize>();
            let src_c = cc.iter().zip(strides(dims)).map(|(&i, s)| i * s).sum::<usize>();
            out.set(r, c, m.get(src_r, src_c));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::matrix::{sigma_x, vec_outer, Complex64, C_ONE};

    #[test]
    fn strides_and_unflatten() {
        let dims = [2usize, 3, 2];
        assert_eq!(strides(&dims), vec![6, 2, 1]);
        assert_eq!(unflatten(7, &dims), vec![1, 0, 1]);
        assert_eq!(uniform_rep_index(1, 3, 2), 7);
        assert_eq!(uniform_rep_index(2, 2, 3), 8);
    }

    #[test]
    fn embed_on_second_factor_matches_kron() {
        let op = sigma_x();
        let dims = [2usize, 2];
        let embedded = embed_operator(&op, &dims, &[1]).unwrap();
        let expect = ComplexMatrix::identity(2).kron(&op);
        assert!((&embedded - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn embed_nonadjacent_pair() {
        // op on factors (0, 2) of a 2x2x2 space, with reversed target order.
        let op = sigma_x().kron(&sigma_x());
        let dims = [2usize, 2, 2];
        let a = embed_operator(&op, &dims, &[0, 2]).unwrap();
        let b = embed_operator(&op, &dims, &[2, 0]).unwrap();
        // σx⊗σx is symmetric under swapping its two factors.
        assert!((&a - &b).max_abs() < 1e-15);
        let expect = sigma_x()
            .kron(&ComplexMatrix::identity(2))
            .kron(&sigma_x());
        assert!((&a - &expect).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_bell_state_gives_maximally_mixed() {
        // Independent oracle: brute-force sum over the traced basis.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ];
        let rho = vec_outer(&phi, &phi);
        let mut oracle = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..2 {
                    acc += rho.get(a * 2 + t, b * 2 + t);
                }
                oracle.set(a, b, acc);
            }
        }
        let (reduced, kept) = partial_trace_raw(&rho, &[2, 2], &[0]).unwrap();
        assert_eq!(kept, vec![2]);
        assert!((&reduced - &oracle).max_abs() < 1e-15);
        let half = &ComplexMatrix::identity(2) * 0.5;
        assert!((&reduced - &half).max_abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        let m = ComplexMatrix::identity(4);
        assert!(partial_trace_raw(&m, &[2, 2], &[2]).is_err());
        assert!(partial_trace_raw(&m, &[2, 2], &[1, 0]).is_err());
    }

    #[test]
    fn partial_transpose_is_involutive_and_hermiticity_preserving() {
        let m = ComplexMatrix::from_fn(4, 4, |r, c| {
            Complex64::new((r * 4 + c) as f64, (r as f64) - (c as f64))
        });
        let h = &(&m + &m.dagger()) * 0.5;
        let pt = partial_transpose_raw(&h, &[2, 2], &[1]).unwrap();
        assert!(pt.is_hermitian(1e-12));
        let back = partial_transpose_raw(&pt, &[2, 2], &[1]).unwrap();
        assert!((&back - &h).max_abs() < 1e-15);
    }

    #[test]
    fn full_transpose_via_both_factors() {
        let m = ComplexMatrix::from_fn(4, 4, |r, c| Complex64::new(r as f64, c as f64));
        let pt = partial_transpose_raw(&m, &[2, 2], &[0, 1]).unwrap();
        assert!((&pt - &m.transpose()).max_abs() < 1e-15);
        let _ = C_ONE;
    }
}
