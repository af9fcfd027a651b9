//! Sector-block plumbing for doubled quantum systems.
//!
//! A doubled quantum system with sector dimension `s` carries states as
//! pairs of PSD blocks `(b0, b1)` with `tr b0 + tr b1 = 1`. Composites pair
//! up the factor sectors by total parity:
//!
//! - composite sector 0 = `(H0 x H0) + (H1 x H1)`,
//! - composite sector 1 = `(H0 x H1) + (H1 x H0)`,
//!
//! and each composite block is laid out with the first summand before the
//! second, lexicographic in the factor indices. All routines here fix that
//! isomorphism bit-exactly.

use num_complex::Complex64;

use crate::numerics::ComplexMatrix;

/// Places `top` and `bottom` as the diagonal blocks of a larger matrix.
pub fn block_diag(top: &ComplexMatrix, bottom: &ComplexMatrix) -> ComplexMatrix {
    let (t, b) = (top.rows(), bottom.rows());
    let mut out = ComplexMatrix::zeros(t + b, t + b);
    for i in 0..t {
        for j in 0..t {
            out.0[(i, j)] = top.0[(i, j)];
        }
    }
    for i in 0..b {
        for j in 0..b {
            out.0[(t + i, t + j)] = bottom.0[(i, j)];
        }
    }
    out
}

/// Extracts the `dim x dim` diagonal sub-block starting at `offset`.
pub fn sub_block(m: &ComplexMatrix, offset: usize, dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out.0[(i, j)] = m.0[(offset + i, offset + j)];
        }
    }
    out
}

/// Composite blocks of a product state: the tensor of `(a0, a1)` and
/// `(b0, b1)` has sector-0 block `diag(a0 x b0, a1 x b1)` and sector-1
/// block `diag(a0 x b1, a1 x b0)`.
pub fn tensor_blocks(
    a0: &ComplexMatrix,
    a1: &ComplexMatrix,
    b0: &ComplexMatrix,
    b1: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix) {
    let sector0 = block_diag(&a0.kronecker(b0), &a1.kronecker(b1));
    let sector1 = block_diag(&a0.kronecker(b1), &a1.kronecker(b0));
    (sector0, sector1)
}

/// Partial trace over the second factor of a `da*db`-dimensional block.
pub fn partial_trace_right(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..db {
                acc += m.0[(i * db + k, j * db + k)];
            }
            out.0[(i, j)] = acc;
        }
    }
    out
}

/// Partial trace over the first factor of a `da*db`-dimensional block.
pub fn partial_trace_left(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(db, db);
    for i in 0..db {
        for j in 0..db {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..da {
                acc += m.0[(k * db + i, k * db + j)];
            }
            out.0[(i, j)] = acc;
        }
    }
    out
}

/// Marginal blocks of a composite state `(c0, c1)` on the left factor.
///
/// The left system sits in sector 0 inside the first summand of `c0`
/// (`H0 x H0`) and the first summand of `c1` (`H0 x H1`); in sector 1
/// inside the second summands. Coherences between summands trace away
/// because the discarded factor occupies orthogonal sectors there.
pub fn marginal_left(
    c0: &ComplexMatrix,
    c1: &ComplexMatrix,
    sa: usize,
    sb: usize,
) -> (ComplexMatrix, ComplexMatrix) {
    let m = sa * sb;
    let from_c0_top = partial_trace_right(&sub_block(c0, 0, m), sa, sb);
    let from_c1_top = partial_trace_right(&sub_block(c1, 0, m), sa, sb);
    let from_c0_bot = partial_trace_right(&sub_block(c0, m, m), sa, sb);
    let from_c1_bot = partial_trace_right(&sub_block(c1, m, m), sa, sb);
    (&from_c0_top + &from_c1_top, &from_c0_bot + &from_c1_bot)
}

/// Marginal blocks of a composite state `(c0, c1)` on the right factor.
///
/// The right system sits in sector 0 inside the first summand of `c0` and
/// the *second* summand of `c1` (`H1 x H0`).
pub fn marginal_right(
    c0: &ComplexMatrix,
    c1: &ComplexMatrix,
    sa: usize,
    sb: usize,
) -> (ComplexMatrix, ComplexMatrix) {
    let m = sa * sb;
    let from_c0_top = partial_trace_left(&sub_block(c0, 0, m), sa, sb);
    let from_c1_bot = partial_trace_left(&sub_block(c1, m, m), sa, sb);
    let from_c0_bot = partial_trace_left(&sub_block(c0, m, m), sa, sb);
    let from_c1_top = partial_trace_left(&sub_block(c1, 0, m), sa, sb);
    (&from_c0_top + &from_c1_bot, &from_c0_bot + &from_c1_top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_traces_of_kronecker_factorize() {
        let a = crate::numerics::random_density_matrix(2, 1);
        let b = crate::numerics::random_density_matrix(3, 2);
        let joint = a.kronecker(&b);
        assert!(partial_trace_right(&joint, 2, 3).max_distance(&a) < 1e-12);
        assert!(partial_trace_left(&joint, 2, 3).max_distance(&b) < 1e-12);
    }

    #[test]
    fn block_diag_and_sub_block_round_trip() {
        let a = crate::numerics::random_hermitian(2, 3);
        let b = crate::numerics::random_hermitian(3, 4);
        let joined = block_diag(&a, &b);
        assert!(sub_block(&joined, 0, 2).max_distance(&a) < 1e-15);
        assert!(sub_block(&joined, 2, 3).max_distance(&b) < 1e-15);
    }
}
