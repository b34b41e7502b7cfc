//! Row Hermite normal form and the integer kernels built on it.
//!
//! Convention: nonzero rows come first and each has its pivot (rightmost
//! nonzero entry) strictly to the right of the previous row's pivot, so a
//! full-rank square input yields a lower-triangular matrix. Pivots are
//! positive and the entries of later rows in a pivot column lie in
//! `[0, pivot)`. Zero rows come last.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::IntMatrix;

/// Result of [`hnf`]: `h = u * m` with `u` unimodular.
#[derive(Clone, Debug)]
pub struct Hnf {
    pub h: IntMatrix,
    pub u: IntMatrix,
    /// Number of nonzero rows of `h`.
    pub rank: usize,
    /// Pivot column of each nonzero row.
    pub pivots: Vec<usize>,
}

pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let r = hnf_full(m);
    (r.h, r.u)
}

pub fn hnf_full(m: &IntMatrix) -> Hnf {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let (order, pivots) = echelon(&mut h, Some(&mut u));
    finish(h, Some(u), order, pivots)
}

/// Canonical basis of the row space: the nonzero rows of the HNF.
pub fn hnf_basis(m: &IntMatrix) -> IntMatrix {
    let mut h = m.clone();
    let (order, pivots) = echelon(&mut h, None);
    let r = finish(h, None, order, pivots);
    r.h.select_rows(0..r.rank)
}

/// Basis of the left kernel `{x in Z^rows : x m = 0}`.
pub fn left_kernel(m: &IntMatrix) -> IntMatrix {
    let r = hnf_full(m);
    let kernel = r.u.select_rows(r.rank..m.rows());
    if kernel.rows() == 0 {
        IntMatrix::zeros(0, m.rows())
    } else {
        hnf_basis(&kernel)
    }
}

// Column-by-column Euclidean elimination from the rightmost column. Returns
// the final row order (pivot rows by increasing pivot column, then zero rows)
// and the pivot columns.
fn echelon(h: &mut IntMatrix, mut u: Option<&mut IntMatrix>) -> (Vec<usize>, Vec<usize>) {
    let mut active: Vec<usize> = (0..h.rows()).collect();
    let mut found: Vec<(usize, usize)> = Vec::new();
    for c in (0..h.cols()).rev() {
        loop {
            let nz: Vec<usize> = active.iter().copied().filter(|&r| !h[(r, c)].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz
                .iter()
                .min_by(|&&a, &&b| h[(a, c)].abs().cmp(&h[(b, c)].abs()).then(a.cmp(&b)))
                .unwrap();
            if nz.len() == 1 {
                active.retain(|&r| r != p);
                found.push((p, c));
                break;
            }
            for &r in &nz {
                if r == p {
                    continue;
                }
                let q = &h[(r, c)] / &h[(p, c)];
                let neg = -q;
                h.add_row_multiple(r, p, &neg);
                if let Some(u) = u.as_deref_mut() {
                    u.add_row_multiple(r, p, &neg);
                }
            }
        }
    }
    found.reverse();
    let pivots: Vec<usize> = found.iter().map(|&(_, c)| c).collect();
    let mut order: Vec<usize> = found.iter().map(|&(r, _)| r).collect();
    order.extend(active);
    (order, pivots)
}

fn finish(h: IntMatrix, u: Option<IntMatrix>, order: Vec<usize>, pivots: Vec<usize>) -> Hnf {
    let mut h = h.select_rows(order.iter().copied());
    let mut u = u.map(|u| u.select_rows(order.iter().copied()));
    let rank = pivots.len();
    for (i, &c) in pivots.iter().enumerate() {
        if h[(i, c)].is_negative() {
            h.negate_row(i);
            if let Some(u) = u.as_mut() {
                u.negate_row(i);
            }
        }
    }
    for i in (0..rank).rev() {
        let c = pivots[i];
        let pivot = h[(i, c)].clone();
        for k in i + 1..rank {
            let q = h[(k, c)].div_floor(&pivot);
            if !q.is_zero() {
                let neg = -q;
                h.add_row_multiple(k, i, &neg);
                if let Some(u) = u.as_mut() {
                    u.add_row_multiple(k, i, &neg);
                }
            }
        }
    }
    let rows = h.rows();
    Hnf {
        h,
        u: u.unwrap_or_else(|| IntMatrix::zeros(0, rows)),
        rank,
        pivots,
    }
}

/// Solves `x * h = v` for integer `x`, where `h` is a basis in the canonical
/// form above (full row rank). Returns `None` if `v` is not in the row space.
pub fn solve_in_basis(h: &IntMatrix, pivots: &[usize], v: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut rest = v.to_vec();
    let mut x = vec![BigInt::zero(); h.rows()];
    for i in (0..h.rows()).rev() {
        let c = pivots[i];
        // Columns to the right of this pivot must already be cleared.
        let (q, r) = rest[c].div_rem(&h[(i, c)]);
        if !r.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for j in 0..=c {
                let d = &h[(i, j)] * &q;
                rest[j] -= d;
            }
        }
        x[i] = q;
    }
    if rest.iter().all(Zero::is_zero) {
        Some(x)
    } else {
        None
    }
}

/// Pivot columns of a matrix already in canonical form.
pub fn pivots_of(h: &IntMatrix) -> Vec<usize> {
    (0..h.rows())
        .map(|i| {
            (0..h.cols())
                .rev()
                .find(|&j| !h[(i, j)].is_zero())
                .expect("zero row in canonical basis")
        })
        .collect()
}
