use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::IntMatrix;

/// Invariant factors of `m` (diagonal of its Smith normal form).
///
/// Returns `min(rows, cols)` non-negative entries, each dividing the next;
/// trailing zeros account for rank deficiency.
pub fn snf(m: &IntMatrix) -> Vec<BigInt> {
    let mut a = m.clone();
    let n = m.rows().min(m.cols());
    let mut diag = Vec::with_capacity(n);
    for t in 0..n {
        let Some((pi, pj)) = min_abs_entry(&a, t) else {
            break;
        };
        a.swap_rows(t, pi);
        a.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..a.rows() {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let q = &a[(i, t)] / &a[(t, t)];
                a.add_row_multiple(i, t, &-q);
                if !a[(i, t)].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..a.cols() {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let q = &a[(t, j)] / &a[(t, t)];
                a.add_col_multiple(j, t, &-q);
                if !a[(t, j)].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                let (pi, pj) = min_abs_entry(&a, t).expect("nonzero pivot block");
                a.swap_rows(t, pi);
                a.swap_cols(t, pj);
                continue;
            }
            // Row and column cleared; enforce divisibility of the remaining block.
            let p = a[(t, t)].clone();
            let bad = (t + 1..a.rows()).find(|&i| {
                (t + 1..a.cols()).any(|j| !a[(i, j)].is_multiple_of(&p))
            });
            match bad {
                Some(i) => {
                    let one = BigInt::from(1);
                    a.add_row_multiple(t, i, &one);
                }
                None => break,
            }
        }
        diag.push(a[(t, t)].abs());
    }
    diag.resize(n, BigInt::zero());
    diag
}

fn min_abs_entry(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..a.rows() {
        for j in t..a.cols() {
            let x = &a[(i, j)];
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < a[(bi, bj)].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn identity_factors() {
        assert_eq!(snf(&IntMatrix::identity(4)), ints(&[1, 1, 1, 1]));
    }

    #[test]
    fn diagonal_already_smith() {
        assert_eq!(snf(&IntMatrix::diagonal(&[2, 4])), ints(&[2, 4]));
    }

    #[test]
    fn needs_divisibility_fix() {
        assert_eq!(snf(&IntMatrix::diagonal(&[4, 6])), ints(&[2, 12]));
    }

    #[test]
    fn a2_gram() {
        assert_eq!(snf(&IntMatrix::from_i64(&[&[2, 1], &[1, 2]])), ints(&[1, 3]));
    }

    #[test]
    fn rectangular_and_singular() {
        assert_eq!(snf(&IntMatrix::from_i64(&[&[2, 4, 6]])), ints(&[2]));
        assert_eq!(snf(&IntMatrix::from_i64(&[&[1, 2], &[2, 4]])), ints(&[1, 0]));
        assert_eq!(snf(&IntMatrix::zeros(2, 3)), ints(&[0, 0]));
    }
}
