use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{IntMatrix, LinalgError};

/// A matrix of dyadic rationals, `numerator / 2^log2_den`.
///
/// Always stored reduced: either `log2_den == 0` or some numerator entry is
/// odd. Two equal matrices therefore have identical representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicMatrix {
    num: IntMatrix,
    log2_den: u32,
}

impl DyadicMatrix {
    pub fn new(num: IntMatrix, log2_den: u32) -> Self {
        let mut m = DyadicMatrix { num, log2_den };
        m.reduce();
        m
    }

    pub fn from_int(num: IntMatrix) -> Self {
        DyadicMatrix { num, log2_den: 0 }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_int(IntMatrix::identity(n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_int(IntMatrix::zeros(rows, cols))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.log2_den = 0;
            return;
        }
        let mut shift = 0u32;
        while shift < self.log2_den {
            let all_div = self
                .num
                .entries()
                .iter()
                .all(|x| x.is_zero() || x.trailing_zeros().unwrap_or(0) > u64::from(shift));
            if !all_div {
                break;
            }
            shift += 1;
        }
        if shift > 0 {
            let data = self.num.entries().iter().map(|x| x >> shift as usize).collect();
            self.num = IntMatrix::from_flat(self.num.rows(), self.num.cols(), data);
            self.log2_den -= shift;
        }
    }

    pub fn numerator(&self) -> &IntMatrix {
        &self.num
    }

    pub fn log2_den(&self) -> u32 {
        self.log2_den
    }

    pub fn rows(&self) -> usize {
        self.num.rows()
    }

    pub fn cols(&self) -> usize {
        self.num.cols()
    }

    pub fn is_integral(&self) -> bool {
        self.log2_den == 0
    }

    pub fn is_identity(&self) -> bool {
        self.log2_den == 0 && self.num.is_identity()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Numerator rescaled to denominator `2^k` (`k >= log2_den`).
    pub fn numerator_at(&self, k: u32) -> IntMatrix {
        assert!(k >= self.log2_den);
        self.num.shl(k - self.log2_den)
    }

    /// Integer matrix if the denominator is 1.
    pub fn to_int(&self) -> Option<IntMatrix> {
        self.is_integral().then(|| self.num.clone())
    }

    pub fn entry(&self, i: usize, j: usize) -> BigRational {
        BigRational::new(self.num[(i, j)].clone(), BigInt::one() << self.log2_den as usize)
    }

    pub fn transpose(&self) -> Self {
        DyadicMatrix {
            num: self.num.transpose(),
            log2_den: self.log2_den,
        }
    }

    pub fn mul(&self, other: &DyadicMatrix) -> Self {
        DyadicMatrix::new(self.num.mul(&other.num), self.log2_den + other.log2_den)
    }

    pub fn mul_int(&self, other: &IntMatrix) -> Self {
        DyadicMatrix::new(self.num.mul(other), self.log2_den)
    }

    pub fn add(&self, other: &DyadicMatrix) -> Self {
        let k = self.log2_den.max(other.log2_den);
        DyadicMatrix::new(self.numerator_at(k).add(&other.numerator_at(k)), k)
    }

    pub fn sub(&self, other: &DyadicMatrix) -> Self {
        let k = self.log2_den.max(other.log2_den);
        DyadicMatrix::new(self.numerator_at(k).sub(&other.numerator_at(k)), k)
    }

    pub fn neg(&self) -> Self {
        DyadicMatrix {
            num: self.num.neg(),
            log2_den: self.log2_den,
        }
    }

    /// Multiplies by `2^k` (k may be negative).
    pub fn scale_pow2(&self, k: i32) -> Self {
        if k >= 0 {
            let k = k as u32;
            if k <= self.log2_den {
                DyadicMatrix::new(self.num.clone(), self.log2_den - k)
            } else {
                DyadicMatrix::new(self.num.shl(k - self.log2_den), 0)
            }
        } else {
            DyadicMatrix::new(self.num.clone(), self.log2_den + k.unsigned_abs())
        }
    }

    pub fn vstack(&self, other: &DyadicMatrix) -> Self {
        let k = self.log2_den.max(other.log2_den);
        DyadicMatrix::new(self.numerator_at(k).vstack(&other.numerator_at(k)), k)
    }

    pub fn hstack(&self, other: &DyadicMatrix) -> Self {
        let k = self.log2_den.max(other.log2_den);
        DyadicMatrix::new(self.numerator_at(k).hstack(&other.numerator_at(k)), k)
    }

    pub fn select_rows(&self, idx: impl IntoIterator<Item = usize>) -> Self {
        DyadicMatrix::new(self.num.select_rows(idx), self.log2_den)
    }

    pub fn select_cols(&self, range: std::ops::Range<usize>) -> Self {
        DyadicMatrix::new(self.num.select_cols(range), self.log2_den)
    }

    /// Block diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &DyadicMatrix) -> Self {
        let top = self.hstack(&DyadicMatrix::zeros(self.rows(), other.cols()));
        let bottom = DyadicMatrix::zeros(other.rows(), self.cols()).hstack(other);
        top.vstack(&bottom)
    }

    /// Row `i` as exact rationals.
    pub fn row_rational(&self, i: usize) -> Vec<BigRational> {
        (0..self.cols()).map(|j| self.entry(i, j)).collect()
    }

    /// Exact determinant as a rational number.
    pub fn det(&self) -> BigRational {
        let n = self.rows() as u32;
        BigRational::new(self.num.det(), BigInt::one() << (self.log2_den * n) as usize)
    }
}

/// Exact inverse of a square dyadic matrix whose determinant is `±2^j`.
pub fn invert_dyadic(m: &DyadicMatrix) -> Result<DyadicMatrix, LinalgError> {
    if m.rows() != m.cols() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let det = m.numerator().det();
    if det.is_zero() {
        return Err(LinalgError::Singular);
    }
    if !is_power_of_two(&det.abs()) {
        return Err(LinalgError::NonDyadicInverse { det });
    }
    // Gauss-Jordan over Q on the numerator; result is num^{-1} * 2^k.
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = m
                .numerator()
                .row(i)
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect();
            row.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).ok_or(LinalgError::Singular)?;
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let factor = a[r][c].clone();
            let pivot_row = a[c].clone();
            for (x, y) in a[r].iter_mut().zip(pivot_row.iter()) {
                *x -= &factor * y;
            }
        }
    }
    // Common denominator of the inverse: a power of two dividing |det|.
    let mut k = 0u32;
    for row in &a {
        for x in &row[n..] {
            let den = x.denom();
            debug_assert!(is_power_of_two(den));
            k = k.max(den.bits().saturating_sub(1) as u32);
        }
    }
    let mut data = Vec::with_capacity(n * n);
    for row in &a {
        for x in &row[n..] {
            let scaled = x * BigRational::from_integer(BigInt::one() << k as usize);
            debug_assert!(scaled.is_integer());
            data.push(scaled.to_integer());
        }
    }
    let inv_num = IntMatrix::from_flat(n, n, data);
    // (num / 2^e)^{-1} = 2^e * num^{-1} = inv_num * 2^(e - k)
    Ok(DyadicMatrix::new(inv_num, 0).scale_pow2(m.log2_den() as i32 - k as i32))
}

pub fn is_power_of_two(x: &BigInt) -> bool {
    x.is_positive() && x.trailing_zeros() == Some(x.bits() - 1)
}

/// `log2(x)` when `x` is a positive power of two.
pub fn log2_exact(x: &BigInt) -> Option<u64> {
    is_power_of_two(x).then(|| x.bits() - 1)
}

impl fmt::Debug for DyadicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}) / 2^{}", self.num, self.log2_den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_canonical() {
        let a = DyadicMatrix::new(IntMatrix::from_i64(&[&[2, 4], &[6, 8]]), 1);
        assert_eq!(a, DyadicMatrix::from_int(IntMatrix::from_i64(&[&[1, 2], &[3, 4]])));
        let b = DyadicMatrix::new(IntMatrix::from_i64(&[&[4, 0], &[0, 4]]), 3);
        assert_eq!(b.log2_den(), 1);
        assert!(DyadicMatrix::new(IntMatrix::zeros(2, 2), 5).is_integral());
    }

    #[test]
    fn inverse_examples() {
        let id = DyadicMatrix::identity(3);
        assert_eq!(invert_dyadic(&id).unwrap(), id);

        let two = DyadicMatrix::from_int(IntMatrix::diagonal(&[2, 2]));
        assert_eq!(invert_dyadic(&two).unwrap(), DyadicMatrix::identity(2).scale_pow2(-1));

        let h = DyadicMatrix::from_int(IntMatrix::from_i64(&[&[1, 1], &[1, -1]]));
        let inv = invert_dyadic(&h).unwrap();
        assert_eq!(inv, h.scale_pow2(-1));
        assert!(h.mul(&inv).is_identity());
    }

    #[test]
    fn inverse_errors() {
        let sing = DyadicMatrix::from_int(IntMatrix::from_i64(&[&[1, 2], &[2, 4]]));
        assert_eq!(invert_dyadic(&sing), Err(LinalgError::Singular));
        let three = DyadicMatrix::from_int(IntMatrix::from_i64(&[&[2, 1], &[1, 2]]));
        assert!(matches!(invert_dyadic(&three), Err(LinalgError::NonDyadicInverse { .. })));
    }

    #[test]
    fn inverse_of_fractional_matrix() {
        let m = DyadicMatrix::new(IntMatrix::from_i64(&[&[1, 1], &[0, 2]]), 1);
        let inv = invert_dyadic(&m).unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(inv.mul(&m).is_identity());
    }

    #[test]
    fn powers_of_two() {
        assert!(is_power_of_two(&BigInt::from(1)));
        assert!(is_power_of_two(&BigInt::from(64)));
        assert!(!is_power_of_two(&BigInt::from(12)));
        assert!(!is_power_of_two(&BigInt::from(0)));
        assert_eq!(log2_exact(&BigInt::from(256)), Some(8));
    }
}
