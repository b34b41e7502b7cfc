//! Linear algebra over the two-element field, with rows packed into `u64` words.

use num_bigint::BigInt;

use super::IntMatrix;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2Vec {
    len: usize,
    words: Vec<u64>,
}

impl F2Vec {
    pub fn zeros(len: usize) -> Self {
        F2Vec {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn from_ints(xs: &[BigInt]) -> Self {
        let mut v = Self::zeros(xs.len());
        for (i, x) in xs.iter().enumerate() {
            v.set(i, x.bit(0));
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        let mask = 1u64 << (i % 64);
        if b {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &F2Vec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit.
    pub fn leading(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| k * 64 + w.trailing_zeros() as usize)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn to_ints(&self) -> Vec<BigInt> {
        (0..self.len).map(|i| BigInt::from(u8::from(self.get(i)))).collect()
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// A matrix over the two-element field, stored as a list of rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F2Matrix {
    cols: usize,
    rows: Vec<F2Vec>,
}

impl F2Matrix {
    pub fn new(cols: usize, rows: Vec<F2Vec>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols));
        F2Matrix { cols, rows }
    }

    pub fn from_int(m: &IntMatrix) -> Self {
        let rows = (0..m.rows()).map(|i| F2Vec::from_ints(m.row(i))).collect();
        F2Matrix { cols: m.cols(), rows }
    }

    pub fn identity(n: usize) -> Self {
        F2Matrix {
            cols: n,
            rows: (0..n).map(|i| F2Vec::unit(n, i)).collect(),
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[F2Vec] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &F2Vec) -> F2Vec {
        assert_eq!(v.len(), self.rows.len());
        let mut out = F2Vec::zeros(self.cols);
        for (i, r) in self.rows.iter().enumerate() {
            if v.get(i) {
                out.xor_assign(r);
            }
        }
        out
    }

    pub fn mul(&self, other: &F2Matrix) -> F2Matrix {
        F2Matrix {
            cols: other.cols,
            rows: self.rows.iter().map(|r| other.apply(r)).collect(),
        }
    }

    pub fn add(&self, other: &F2Matrix) -> F2Matrix {
        F2Matrix {
            cols: self.cols,
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| {
                    let mut r = a.clone();
                    r.xor_assign(b);
                    r
                })
                .collect(),
        }
    }

    pub fn stack(&self, other: &F2Matrix) -> F2Matrix {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        F2Matrix { cols: self.cols.max(other.cols), rows }
    }

    /// Reduced row echelon form of the row space (zero rows dropped).
    pub fn rref(&self) -> F2Matrix {
        let mut rows: Vec<F2Vec> = self.rows.clone();
        let mut out: Vec<F2Vec> = Vec::new();
        for c in 0..self.cols {
            let Some(p) = rows.iter().position(|r| r.get(c)) else {
                continue;
            };
            let pivot = rows.swap_remove(p);
            for r in rows.iter_mut().chain(out.iter_mut()) {
                if r.get(c) {
                    r.xor_assign(&pivot);
                }
            }
            out.push(pivot);
        }
        F2Matrix {
            cols: self.cols,
            rows: out,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rows.len()
    }

    /// Basis of `{x : x * self = 0}`.
    pub fn left_kernel(&self) -> Vec<F2Vec> {
        let m = self.rows.len();
        // Row-reduce [self | I] and keep the identity parts of zero rows.
        let mut aug: Vec<(F2Vec, F2Vec)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), F2Vec::unit(m, i)))
            .collect();
        let mut done = 0;
        for c in 0..self.cols {
            let Some(p) = (done..aug.len()).find(|&i| aug[i].0.get(c)) else {
                continue;
            };
            aug.swap(done, p);
            let (pv, pu) = aug[done].clone();
            for (i, (r, u)) in aug.iter_mut().enumerate() {
                if i != done && r.get(c) {
                    r.xor_assign(&pv);
                    u.xor_assign(&pu);
                }
            }
            done += 1;
        }
        let kernel: Vec<F2Vec> = aug.into_iter().skip(done).map(|(_, u)| u).collect();
        F2Matrix::new(m, kernel).rref().rows
    }

    pub fn contains(&self, v: &F2Vec) -> bool {
        let mut r = self.rref();
        let base = r.rows.len();
        r.rows.push(v.clone());
        r.rank() == base
    }
}

/// Basis of the left null space of `m` reduced modulo 2.
pub fn kernel_mod2(m: &IntMatrix) -> Vec<F2Vec> {
    F2Matrix::from_int(m).left_kernel()
}

/// All subspaces of `F_2^dim`, each given by its reduced echelon basis, in
/// order of increasing dimension and then by pivot pattern and free bits.
pub fn enumerate_subspaces(dim: usize, mut visit: impl FnMut(&[F2Vec])) {
    for k in 0..=dim {
        let mut pivots: Vec<usize> = (0..k).collect();
        loop {
            enumerate_with_pivots(dim, &pivots, &mut visit);
            if !next_combination(&mut pivots, dim) {
                break;
            }
        }
    }
}

fn enumerate_with_pivots(dim: usize, pivots: &[usize], visit: &mut impl FnMut(&[F2Vec])) {
    // Free positions: in row i, columns after pivots[i] that are not pivots.
    let mut free: Vec<(usize, usize)> = Vec::new();
    for (i, &p) in pivots.iter().enumerate() {
        for c in p + 1..dim {
            if !pivots.contains(&c) {
                free.push((i, c));
            }
        }
    }
    assert!(free.len() < 64, "subspace enumeration too large");
    for mask in 0u64..(1u64 << free.len()) {
        let mut rows: Vec<F2Vec> = pivots.iter().map(|&p| F2Vec::unit(dim, p)).collect();
        for (b, &(i, c)) in free.iter().enumerate() {
            if mask >> b & 1 == 1 {
                rows[i].set(c, true);
            }
        }
        visit(&rows);
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Number of subspaces of `F_2^dim` (sum of Gaussian binomials at q = 2).
pub fn subspace_count(dim: usize) -> u64 {
    (0..=dim).map(|k| gaussian_binomial_2(dim, k)).sum()
}

pub fn gaussian_binomial_2(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (1u128 << (n - i)) - 1;
        den *= (1u128 << (i + 1)) - 1;
    }
    (num / den) as u64
}
