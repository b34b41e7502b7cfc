//! Shortest vectors and bounded-norm enumeration.
//!
//! Depth-first Fincke-Pohst enumeration over an exact LDL decomposition of the
//! Gram matrix. Pruning runs on outward-rounded `f64` intervals derived from
//! the exact decomposition, so a branch is only cut when its lower bound
//! provably exceeds the target; every surviving leaf is re-checked with exact
//! integer arithmetic. The preprocessing is integral pairwise size reduction.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::lattice::Lattice;
use crate::linalg::IntMatrix;

pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvpError {
    #[error("enumeration budget of {budget} nodes exceeded (best norm so far: {best:?})")]
    BudgetExceeded { budget: u64, best: Option<BigRational> },
    #[error("lattice has rank 0")]
    ZeroLattice,
}

/// Certified minimum: `norm` is the exact minimum nonzero norm, attained by
/// `witness` (coordinates in the lattice's canonical basis).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinNorm {
    pub norm: BigRational,
    pub witness: Vec<BigInt>,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormBoundReport {
    pub bound: BigInt,
    /// One representative per `±` pair, in lattice-basis coordinates, sorted
    /// by norm and then lexicographically.
    pub vectors: Vec<Vec<BigInt>>,
    pub norms: Vec<BigRational>,
    pub exhaustive: bool,
    pub nodes: u64,
}

pub fn min_norm(lattice: &Lattice, budget: u64) -> Result<MinNorm, SvpError> {
    if lattice.rank() == 0 {
        return Err(SvpError::ZeroLattice);
    }
    let (gram, shift) = integral_gram(lattice);
    let e = Enumerator::new(&gram);
    let scale = BigRational::from_integer(BigInt::one() << shift);
    match e.minimum(budget) {
        Ok((n, x, nodes)) => Ok(MinNorm {
            norm: BigRational::from_integer(n) / scale,
            witness: x,
            nodes,
        }),
        Err(best) => Err(SvpError::BudgetExceeded {
            budget,
            best: Some(BigRational::from_integer(best) / scale),
        }),
    }
}

/// All nonzero vectors of norm at most `bound`, up to sign.
pub fn vectors_below(lattice: &Lattice, bound: &BigInt, budget: u64) -> NormBoundReport {
    let (gram, shift) = integral_gram(lattice);
    let scaled = bound << shift;
    let e = Enumerator::new(&gram);
    let (found, exhaustive, nodes) = e.below(&scaled, budget);
    let scale = BigRational::from_integer(BigInt::one() << shift);
    let mut rows: Vec<(BigInt, Vec<BigInt>)> = found;
    rows.sort();
    NormBoundReport {
        bound: bound.clone(),
        norms: rows.iter().map(|(n, _)| BigRational::from_integer(n.clone()) / scale.clone()).collect(),
        vectors: rows.into_iter().map(|(_, v)| v).collect(),
        exhaustive,
        nodes,
    }
}

// Gram numerator and its power-of-two denominator.
fn integral_gram(lattice: &Lattice) -> (IntMatrix, u32) {
    let g = lattice.gram();
    (g.numerator().clone(), g.log2_den())
}

/// Exact norm `x G x^T` of integer coordinates.
pub fn quadratic_form(gram: &IntMatrix, x: &[BigInt]) -> BigInt {
    let gx = gram.apply_row(x);
    gx.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[derive(Clone, Copy, Debug)]
struct Iv {
    lo: f64,
    hi: f64,
}

impl Iv {
    fn point(v: f64) -> Iv {
        Iv { lo: v, hi: v }
    }

    fn out(lo: f64, hi: f64) -> Iv {
        Iv {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    // Enclosure of an exact rational.
    fn of(r: &BigRational) -> Iv {
        let v = r.to_f64().expect("finite");
        let slack = v.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE;
        Iv::out(v - slack, v + slack)
    }

    fn add(self, o: Iv) -> Iv {
        Iv::out(self.lo + o.lo, self.hi + o.hi)
    }

    fn mul(self, o: Iv) -> Iv {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Iv::out(lo, hi)
    }

    fn square(self) -> Iv {
        if self.lo >= 0.0 {
            Iv::out(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Iv::out(self.hi * self.hi, self.lo * self.lo)
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Iv { lo: 0.0, hi: (m * m).next_up() }
        }
    }
}

struct Enumerator {
    n: usize,
    /// Reduced Gram in the working basis.
    gram: IntMatrix,
    /// Working basis = `transform * canonical basis`.
    transform: IntMatrix,
    q: Vec<Iv>,
    /// `mu[i][j]` for `j > i`.
    mu: Vec<Vec<Iv>>,
}

impl Enumerator {
    fn new(gram: &IntMatrix) -> Self {
        let n = gram.rows();
        let (g, t) = size_reduce(gram);
        let (g, t) = sort_by_decreasing_diagonal(g, t);
        let (q, mu) = ldl(&g);
        Enumerator {
            n,
            q: q.iter().map(Iv::of).collect(),
            mu: mu.iter().map(|row| row.iter().map(Iv::of).collect()).collect(),
            gram: g,
            transform: t,
        }
    }

    fn to_canonical(&self, x: &[i64]) -> Vec<BigInt> {
        let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        let mut v = self.transform.apply_row(&big);
        // Keep a deterministic sign: first nonzero coordinate positive.
        if v.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative()) {
            for c in v.iter_mut() {
                *c = -c.clone();
            }
        }
        v
    }

    fn exact_norm(&self, x: &[i64]) -> BigInt {
        let big: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        quadratic_form(&self.gram, &big)
    }

    /// Exact minimum, or the best bound found when the budget runs out.
    fn minimum(&self, budget: u64) -> Result<(BigInt, Vec<BigInt>, u64), BigInt> {
        let k = (0..self.n).min_by_key(|&i| (self.gram[(i, i)].clone(), i)).unwrap();
        let mut best_x = vec![0i64; self.n];
        best_x[k] = 1;
        let mut best = self.gram[(k, k)].clone();
        let mut nodes = 0u64;
        let mut exceeded = false;
        {
            let mut visit = |x: &[i64], bound: &mut BigInt| {
                let v = self.exact_norm(x);
                if v < *bound {
                    *bound = v;
                    best_x.copy_from_slice(x);
                }
            };
            self.search(&mut best, budget, &mut nodes, &mut exceeded, &mut visit);
        }
        if exceeded {
            return Err(best);
        }
        Ok((best, self.to_canonical(&best_x), nodes))
    }

    fn below(&self, bound: &BigInt, budget: u64) -> (Vec<(BigInt, Vec<BigInt>)>, bool, u64) {
        let mut found = Vec::new();
        let mut nodes = 0u64;
        let mut exceeded = false;
        if self.n > 0 && !bound.is_negative() {
            let mut b = bound.clone();
            let mut visit = |x: &[i64], bound: &mut BigInt| {
                let v = self.exact_norm(x);
                if v <= *bound {
                    found.push((v, self.to_canonical(x)));
                }
            };
            self.search(&mut b, budget, &mut nodes, &mut exceeded, &mut visit);
        }
        (found, !exceeded, nodes)
    }

    // Depth-first enumeration from the last coordinate down. `bound` may shrink
    // inside `visit`; pruning reads it afresh at every level.
    fn search(
        &self,
        bound: &mut BigInt,
        budget: u64,
        nodes: &mut u64,
        exceeded: &mut bool,
        visit: &mut dyn FnMut(&[i64], &mut BigInt),
    ) {
        let n = self.n;
        let mut x = vec![0i64; n];
        let mut partial = vec![Iv::point(0.0); n + 1];
        let mut hi = vec![0i64; n];
        let mut bound_f = upper_f64(bound);
        // Descend into `level - 1`, initialising its range.
        let enter = |i: usize, x: &mut [i64], hi: &mut [i64], partial: &[Iv], bound_f: f64| -> bool {
            let c = self.center(i, x);
            let rem = bound_f - partial[i + 1].lo;
            if rem < 0.0 {
                return false;
            }
            let s = (rem / self.q[i].lo).sqrt().next_up() * (1.0 + 1e-12) + 1e-9;
            let mut lo = (-c.hi - s).floor() as i64;
            let top = (-c.lo + s).ceil() as i64;
            if x[i + 1..].iter().all(|&v| v == 0) {
                lo = lo.max(0);
            }
            if lo > top {
                return false;
            }
            x[i] = lo - 1;
            hi[i] = top;
            true
        };
        if !enter(n - 1, &mut x, &mut hi, &partial, bound_f) {
            return;
        }
        let mut level = n - 1;
        loop {
            let i = level;
            // Next value at this level.
            x[i] += 1;
            if x[i] > hi[i] {
                if i + 1 == n {
                    return;
                }
                level += 1;
                continue;
            }
            let c = self.center(i, &x);
            let t = self.q[i].mul(c.add(Iv::point(x[i] as f64)).square());
            let p = partial[i + 1].add(t);
            if p.lo > bound_f {
                continue;
            }
            *nodes += 1;
            if *nodes > budget {
                *exceeded = true;
                return;
            }
            partial[i] = p;
            if i == 0 {
                if x.iter().any(|&v| v != 0) {
                    visit(&x, bound);
                    bound_f = upper_f64(bound);
                }
                continue;
            }
            if enter(i - 1, &mut x, &mut hi, &partial, bound_f) {
                level = i - 1;
            }
        }
    }

    fn center(&self, i: usize, x: &[i64]) -> Iv {
        let mut c = Iv::point(0.0);
        for j in i + 1..self.n {
            if x[j] != 0 {
                c = c.add(self.mu[i][j].mul(Iv::point(x[j] as f64)));
            }
        }
        c
    }
}

fn upper_f64(b: &BigInt) -> f64 {
    let v = b.to_f64().unwrap_or(f64::INFINITY);
    (v + v.abs() * 4.0 * f64::EPSILON).next_up()
}

/// Repeated integral pairwise reduction `b_i -= r b_j` whenever it strictly
/// lowers the norm of `b_i`. Returns the new Gram and the transform.
pub fn size_reduce(gram: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let n = gram.rows();
    let mut g = gram.clone();
    let mut t = IntMatrix::identity(n);
    let two = BigInt::from(2);
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || g[(j, j)].is_zero() {
                    continue;
                }
                // r = round(g_ij / g_jj)
                let num = &g[(i, j)] * &two + &g[(j, j)];
                let den = &g[(j, j)] * &two;
                let r = num_integer::Integer::div_floor(&num, &den);
                if r.is_zero() {
                    continue;
                }
                let new_norm = &g[(i, i)] - &two * &r * &g[(i, j)] + &r * &r * &g[(j, j)];
                if new_norm >= g[(i, i)] {
                    continue;
                }
                let neg = -r;
                // rows then columns of the Gram
                g.add_row_multiple(i, j, &neg);
                g.add_col_multiple(i, j, &neg);
                t.add_row_multiple(i, j, &neg);
                changed = true;
            }
        }
        if !changed {
            return (g, t);
        }
    }
}

fn sort_by_decreasing_diagonal(g: IntMatrix, t: IntMatrix) -> (IntMatrix, IntMatrix) {
    let n = g.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g[(b, b)].cmp(&g[(a, a)]).then(a.cmp(&b)));
    let mut out = IntMatrix::zeros(n, n);
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            out[(a, b)] = g[(i, j)].clone();
        }
    }
    (out, t.select_rows(order.iter().copied()))
}

/// `Q(x) = sum_i q_i (x_i + sum_{j>i} mu_ij x_j)^2`, eliminating the first
/// coordinate first so enumeration can run from the last one.
pub fn ldl(g: &IntMatrix) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let n = g.rows();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from_integer(g[(i, j)].clone())).collect())
        .collect();
    let mut q = vec![BigRational::zero(); n];
    let mut mu = vec![vec![BigRational::zero(); n]; n];
    for k in 0..n {
        q[k] = a[k][k].clone();
        for j in k + 1..n {
            mu[k][j] = &a[k][j] / &q[k];
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let d = &mu[k][i] * &a[k][j];
                a[i][j] -= d;
            }
        }
    }
    (q, mu)
}
