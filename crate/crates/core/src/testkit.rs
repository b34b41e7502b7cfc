//! Canonical small instances and a seeded generator of random dihedral
//! instances for fuzzing.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{tel, validate_dihedral, ActionError, DihedralAction, FrameMap};
use crate::barnes_wall::{construct_bw, BwError};
use crate::lattice::{Frame, Lattice};
use crate::linalg::f2::{F2Matrix, F2Vec};
use crate::linalg::{DyadicMatrix, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TestkitError {
    #[error("unknown instance name {0:?} (expected M2, M4 or BW(d))")]
    UnknownName(String),
    #[error("half-rank must be at least 1")]
    InvalidSpec,
    #[error(transparent)]
    Bw(#[from] BwError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub seed: u64,
    pub n: usize,
    pub sublattice_depth: usize,
}

type SignedPerm = Vec<(usize, i64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    M2,
    M4,
}

impl Block {
    pub fn half_rank(self) -> usize {
        match self {
            Block::M2 => 1,
            Block::M4 => 2,
        }
    }

    /// `(t, u)` as signed permutations `images[i] = (j, sign)`.
    fn maps(self) -> (SignedPerm, SignedPerm) {
        match self {
            Block::M2 => (vec![(1, 1), (0, 1)], vec![(0, 1), (1, -1)]),
            // (a,b,c,d) -> (c,d,a,b) and (a,b,c,d) -> (b,a,-d,-c)
            Block::M4 => (
                vec![(2, 1), (3, 1), (0, 1), (1, 1)],
                vec![(1, 1), (0, 1), (3, -1), (2, -1)],
            ),
        }
    }
}

/// `M2`, `M4`, or `BW(d)` (also accepted: `BWd`).
pub fn canonical(name: &str) -> Result<DihedralAction, TestkitError> {
    let key = name.trim().to_ascii_uppercase();
    match key.as_str() {
        "M2" => Ok(blocks(&[(Block::M2, 1, 1)])?),
        "M4" => Ok(blocks(&[(Block::M4, 1, 1)])?),
        _ => {
            let digits = key
                .strip_prefix("BW")
                .map(|r| r.trim_start_matches('(').trim_end_matches(')'))
                .ok_or_else(|| TestkitError::UnknownName(name.into()))?;
            let d: u32 = digits.parse().map_err(|_| TestkitError::UnknownName(name.into()))?;
            let tw = construct_bw(d)?;
            Ok(validate_dihedral(tw.lattice(), tw.t(), &tw.u())?)
        }
    }
}

/// Orthogonal direct sum of blocks, each with optional sign flips `(block, ±1 on t, ±1 on u)`.
pub fn blocks(parts: &[(Block, i64, i64)]) -> Result<DihedralAction, ActionError> {
    let n: usize = parts.iter().map(|p| 2 * p.0.half_rank()).sum();
    let frame = Frame::identity(n);
    let mut t = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut off = 0;
    for &(b, st, su) in parts {
        let (bt, bu) = b.maps();
        t.extend(bt.iter().map(|&(j, s)| (j + off, s * st)));
        u.extend(bu.iter().map(|&(j, s)| (j + off, s * su)));
        off += bt.len();
    }
    let l = Lattice::standard(frame.clone());
    let t = FrameMap::signed_permutation(frame.clone(), &t)?;
    let u = FrameMap::signed_permutation(frame, &u)?;
    validate_dihedral(&l, &t, &u)
}

/// Orthogonal direct sum of two actions.
pub fn direct_sum(a: &DihedralAction, b: &DihedralAction) -> Result<DihedralAction, ActionError> {
    let frame = a.lattice().frame().direct_sum(b.lattice().frame());
    let basis = a.lattice().basis().block_diag(b.lattice().basis());
    let l = Lattice::new(frame.clone(), &basis)?;
    let t = FrameMap::diagonal_lift(a.t(), b.t(), frame.clone());
    let u = FrameMap::diagonal_lift(a.u(), b.u(), frame);
    validate_dihedral(&l, &t, &u)
}

pub fn random_instance(spec: &InstanceSpec) -> Result<DihedralAction, TestkitError> {
    if spec.n == 0 {
        return Err(TestkitError::InvalidSpec);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts = Vec::new();
    let mut left = spec.n;
    while left > 0 {
        let b = if left >= 2 && rng.gen_bool(0.5) { Block::M4 } else { Block::M2 };
        let st = if rng.gen_bool(0.25) { -1 } else { 1 };
        let su = if rng.gen_bool(0.25) { -1 } else { 1 };
        parts.push((b, st, su));
        left -= b.half_rank();
    }
    parts.shuffle(&mut rng);
    let mut action = blocks(&parts)?;
    for _ in 0..spec.sublattice_depth {
        action = if rng.gen_bool(0.75) {
            refine(&action, &mut rng)?
        } else {
            enlarge(&action, &mut rng)?
        };
    }
    Ok(action)
}

/// Matrix of a map in the lattice basis, reduced mod 2.
fn mod2_in_basis(l: &Lattice, g: &FrameMap) -> F2Matrix {
    let coords = l
        .coordinates_of_rows(&l.basis().mul(g.matrix()))
        .expect("map stabilizes the lattice");
    F2Matrix::from_int(&coords)
}

fn random_nonzero_combination(basis: &[F2Vec], rng: &mut ChaCha8Rng) -> Option<F2Vec> {
    if basis.is_empty() {
        return None;
    }
    loop {
        let mut v = F2Vec::zeros(basis[0].len());
        for b in basis {
            if rng.gen_bool(0.5) {
                v.xor_assign(b);
            }
        }
        if !v.is_zero() {
            return Some(v);
        }
    }
}

/// Replaces `L` by a random D-invariant index-2 sublattice, containing
/// `Tel(t)` whenever such a sublattice exists.
pub fn refine(action: &DihedralAction, rng: &mut ChaCha8Rng) -> Result<DihedralAction, ActionError> {
    let l = action.lattice();
    let n = l.rank();
    let gt = mod2_in_basis(l, action.t());
    let gu = mod2_in_basis(l, action.u());
    let id = F2Matrix::identity(n);
    // A functional c (column) is D-invariant iff (g - 1) c = 0 for g = t, u.
    let invariant = gt.add(&id).stack(&gu.add(&id));
    let tel_rows = l
        .coordinates_of_rows(tel(l, action.t())?.basis())
        .expect("Tel lies in L");
    let w = F2Matrix::from_int(&tel_rows);
    let with_tel = invariant.stack(&w);
    // Columns c with M c = 0 are the left kernel of M^T.
    let mut candidates = transpose(&with_tel).left_kernel();
    if candidates.is_empty() {
        candidates = transpose(&invariant).left_kernel();
    }
    let c = random_nonzero_combination(&candidates, rng).expect("a 2-group fixes a nonzero functional");
    // Sublattice {x : x . c = 0 mod 2}: keep basis vectors with c_i = 0, and
    // pairwise sums / doubles for the others.
    let pivot = (0..n).find(|&i| c.get(i)).unwrap();
    let mut gens = IntMatrix::zeros(n, n);
    for i in 0..n {
        if i == pivot {
            gens[(i, i)] = 2.into();
        } else {
            gens[(i, i)] = 1.into();
            if c.get(i) {
                gens[(i, pivot)] = 1.into();
            }
        }
    }
    let basis = DyadicMatrix::from_int(gens).mul(l.basis());
    let sub = Lattice::new(l.frame().clone(), &basis)?;
    validate_dihedral(&sub, action.t(), action.u())
}

/// Replaces `L` by `L + Z v/2` for a random `v` fixed by D modulo `2L`.
pub fn enlarge(action: &DihedralAction, rng: &mut ChaCha8Rng) -> Result<DihedralAction, ActionError> {
    let l = action.lattice();
    let n = l.rank();
    let gt = mod2_in_basis(l, action.t());
    let gu = mod2_in_basis(l, action.u());
    let id = F2Matrix::identity(n);
    // v (g - 1) = 0 for both generators: left kernel of [(t-1) | (u-1)].
    let m = hcat(&gt.add(&id), &gu.add(&id));
    let fixed = m.left_kernel();
    let v = random_nonzero_combination(&fixed, rng).expect("a 2-group fixes a nonzero vector");
    let coords: Vec<num_bigint::BigInt> = v.to_ints();
    let row = DyadicMatrix::from_int(IntMatrix::from_rows(&[coords])).mul(l.basis()).scale_pow2(-1);
    let over = l.sum_rows(&row)?;
    validate_dihedral(&over, action.t(), action.u())
}

fn transpose(m: &F2Matrix) -> F2Matrix {
    let rows = m.num_rows();
    let cols = m.cols();
    let out = (0..cols)
        .map(|j| {
            let mut v = F2Vec::zeros(rows);
            for (i, r) in m.rows().iter().enumerate() {
                v.set(i, r.get(j));
            }
            v
        })
        .collect();
    F2Matrix::new(rows, out)
}

fn hcat(a: &F2Matrix, b: &F2Matrix) -> F2Matrix {
    let cols = a.cols() + b.cols();
    let rows = a
        .rows()
        .iter()
        .zip(b.rows())
        .map(|(x, y)| {
            let mut v = F2Vec::zeros(cols);
            for j in 0..a.cols() {
                v.set(j, x.get(j));
            }
            for j in 0..b.cols() {
                v.set(a.cols() + j, y.get(j));
            }
            v
        })
        .collect();
    F2Matrix::new(cols, rows)
}

/// Frame shared by all block instances of a given rank.
pub fn identity_frame(rank: usize) -> Arc<Frame> {
    Frame::identity(rank)
}
