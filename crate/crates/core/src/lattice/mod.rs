//! Full-rank lattices inside a framed inner-product space.
//!
//! A [`Frame`] is `Q^N` with an integral positive-definite Gram matrix. A
//! [`Lattice`] is a full-rank subgroup of the frame given by a dyadic basis,
//! kept in canonical Hermite form so that equal lattices compare equal.
//! Lower-rank objects (eigenlattices, commutator images) are carried as an
//! [`EmbeddedLattice`]: a full-rank lattice in a sub-frame plus the map back.

mod embedded;

pub use embedded::EmbeddedLattice;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::linalg::hnf::{hnf_basis, left_kernel, solve_in_basis};
use crate::linalg::{invert_dyadic, snf, DyadicMatrix, IntMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("lattices live in different frames")]
    FrameMismatch,
    #[error("not a sublattice")]
    NotASublattice,
    #[error("lattice is not integral")]
    NotIntegral,
    #[error("generators span rank {rank}, expected full rank {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("frame Gram matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Ambient space `Q^N` with an integral symmetric positive-definite form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    gram: IntMatrix,
}

impl Frame {
    pub fn new(gram: IntMatrix) -> Result<Arc<Frame>> {
        if !gram.is_positive_definite() {
            return Err(LatticeError::NotPositiveDefinite);
        }
        Ok(Arc::new(Frame { gram }))
    }

    pub fn identity(n: usize) -> Arc<Frame> {
        Arc::new(Frame {
            gram: IntMatrix::identity(n),
        })
    }

    pub fn rank(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &IntMatrix {
        &self.gram
    }

    /// Same space with every inner product doubled (a `sqrt 2` rescale).
    pub fn doubled(&self) -> Arc<Frame> {
        Arc::new(Frame {
            gram: self.gram.scale(&BigInt::from(2)),
        })
    }

    /// Halves the form, if that keeps it integral.
    pub fn halved(&self) -> Option<Arc<Frame>> {
        self.gram.all_even().then(|| {
            let two = BigInt::from(2);
            let data = self.gram.entries().iter().map(|x| x / &two).collect();
            Arc::new(Frame {
                gram: IntMatrix::from_flat(self.rank(), self.rank(), data),
            })
        })
    }

    /// Orthogonal direct sum.
    pub fn direct_sum(&self, other: &Frame) -> Arc<Frame> {
        let a = DyadicMatrix::from_int(self.gram.clone());
        let b = DyadicMatrix::from_int(other.gram.clone());
        Arc::new(Frame {
            gram: a.block_diag(&b).to_int().expect("integral"),
        })
    }

    /// `x S y^T` for dyadic row blocks.
    pub fn pairing(&self, x: &DyadicMatrix, y: &DyadicMatrix) -> DyadicMatrix {
        x.mul_int(&self.gram).mul(&y.transpose())
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frame(rank {}, gram {:?})", self.rank(), self.gram.to_rows())
    }
}

/// Invariant factors `> 1` of `L*/L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiscriminantGroup {
    pub invariant_factors: Vec<BigInt>,
}

impl DiscriminantGroup {
    pub fn order(&self) -> BigInt {
        self.invariant_factors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    /// `(Z/2)^k`
    pub fn elementary_2(k: usize) -> Self {
        DiscriminantGroup {
            invariant_factors: vec![BigInt::from(2); k],
        }
    }
}

/// A full-rank lattice in a frame, stored by its canonical basis.
#[derive(Clone)]
pub struct Lattice {
    frame: Arc<Frame>,
    basis: DyadicMatrix,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        same_frame(&self.frame, &other.frame) && self.basis == other.basis
    }
}

impl Eq for Lattice {}

fn same_frame(a: &Arc<Frame>, b: &Arc<Frame>) -> bool {
    Arc::ptr_eq(a, b) || a.gram == b.gram
}

impl Lattice {
    /// Lattice generated by the rows of `generators`; must have full rank.
    pub fn new(frame: Arc<Frame>, generators: &DyadicMatrix) -> Result<Lattice> {
        let n = frame.rank();
        if generators.cols() != n {
            return Err(LatticeError::Dimension {
                expected: n,
                got: generators.cols(),
            });
        }
        let h = hnf_basis(generators.numerator());
        if h.rows() != n {
            return Err(LatticeError::RankDeficient {
                rank: h.rows(),
                expected: n,
            });
        }
        Ok(Lattice {
            frame,
            basis: DyadicMatrix::new(h, generators.log2_den()),
        })
    }

    /// Integer generators.
    pub fn from_int(frame: Arc<Frame>, generators: &IntMatrix) -> Result<Lattice> {
        Lattice::new(frame, &DyadicMatrix::from_int(generators.clone()))
    }

    /// The coordinate lattice `Z^N`.
    pub fn standard(frame: Arc<Frame>) -> Lattice {
        let n = frame.rank();
        Lattice {
            frame,
            basis: DyadicMatrix::identity(n),
        }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn basis(&self) -> &DyadicMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// Same coordinates, different form.
    pub fn with_frame(&self, frame: Arc<Frame>) -> Result<Lattice> {
        if frame.rank() != self.rank() {
            return Err(LatticeError::Dimension {
                expected: self.rank(),
                got: frame.rank(),
            });
        }
        Ok(Lattice {
            frame,
            basis: self.basis.clone(),
        })
    }

    fn check_frame(&self, other: &Lattice) -> Result<()> {
        if same_frame(&self.frame, &other.frame) {
            Ok(())
        } else {
            Err(LatticeError::FrameMismatch)
        }
    }

    pub fn gram(&self) -> DyadicMatrix {
        self.frame.pairing(&self.basis, &self.basis)
    }

    /// Determinant of the Gram matrix.
    pub fn determinant(&self) -> BigRational {
        self.gram().det()
    }

    pub fn is_integral(&self) -> bool {
        self.gram().is_integral()
    }

    pub fn is_even(&self) -> bool {
        let g = self.gram();
        g.is_integral() && (0..self.rank()).all(|i| !g.numerator()[(i, i)].bit(0))
    }

    /// `2^k L`
    pub fn scaled_pow2(&self, k: i32) -> Lattice {
        Lattice {
            frame: self.frame.clone(),
            basis: self.basis.scale_pow2(k),
        }
    }

    /// Integer coordinates of the dyadic row `v` in the canonical basis.
    pub fn coordinates(&self, v: &DyadicMatrix) -> Option<Vec<BigInt>> {
        debug_assert_eq!(v.rows(), 1);
        let k = self.basis.log2_den().max(v.log2_den());
        let h = self.basis.numerator_at(k);
        let target = v.numerator_at(k);
        let pivots: Vec<usize> = (0..self.rank()).collect();
        solve_in_basis(&h, &pivots, target.row(0))
    }

    /// Integer coordinates of every row of `rows`.
    pub fn coordinates_of_rows(&self, rows: &DyadicMatrix) -> Option<IntMatrix> {
        let k = self.basis.log2_den().max(rows.log2_den());
        let h = self.basis.numerator_at(k);
        let target = rows.numerator_at(k);
        let pivots: Vec<usize> = (0..self.rank()).collect();
        let mut data = Vec::with_capacity(rows.rows() * self.rank());
        for i in 0..rows.rows() {
            data.extend(solve_in_basis(&h, &pivots, target.row(i))?);
        }
        Some(IntMatrix::from_flat(rows.rows(), self.rank(), data))
    }

    pub fn contains_rows(&self, rows: &DyadicMatrix) -> bool {
        self.coordinates_of_rows(rows).is_some()
    }

    /// `other ⊆ self`
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        self.check_frame(other)?;
        Ok(self.contains_rows(&other.basis))
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        self.check_frame(other)?;
        Lattice::new(self.frame.clone(), &self.basis.vstack(&other.basis))
    }

    /// `self + <rows>`; the rows may be rank deficient.
    pub fn sum_rows(&self, rows: &DyadicMatrix) -> Result<Lattice> {
        if rows.rows() == 0 {
            return Ok(self.clone());
        }
        Lattice::new(self.frame.clone(), &self.basis.vstack(rows))
    }

    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        self.check_frame(other)?;
        let k = self.basis.log2_den().max(other.basis.log2_den());
        let a = self.basis.numerator_at(k);
        let b = other.basis.numerator_at(k);
        let n = self.rank();
        // x a + y b = 0  <=>  x a = -y b lies in both lattices.
        let kernel = left_kernel(&a.vstack(&b));
        let x = kernel.select_cols(0..n);
        Lattice::new(self.frame.clone(), &DyadicMatrix::new(x.mul(&a), k))
    }

    /// Absolute value of the basis determinant (covolume in frame coordinates).
    pub fn basis_det(&self) -> BigRational {
        self.basis.det().abs()
    }

    /// `|sup : self|`, requiring `self ⊆ sup`.
    pub fn index_in(&self, sup: &Lattice) -> Result<BigInt> {
        if !sup.contains(self)? {
            return Err(LatticeError::NotASublattice);
        }
        let ratio = self.basis_det() / sup.basis_det();
        debug_assert!(ratio.is_integer());
        Ok(ratio.to_integer())
    }

    /// Dual lattice `{v : <v, x> ∈ Z for all x ∈ L}`; needs a 2-power determinant.
    pub fn dual(&self) -> Result<Lattice> {
        let bs = self.basis.mul_int(self.frame.gram());
        let inv = invert_dyadic(&bs)?;
        Lattice::new(self.frame.clone(), &inv.transpose())
    }

    pub fn discriminant_group(&self) -> Result<DiscriminantGroup> {
        let g = self.gram().to_int().ok_or(LatticeError::NotIntegral)?;
        let invariant_factors = snf(&g).into_iter().filter(|x| !x.is_one()).collect();
        Ok(DiscriminantGroup { invariant_factors })
    }

    /// Image of the lattice under the rows-times-matrix map `m`.
    pub fn image(&self, m: &DyadicMatrix) -> Result<Lattice> {
        Lattice::new(self.frame.clone(), &self.basis.mul(m))
    }

    /// Generators of the (possibly lower-rank) image `L m`.
    pub fn image_rows(&self, m: &DyadicMatrix) -> DyadicMatrix {
        self.basis.mul(m)
    }

    /// Norm `<v, v>` of a dyadic row vector.
    pub fn norm_of(&self, v: &DyadicMatrix) -> BigRational {
        self.frame.pairing(v, v).entry(0, 0)
    }

    pub fn is_zero_dimensional(&self) -> bool {
        self.rank() == 0
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice(rank {}, basis {:?})", self.rank(), self.basis)
    }
}

/// `|sup : sub|`
pub fn index(sub: &Lattice, sup: &Lattice) -> Result<BigInt> {
    sub.index_in(sup)
}

/// Exact base-2 logarithm of a lattice index, if it is a power of two.
pub fn log2_index(sub: &Lattice, sup: &Lattice) -> Result<Option<u64>> {
    Ok(crate::linalg::log2_exact(&sub.index_in(sup)?))
}
