use std::sync::Arc;

use num_rational::BigRational;

use super::{Frame, Lattice, LatticeError, Result};
use crate::linalg::hnf::{hnf_basis, hnf_full, left_kernel, solve_in_basis};
use crate::linalg::{DyadicMatrix, IntMatrix};

/// A possibly lower-rank subgroup of a frame, carried as a full-rank lattice
/// in a sub-frame together with the embedding back into the parent frame.
///
/// The sub-frame coordinates are those of `embedding`'s rows (a basis of the
/// saturation, scaled by a power of two so the restricted form is integral).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddedLattice {
    lattice: Lattice,
    embedding: DyadicMatrix,
    parent: Arc<Frame>,
}

impl EmbeddedLattice {
    pub fn new(lattice: Lattice, embedding: DyadicMatrix, parent: Arc<Frame>) -> Result<Self> {
        if embedding.rows() != lattice.rank() || embedding.cols() != parent.rank() {
            return Err(LatticeError::Dimension {
                expected: parent.rank(),
                got: embedding.cols(),
            });
        }
        Ok(EmbeddedLattice {
            lattice,
            embedding,
            parent,
        })
    }

    /// The subgroup generated by `rows` (parent-frame coordinates), which must
    /// lie in `ambient`. The sub-frame is spanned by the saturation
    /// `span_Q(rows) ∩ ambient`.
    pub fn from_rows(ambient: &Lattice, rows: &DyadicMatrix) -> Result<Self> {
        let parent = ambient.frame().clone();
        let coords = ambient
            .coordinates_of_rows(rows)
            .ok_or(LatticeError::NotASublattice)?;
        let span = if coords.rows() == 0 {
            IntMatrix::zeros(0, ambient.rank())
        } else {
            hnf_basis(&coords)
        };
        let r = span.rows();
        // saturation = {y : y z = 0 for every z annihilating the span}
        let annihilator = left_kernel(&span.transpose());
        let saturation = if r == 0 {
            IntMatrix::zeros(0, ambient.rank())
        } else if annihilator.rows() == 0 {
            IntMatrix::identity(ambient.rank())
        } else {
            left_kernel(&annihilator.transpose())
        };
        debug_assert_eq!(saturation.rows(), r);
        let base = DyadicMatrix::from_int(saturation.clone()).mul(ambient.basis());
        let restricted = parent.pairing(&base, &base);
        let shift = restricted.log2_den().div_ceil(2);
        let embedding = base.scale_pow2(shift as i32);
        let gram = parent
            .pairing(&embedding, &embedding)
            .to_int()
            .expect("scaled restricted form is integral");
        let sub_frame = if r == 0 {
            Arc::new(Frame { gram })
        } else {
            Frame::new(gram)?
        };
        // span = y * saturation, and saturation rows = 2^-shift * embedding rows.
        let lattice = if r == 0 {
            Lattice::from_int(sub_frame, &IntMatrix::identity(0))?
        } else {
            Lattice::new(sub_frame, &DyadicMatrix::new(solve_rows(&saturation, &span), shift))?
        };
        EmbeddedLattice::new(lattice, embedding, parent)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn embedding(&self) -> &DyadicMatrix {
        &self.embedding
    }

    pub fn parent(&self) -> &Arc<Frame> {
        &self.parent
    }

    pub fn sub_frame(&self) -> &Arc<Frame> {
        self.lattice.frame()
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    /// Basis of the subgroup in parent-frame coordinates.
    pub fn image_rows(&self) -> DyadicMatrix {
        self.lattice.basis().mul(&self.embedding)
    }

    /// Gram determinant of the subgroup (1 for the zero subgroup).
    pub fn determinant(&self) -> BigRational {
        self.lattice.determinant()
    }

    /// Same subgroup with every index-relevant datum equal.
    pub fn same_subgroup(&self, other: &EmbeddedLattice) -> bool {
        let a = self.image_rows();
        let b = other.image_rows();
        let k = a.log2_den().max(b.log2_den());
        let ha = if a.rows() == 0 { a.numerator_at(k) } else { hnf_basis(&a.numerator_at(k)) };
        let hb = if b.rows() == 0 { b.numerator_at(k) } else { hnf_basis(&b.numerator_at(k)) };
        ha == hb
    }
}

/// Solves `x * basis = rows` for integer `x` where `basis` has full row rank
/// and every row of `rows` lies in its integer row span.
fn solve_rows(basis: &IntMatrix, rows: &IntMatrix) -> IntMatrix {
    let h = hnf_full(basis);
    let r = h.rank;
    debug_assert_eq!(r, basis.rows());
    let top = h.h.select_rows(0..r);
    let mut out = Vec::with_capacity(rows.rows() * r);
    for i in 0..rows.rows() {
        let x = solve_in_basis(&top, &h.pivots, rows.row(i)).expect("row lies in the span");
        // x * top = row and top = u * basis, so row = (x u) basis.
        out.extend(h.u.apply_row(&x));
    }
    IntMatrix::from_flat(rows.rows(), r, out)
}
