//! Exact linear maps on a frame and dihedral actions of order 8.
//!
//! Maps act on row vectors from the right, so "apply `t`, then `u`" is the
//! matrix product `T * U`. The order-4 element of a dihedral action is always
//! `f = t * u`.

use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::lattice::{EmbeddedLattice, Frame, Lattice, LatticeError};
use crate::linalg::hnf::left_kernel;
use crate::linalg::{DyadicMatrix, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("{0} is not an involution")]
    NotInvolution(String),
    #[error("the central element (t u)^2 does not act as -1")]
    CentralNotMinusOne,
    #[error("{0} does not map the lattice onto itself")]
    LatticeNotStable(String),
    #[error("map does not square to -1")]
    NotFourvolution,
    #[error("map and lattice live in different frames")]
    FrameMismatch,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, ActionError>;

/// An exact linear map of a frame, acting on row vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameMap {
    frame: Arc<Frame>,
    matrix: DyadicMatrix,
}

impl FrameMap {
    pub fn new(frame: Arc<Frame>, matrix: DyadicMatrix) -> Result<Self> {
        let n = frame.rank();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(ActionError::Lattice(LatticeError::Dimension {
                expected: n,
                got: matrix.cols(),
            }));
        }
        Ok(FrameMap { frame, matrix })
    }

    pub fn from_int(frame: Arc<Frame>, matrix: IntMatrix) -> Result<Self> {
        FrameMap::new(frame, DyadicMatrix::from_int(matrix))
    }

    /// The map `x -> x P` for a signed permutation given as `images[i] = (j, sign)`
    /// meaning coordinate `i` is sent to `sign * e_j`.
    pub fn signed_permutation(frame: Arc<Frame>, images: &[(usize, i64)]) -> Result<Self> {
        let n = frame.rank();
        let mut m = IntMatrix::zeros(n, n);
        for (i, &(j, s)) in images.iter().enumerate() {
            m[(i, j)] = BigInt::from(s);
        }
        FrameMap::from_int(frame, m)
    }

    pub fn identity(frame: Arc<Frame>) -> Self {
        let n = frame.rank();
        FrameMap {
            frame,
            matrix: DyadicMatrix::identity(n),
        }
    }

    pub fn minus_identity(frame: Arc<Frame>) -> Self {
        let n = frame.rank();
        FrameMap {
            frame,
            matrix: DyadicMatrix::identity(n).neg(),
        }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn matrix(&self) -> &DyadicMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &FrameMap) -> FrameMap {
        FrameMap {
            frame: self.frame.clone(),
            matrix: self.matrix.mul(&other.matrix),
        }
    }

    pub fn neg(&self) -> FrameMap {
        FrameMap {
            frame: self.frame.clone(),
            matrix: self.matrix.neg(),
        }
    }

    /// `self - identity`
    pub fn minus_one(&self) -> DyadicMatrix {
        self.matrix.sub(&DyadicMatrix::identity(self.rank()))
    }

    /// `self + identity`
    pub fn plus_one(&self) -> DyadicMatrix {
        self.matrix.add(&DyadicMatrix::identity(self.rank()))
    }

    pub fn square(&self) -> DyadicMatrix {
        self.matrix.mul(&self.matrix)
    }

    pub fn is_involution(&self) -> bool {
        self.square().is_identity()
    }

    pub fn squares_to_minus_one(&self) -> bool {
        self.square().neg().is_identity()
    }

    /// `M S M^T = S`
    pub fn is_isometry(&self) -> bool {
        let s = DyadicMatrix::from_int(self.frame.gram().clone());
        self.frame.pairing(&self.matrix, &self.matrix) == s
    }

    /// `L M = L`
    pub fn stabilizes(&self, lattice: &Lattice) -> bool {
        match lattice.image(&self.matrix) {
            Ok(img) => img == *lattice,
            Err(_) => false,
        }
    }

    /// Restriction to the first or second half of the coordinates, when the
    /// map preserves that block.
    pub fn block(&self, range: std::ops::Range<usize>, frame: Arc<Frame>) -> Option<FrameMap> {
        let rows = self.matrix.select_rows(range.clone());
        let n = self.rank();
        let outside: Vec<usize> = (0..n).filter(|j| !range.contains(j)).collect();
        let keeps_block = outside
            .iter()
            .all(|&j| (0..rows.rows()).all(|i| rows.numerator()[(i, j)] == BigInt::from(0)));
        keeps_block.then(|| FrameMap {
            frame,
            matrix: rows.select_cols(range),
        })
    }

    /// `diag(a, b)` on the direct sum frame.
    pub fn diagonal_lift(a: &FrameMap, b: &FrameMap, frame: Arc<Frame>) -> FrameMap {
        FrameMap {
            frame,
            matrix: a.matrix.block_diag(&b.matrix),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_int(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A validated action of the dihedral group `<t, u>` of order 8 on a
/// lattice, with central element `(t u)^2 = -1`.
#[derive(Clone, Debug)]
pub struct DihedralAction {
    lattice: Lattice,
    t: FrameMap,
    u: FrameMap,
    f: FrameMap,
    isometric: bool,
}

pub fn validate_dihedral(lattice: &Lattice, t: &FrameMap, u: &FrameMap) -> Result<DihedralAction> {
    for m in [t, u] {
        if m.frame().gram() != lattice.frame().gram() {
            return Err(ActionError::FrameMismatch);
        }
    }
    if !t.is_involution() {
        return Err(ActionError::NotInvolution("t".into()));
    }
    if !u.is_involution() {
        return Err(ActionError::NotInvolution("u".into()));
    }
    let f = t.then(u);
    if !f.squares_to_minus_one() {
        return Err(ActionError::CentralNotMinusOne);
    }
    for (name, m) in [("t", t), ("u", u), ("f", &f)] {
        if !m.stabilizes(lattice) {
            return Err(ActionError::LatticeNotStable(name.into()));
        }
    }
    let isometric = t.is_isometry() && u.is_isometry();
    Ok(DihedralAction {
        lattice: lattice.clone(),
        t: t.clone(),
        u: u.clone(),
        f,
        isometric,
    })
}

impl DihedralAction {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn t(&self) -> &FrameMap {
        &self.t
    }

    pub fn u(&self) -> &FrameMap {
        &self.u
    }

    pub fn f(&self) -> &FrameMap {
        &self.f
    }

    /// Whether `t` and `u` preserve the frame form.
    pub fn is_isometric(&self) -> bool {
        self.isometric
    }

    /// Half the rank of the lattice.
    pub fn half_rank(&self) -> usize {
        self.lattice.rank() / 2
    }

    /// The four noncentral involutions `t, -t, u, -u`.
    pub fn noncentral_involutions(&self) -> [(&'static str, FrameMap); 4] {
        [
            ("t", self.t.clone()),
            ("-t", self.t.neg()),
            ("u", self.u.clone()),
            ("-u", self.u.neg()),
        ]
    }

    /// All eight group elements, by closure under right multiplication.
    pub fn elements(&self) -> Vec<FrameMap> {
        let mut out = vec![FrameMap::identity(self.lattice.frame().clone())];
        let mut i = 0;
        while i < out.len() {
            for g in [&self.t, &self.u] {
                let h = out[i].then(g);
                if !out.contains(&h) {
                    out.push(h);
                }
            }
            i += 1;
        }
        out
    }

    /// The same maps acting on `2^k L`.
    pub fn scaled_pow2(&self, k: i32) -> DihedralAction {
        DihedralAction {
            lattice: self.lattice.scaled_pow2(k),
            ..self.clone()
        }
    }
}

fn check_frame(lattice: &Lattice, s: &FrameMap) -> Result<()> {
    if s.frame().gram() != lattice.frame().gram() {
        return Err(ActionError::FrameMismatch);
    }
    Ok(())
}

/// Basis rows (frame coordinates) of `{v in L : v s = eps v}`.
pub fn eigen_rows(lattice: &Lattice, s: &FrameMap, eps: Sign) -> Result<DyadicMatrix> {
    check_frame(lattice, s)?;
    if !s.is_involution() {
        return Err(ActionError::NotInvolution("s".into()));
    }
    if !s.stabilizes(lattice) {
        return Err(ActionError::LatticeNotStable("s".into()));
    }
    let shifted = match eps {
        Sign::Plus => s.minus_one(),
        Sign::Minus => s.plus_one(),
    };
    // x B (s - eps) = 0 with x integral
    let m = lattice.basis().mul(&shifted);
    let kernel = left_kernel(m.numerator());
    Ok(DyadicMatrix::from_int(kernel).mul(lattice.basis()))
}

/// The eigenlattice `L^eps(s)` as a full-rank lattice in its own sub-frame.
pub fn eigenlattice(lattice: &Lattice, s: &FrameMap, eps: Sign) -> Result<EmbeddedLattice> {
    let rows = eigen_rows(lattice, s, eps)?;
    Ok(EmbeddedLattice::from_rows(lattice, &rows)?)
}

/// Total eigenlattice `L^+(s) ⊕ L^-(s)`, a finite-index sublattice of `L`.
pub fn tel(lattice: &Lattice, s: &FrameMap) -> Result<Lattice> {
    let plus = eigen_rows(lattice, s, Sign::Plus)?;
    let minus = eigen_rows(lattice, s, Sign::Minus)?;
    Ok(Lattice::new(lattice.frame().clone(), &plus.vstack(&minus))?)
}

/// Generators of `L (g - 1)` in frame coordinates.
pub fn commutator_rows(lattice: &Lattice, g: &FrameMap) -> Result<DyadicMatrix> {
    check_frame(lattice, g)?;
    if !g.stabilizes(lattice) {
        return Err(ActionError::LatticeNotStable("g".into()));
    }
    Ok(lattice.image_rows(&g.minus_one()))
}

/// The commutator image `L (g - 1)`, embedded via its saturation in `L`.
pub fn commutator_lattice(lattice: &Lattice, g: &FrameMap) -> Result<EmbeddedLattice> {
    let rows = commutator_rows(lattice, g)?;
    Ok(EmbeddedLattice::from_rows(lattice, &rows)?)
}

/// `L[k] = L (f - 1)^k` for a fourvolution `f` (so `L[2] = 2L`), using
/// `(f - 1)^-1 = -(f + 1) / 2` for negative `k`.
pub fn twist(lattice: &Lattice, f: &FrameMap, k: i32) -> Result<Lattice> {
    check_frame(lattice, f)?;
    if !f.squares_to_minus_one() {
        return Err(ActionError::NotFourvolution);
    }
    if !f.stabilizes(lattice) {
        return Err(ActionError::LatticeNotStable("f".into()));
    }
    let step = if k >= 0 {
        f.minus_one()
    } else {
        f.plus_one().neg().scale_pow2(-1)
    };
    let mut basis = lattice.basis().clone();
    for _ in 0..k.unsigned_abs() {
        basis = basis.mul(&step);
    }
    Ok(Lattice::new(lattice.frame().clone(), &basis)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn m2() -> (Lattice, FrameMap, FrameMap) {
        let frame = Frame::identity(2);
        let l = Lattice::standard(frame.clone());
        let t = FrameMap::signed_permutation(frame.clone(), &[(1, 1), (0, 1)]).unwrap();
        let u = FrameMap::signed_permutation(frame, &[(0, 1), (1, -1)]).unwrap();
        (l, t, u)
    }

    fn lat(frame: &Arc<Frame>, rows: &[&[i64]]) -> Lattice {
        Lattice::from_int(frame.clone(), &IntMatrix::from_i64(rows)).unwrap()
    }

    #[test]
    fn m2_validates_with_expected_f() {
        let (l, t, u) = m2();
        let a = validate_dihedral(&l, &t, &u).unwrap();
        let expected = DyadicMatrix::from_int(IntMatrix::from_i64(&[&[0, -1], &[1, 0]]));
        assert_eq!(a.f().matrix(), &expected);
        assert!(a.is_isometric());
        assert_eq!(a.elements().len(), 8);
    }

    #[test]
    fn trivial_maps_rejected() {
        let (l, _, _) = m2();
        let id = FrameMap::identity(l.frame().clone());
        assert_eq!(validate_dihedral(&l, &id, &id).unwrap_err(), ActionError::CentralNotMinusOne);
    }

    #[test]
    fn non_involution_rejected() {
        let (l, t, _) = m2();
        let rot = FrameMap::signed_permutation(l.frame().clone(), &[(1, 1), (0, -1)]).unwrap();
        assert_eq!(
            validate_dihedral(&l, &rot, &t).unwrap_err(),
            ActionError::NotInvolution("t".into())
        );
    }

    #[test]
    fn unstable_lattice_rejected() {
        let (_, t, u) = m2();
        let frame = t.frame().clone();
        // (2,0),(0,1): the swap does not preserve it.
        let l = lat(&frame, &[&[2, 0], &[0, 1]]);
        assert_eq!(
            validate_dihedral(&l, &t, &u).unwrap_err(),
            ActionError::LatticeNotStable("t".into())
        );
    }

    #[test]
    fn m2_eigenlattices_and_tel() {
        let (l, t, _) = m2();
        let frame = l.frame().clone();
        let plus = eigenlattice(&l, &t, Sign::Plus).unwrap();
        let minus = eigenlattice(&l, &t, Sign::Minus).unwrap();
        assert_eq!(plus.rank(), 1);
        assert_eq!(plus.image_rows(), DyadicMatrix::from_int(IntMatrix::from_i64(&[&[1, 1]])));
        assert_eq!(minus.image_rows().numerator().row(0).iter().map(|x| x.clone() * x).sum::<BigInt>(), BigInt::from(2));
        let tel = tel(&l, &t).unwrap();
        assert_eq!(tel, lat(&frame, &[&[1, 1], &[1, -1]]));
        assert_eq!(tel.index_in(&l).unwrap(), BigInt::from(2));
        // equal determinants of the two eigenlattices
        assert_eq!(plus.determinant(), minus.determinant());
    }

    #[test]
    fn minus_identity_eigenlattices() {
        let (l, _, _) = m2();
        let neg = FrameMap::minus_identity(l.frame().clone());
        assert_eq!(eigenlattice(&l, &neg, Sign::Plus).unwrap().rank(), 0);
        assert_eq!(eigenlattice(&l, &neg, Sign::Minus).unwrap().rank(), 2);
        assert_eq!(tel(&l, &neg).unwrap(), l);
    }

    #[test]
    fn commutators() {
        let (l, t, u) = m2();
        let frame = l.frame().clone();
        let f = t.then(&u);
        let c = commutator_lattice(&l, &f).unwrap();
        assert_eq!(c.rank(), 2);
        let full = Lattice::new(frame.clone(), &c.image_rows()).unwrap();
        assert_eq!(full, lat(&frame, &[&[-1, -1], &[1, -1]]));
        assert_eq!(full.index_in(&l).unwrap(), BigInt::from(2));

        let id = FrameMap::identity(frame.clone());
        assert_eq!(commutator_lattice(&l, &id).unwrap().rank(), 0);
        let neg = FrameMap::minus_identity(frame);
        let c = commutator_lattice(&l, &neg).unwrap();
        assert_eq!(Lattice::new(l.frame().clone(), &c.image_rows()).unwrap(), l.scaled_pow2(1));
    }

    #[test]
    fn twist_basics() {
        let (l, t, u) = m2();
        let f = t.then(&u);
        assert_eq!(twist(&l, &f, 0).unwrap(), l);
        assert_eq!(twist(&l, &f, 2).unwrap(), l.scaled_pow2(1));
        let up = twist(&l, &f, -1).unwrap();
        assert!(up.contains(&l).unwrap());
        assert!(l.contains(&twist(&l, &f, 1).unwrap()).unwrap());
        assert_eq!(twist(&l, &t, 1).unwrap_err(), ActionError::NotFourvolution);
    }

    #[test]
    fn d4_twist_is_dual() {
        let bw = crate::barnes_wall::construct_bw(2).unwrap();
        let l = bw.lattice();
        assert_eq!(twist(l, bw.f(), -1).unwrap(), l.dual().unwrap());
    }

    #[test]
    fn twist_additivity_on_m4() {
        let a = testkit::canonical("M4").unwrap();
        let (l, f) = (a.lattice(), a.f());
        for j in -2..=2 {
            for k in -2..=2 {
                let lhs = twist(&twist(l, f, j).unwrap(), f, k).unwrap();
                assert_eq!(lhs, twist(l, f, j + k).unwrap(), "j={j} k={k}");
            }
        }
    }
}
