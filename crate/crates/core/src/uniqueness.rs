//! Glue enumeration between `L_1 ⊥ L_2` and `L_1[-1] ⊥ L_2[-1]`, Condition X
//! filtering of the candidates, and recognition by invariants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::action::{twist, ActionError, FrameMap};
use crate::barnes_wall::{verify_condition_x, BwTower};
use crate::lattice::{Lattice, LatticeError};
use crate::linalg::f2::{enumerate_subspaces, subspace_count, F2Matrix, F2Vec};
use crate::linalg::{log2_exact, DyadicMatrix, IntMatrix};
use crate::svp::{self, SvpError};

/// Largest quotient order (as a power of two) enumerated by default.
pub const DEFAULT_LOG2_BOUND: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlueError {
    #[error("quotient has order 2^{log2_order}, above the bound 2^{bound}")]
    QuotientTooLarge { log2_order: u64, bound: u32 },
    #[error("quotient is not an elementary abelian 2-group")]
    NotElementary,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlueCandidate {
    /// Reduced echelon basis of the subgroup in quotient coordinates.
    pub generators: Vec<F2Vec>,
    pub lattice: Lattice,
    pub integral: bool,
    pub even: bool,
    pub t_invariant: bool,
    /// The subgroup of `t`-fixed points of the quotient.
    pub t_fixed: bool,
}

/// The quotient `(L_1[-1] ⊥ L_2[-1]) / (L_1 ⊥ L_2)` with a chosen basis.
#[derive(Clone, Debug)]
pub struct GlueQuotient {
    pub bottom: Lattice,
    pub top: Lattice,
    /// Lifts of the quotient basis, in frame coordinates.
    pub lifts: DyadicMatrix,
    pub fixed: Lattice,
    t: FrameMap,
}

impl GlueQuotient {
    pub fn dim(&self) -> usize {
        self.lifts.rows()
    }

    /// Number of subgroups the enumeration visits.
    pub fn subgroup_count(&self) -> u64 {
        subspace_count(self.dim())
    }

    pub fn lift(&self, generators: &[F2Vec]) -> Lattice {
        if generators.is_empty() {
            return self.bottom.clone();
        }
        let coeffs: Vec<Vec<BigInt>> = generators.iter().map(|g| g.to_ints()).collect();
        let rows = DyadicMatrix::from_int(IntMatrix::from_rows(&coeffs)).mul(&self.lifts);
        self.bottom.sum_rows(&rows).expect("same frame")
    }

    pub fn candidate(&self, generators: &[F2Vec]) -> GlueCandidate {
        let lattice = self.lift(generators);
        let integral = lattice.is_integral();
        GlueCandidate {
            generators: generators.to_vec(),
            integral,
            even: integral && lattice.is_even(),
            t_invariant: self.t.stabilizes(&lattice),
            t_fixed: lattice == self.fixed,
            lattice,
        }
    }
}

/// Sets up the quotient for `L_1 ⊥ L_2` inside `L_1[-1] ⊥ L_2[-1]`, with
/// `L_i` in the half frame and `t` on the full frame.
pub fn glue_quotient(
    l1: &Lattice,
    l2: &Lattice,
    t: &FrameMap,
    f1: &FrameMap,
    f2: &FrameMap,
    log2_bound: u32,
) -> Result<GlueQuotient, GlueError> {
    let frame = l1.frame().direct_sum(l2.frame());
    let block = |a: &Lattice, b: &Lattice| -> Result<Lattice, LatticeError> {
        Lattice::new(frame.clone(), &a.basis().block_diag(b.basis()))
    };
    let bottom = block(l1, l2)?;
    let top = block(&twist(l1, f1, -1)?, &twist(l2, f2, -1)?)?;
    let index = bottom.index_in(&top)?;
    let log2_order = log2_exact(&index).ok_or(GlueError::NotElementary)?;
    if log2_order > log2_bound as u64 {
        return Err(GlueError::QuotientTooLarge {
            log2_order,
            bound: log2_bound,
        });
    }
    if !bottom.contains(&top.scaled_pow2(1))? {
        return Err(GlueError::NotElementary);
    }
    // Quotient basis: top basis rows independent modulo the bottom.
    let w = top.coordinates_of_rows(bottom.basis()).expect("bottom ≤ top");
    let mut span = F2Matrix::from_int(&w).rref();
    let n = top.rank();
    let mut chosen = Vec::new();
    for i in 0..n {
        let e = F2Vec::unit(n, i);
        if !span.contains(&e) {
            span = span.stack(&F2Matrix::new(n, vec![e])).rref();
            chosen.push(i);
        }
    }
    debug_assert_eq!(chosen.len() as u64, log2_order);
    let lifts = top.basis().select_rows(chosen);
    // t-fixed points: {x ∈ top : x(t-1) ∈ bottom}
    let fixed = fixed_points(&top, &t.minus_one(), &bottom);
    Ok(GlueQuotient {
        bottom,
        top,
        lifts,
        fixed,
        t: t.clone(),
    })
}

fn fixed_points(top: &Lattice, m: &DyadicMatrix, bottom: &Lattice) -> Lattice {
    use crate::linalg::hnf::left_kernel;
    let image = top.basis().mul(m);
    let k = image.log2_den().max(bottom.basis().log2_den());
    let kernel = left_kernel(&image.numerator_at(k).vstack(&bottom.basis().numerator_at(k)));
    let c = kernel.select_cols(0..top.rank());
    Lattice::new(top.frame().clone(), &DyadicMatrix::from_int(c).mul(top.basis())).expect("full rank")
}

/// Quotient for a tower's own `L_1, L_2, t` and half-frame fourvolution.
pub fn tower_quotient(tower: &BwTower, log2_bound: u32) -> Result<GlueQuotient, GlueError> {
    glue_quotient(tower.l1(), tower.l2(), tower.t(), tower.child_f(), tower.child_f(), log2_bound)
}

/// Visits every subgroup of the quotient in enumeration order.
pub fn for_each_glue(q: &GlueQuotient, mut visit: impl FnMut(GlueCandidate)) {
    enumerate_subspaces(q.dim(), |gens| visit(q.candidate(gens)));
}

pub fn enumerate_glue(
    l1: &Lattice,
    l2: &Lattice,
    t: &FrameMap,
    f1: &FrameMap,
    f2: &FrameMap,
) -> Result<Vec<GlueCandidate>, GlueError> {
    let q = glue_quotient(l1, l2, t, f1, f2, DEFAULT_LOG2_BOUND)?;
    let mut out = Vec::new();
    for_each_glue(&q, |c| out.push(c));
    Ok(out)
}

/// Full Condition X for a candidate placed into `tower`. Cheap necessary
/// conditions are tested before the minimum is certified.
pub fn passes_x(candidate: &GlueCandidate, tower: &BwTower, svp_budget: u64) -> bool {
    if !(candidate.integral && candidate.even && candidate.t_invariant) {
        return false;
    }
    verify_condition_x(&tower.with_lattice(candidate.lattice.clone()), svp_budget).pass()
}

pub fn filter_x(cands: &[GlueCandidate], tower: &BwTower, svp_budget: u64) -> Vec<Lattice> {
    cands
        .iter()
        .filter(|c| passes_x(c, tower, svp_budget))
        .map(|c| c.lattice.clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub rank: usize,
    pub even: bool,
    #[serde(serialize_with = "crate::json::ser_ratio")]
    pub determinant: BigRational,
    #[serde(serialize_with = "crate::json::ser_ratio")]
    pub min_norm: BigRational,
    #[serde(skip)]
    pub nodes: u64,
}

impl Certificate {
    pub fn matches(&self, rank: usize, even: bool, det: u64, min: u64) -> bool {
        self.rank == rank
            && self.even == even
            && self.determinant == BigRational::from_integer(det.into())
            && self.min_norm == BigRational::from_integer(min.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Recognition {
    pub certificate: Certificate,
    pub label: Option<&'static str>,
}

pub fn certificate(l: &Lattice, svp_budget: u64) -> Result<Certificate, SvpError> {
    let m = svp::min_norm(l, svp_budget)?;
    Ok(Certificate {
        rank: l.rank(),
        even: l.is_even(),
        determinant: l.determinant(),
        min_norm: m.norm,
        nodes: m.nodes,
    })
}

/// Certificate plus a label for the known profiles. An even unimodular
/// rank-8 lattice is E8 by classification.
pub fn recognize(l: &Lattice, svp_budget: u64) -> Result<Recognition, SvpError> {
    let c = certificate(l, svp_budget)?;
    let label = if c.matches(4, true, 4, 2) {
        Some("D4")
    } else if c.matches(8, true, 1, 2) {
        Some("E8")
    } else if c.matches(16, true, 1 << 8, 4) {
        Some("BW16")
    } else {
        None
    };
    Ok(Recognition { certificate: c, label })
}

/// `2^k` as a rational, for certificate comparisons.
pub fn pow2_ratio(k: u32) -> BigRational {
    BigRational::from_integer(BigInt::one() << k)
}
