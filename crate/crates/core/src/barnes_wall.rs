//! The recursive Barnes-Wall tower and the Condition X verifier.
//!
//! Every level lives in a frame `V = V_1 ⊕ V_2` whose Gram is block diagonal
//! with two equal blocks, so the orthogonal projection to `V_i` is coordinate
//! restriction. `L_1` and `L_2` are stored as lattices in the half frame.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::action::{twist, ActionError, FrameMap};
use crate::lattice::{Frame, Lattice, LatticeError};
use crate::linalg::{DyadicMatrix, IntMatrix};
use crate::svp::{self, quadratic_form};

pub const MAX_DEPTH: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BwError {
    #[error("depth {0} exceeds the maximum of {MAX_DEPTH}")]
    DepthExceeded(u32),
    #[error("depth must be at least 2, got {0}")]
    DepthTooSmall(u32),
    #[error("inconsistent tower: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

pub type Result<T> = std::result::Result<T, BwError>;

#[derive(Clone, Debug)]
pub struct BwTower {
    d: u32,
    frame: Arc<Frame>,
    half_frame: Arc<Frame>,
    lattice: Lattice,
    l1: Lattice,
    l2: Lattice,
    t: FrameMap,
    f: FrameMap,
    /// Fourvolution and swap on the half frame, lifted diagonally in clause (f).
    child_f: FrameMap,
    child_t: FrameMap,
    child: Option<Box<BwTower>>,
}

/// `s = (d + 1) mod 2`
pub fn s_flag(d: u32) -> u32 {
    (d + 1) % 2
}

pub fn construct_bw(d: u32) -> Result<BwTower> {
    if d < 2 {
        return Err(BwError::DepthTooSmall(d));
    }
    if d > MAX_DEPTH {
        return Err(BwError::DepthExceeded(d));
    }
    if d == 2 {
        return base();
    }
    step(construct_bw(d - 1)?)
}

fn base() -> Result<BwTower> {
    let half = Frame::identity(2);
    let frame = half.direct_sum(&half);
    let lattice = Lattice::from_int(
        frame.clone(),
        &IntMatrix::from_i64(&[&[1, 1, 0, 0], &[1, -1, 0, 0], &[0, 1, -1, 0], &[0, 0, 1, -1]]),
    )?;
    let a1 = Lattice::from_int(half.clone(), &IntMatrix::from_i64(&[&[1, 1], &[1, -1]]))?;
    // (x1, x2) -> (x2, -x1) and the coordinate swap on the A1^2 half.
    let child_f = FrameMap::from_int(half.clone(), IntMatrix::from_i64(&[&[0, -1], &[1, 0]]))?;
    let child_t = FrameMap::from_int(half.clone(), IntMatrix::from_i64(&[&[0, 1], &[1, 0]]))?;
    Ok(BwTower {
        d: 2,
        t: block_swap(&frame, 2),
        f: block_rotation(&frame, 2),
        frame,
        half_frame: half,
        lattice,
        l1: a1.clone(),
        l2: a1,
        child_f,
        child_t,
        child: None,
    })
}

fn step(child: BwTower) -> Result<BwTower> {
    let d = child.d + 1;
    let h = child.lattice.rank();
    let half = if s_flag(d) == 1 {
        child.frame.doubled()
    } else {
        child.frame.clone()
    };
    let m = child.lattice.with_frame(half.clone())?;
    let child_f = FrameMap::new(half.clone(), child.f.matrix().clone())?;
    let child_t = FrameMap::new(half.clone(), child.t.matrix().clone())?;
    let m_up = twist(&m, &child_f, -1)?;
    let frame = half.direct_sum(&half);

    let zero = DyadicMatrix::zeros(h, h);
    let b = m.basis();
    let up = m_up.basis();
    let gens = b
        .hstack(&zero)
        .vstack(&zero.hstack(b))
        .vstack(&up.hstack(up));
    let lattice = Lattice::new(frame.clone(), &gens)?;
    Ok(BwTower {
        d,
        t: block_swap(&frame, h),
        f: block_rotation(&frame, h),
        frame,
        half_frame: half,
        lattice,
        l1: m.clone(),
        l2: m,
        child_f,
        child_t,
        child: Some(Box::new(child)),
    })
}

/// `(x, y) -> (y, x)`
pub fn block_swap(frame: &Arc<Frame>, h: usize) -> FrameMap {
    let images: Vec<(usize, i64)> = (0..2 * h).map(|i| ((i + h) % (2 * h), 1)).collect();
    FrameMap::signed_permutation(frame.clone(), &images).expect("square")
}

/// `(x, y) -> (y, -x)`
pub fn block_rotation(frame: &Arc<Frame>, h: usize) -> FrameMap {
    let images: Vec<(usize, i64)> = (0..2 * h)
        .map(|i| if i < h { (i + h, -1) } else { (i - h, 1) })
        .collect();
    FrameMap::signed_permutation(frame.clone(), &images).expect("square")
}

impl BwTower {
    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn half_frame(&self) -> &Arc<Frame> {
        &self.half_frame
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn l1(&self) -> &Lattice {
        &self.l1
    }

    pub fn l2(&self) -> &Lattice {
        &self.l2
    }

    pub fn t(&self) -> &FrameMap {
        &self.t
    }

    pub fn f(&self) -> &FrameMap {
        &self.f
    }

    /// `u = t f`, so that `<t, u>` is dihedral with `(t u)^2 = f^2 = -1`.
    pub fn u(&self) -> FrameMap {
        self.t.then(&self.f)
    }

    pub fn child_f(&self) -> &FrameMap {
        &self.child_f
    }

    pub fn child_t(&self) -> &FrameMap {
        &self.child_t
    }

    pub fn child(&self) -> Option<&BwTower> {
        self.child.as_deref()
    }

    pub fn s_flag(&self) -> u32 {
        s_flag(self.d)
    }

    pub fn half_rank(&self) -> usize {
        self.half_frame.rank()
    }

    /// `L_1 ⊥ L_2` in the full frame.
    pub fn orthogonal_sum(&self) -> Result<Lattice> {
        let h = self.half_rank();
        let z = DyadicMatrix::zeros(h, h);
        let gens = self.l1.basis().hstack(&z).vstack(&z.hstack(self.l2.basis()));
        Ok(Lattice::new(self.frame.clone(), &gens)?)
    }

    /// `L_i` placed in the full frame as rows.
    pub fn component_rows(&self, i: u8) -> DyadicMatrix {
        let h = self.half_rank();
        let z = DyadicMatrix::zeros(h, h);
        match i {
            1 => self.l1.basis().hstack(&z),
            _ => z.hstack(self.l2.basis()),
        }
    }

    /// The same tower with `L` replaced.
    pub fn with_lattice(&self, lattice: Lattice) -> BwTower {
        BwTower {
            lattice,
            ..self.clone()
        }
    }

    /// The same tower with `t` replaced.
    pub fn with_t(&self, t: FrameMap) -> BwTower {
        BwTower { t, ..self.clone() }
    }

    /// Reassembles a tower from its parts, checking shapes only.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d: u32,
        lattice: Lattice,
        l1: Lattice,
        l2: Lattice,
        t: FrameMap,
        f: FrameMap,
        child_f: FrameMap,
        child_t: FrameMap,
        child: Option<BwTower>,
    ) -> Result<BwTower> {
        let frame = lattice.frame().clone();
        let half_frame = l1.frame().clone();
        let h = half_frame.rank();
        if frame.rank() != 2 * h || l2.frame().gram() != half_frame.gram() {
            return Err(BwError::Inconsistent("frame ranks".into()));
        }
        if frame.gram() != half_frame.direct_sum(&half_frame).gram() {
            return Err(BwError::Inconsistent("frame is not the double of the half frame".into()));
        }
        for m in [&t, &f] {
            if m.frame().gram() != frame.gram() {
                return Err(BwError::Inconsistent("map frame".into()));
            }
        }
        for m in [&child_f, &child_t] {
            if m.frame().gram() != half_frame.gram() {
                return Err(BwError::Inconsistent("child map frame".into()));
            }
        }
        if (d == 2) != child.is_none() {
            return Err(BwError::Inconsistent("child presence".into()));
        }
        Ok(BwTower {
            d,
            frame,
            half_frame,
            lattice,
            l1,
            l2,
            t,
            f,
            child_f,
            child_t,
            child: child.map(Box::new),
        })
    }
}

/// Orthogonal projection of `L` to `V_i`, as a lattice in the half frame.
pub fn projection(tower: &BwTower, i: u8) -> Result<Lattice> {
    let h = tower.half_rank();
    let range = if i == 1 { 0..h } else { h..2 * h };
    let gens = tower.lattice.basis().select_cols(range);
    Ok(Lattice::new(tower.half_frame.clone(), &gens)?)
}

/// Expected projection: `L_i^*` for odd `d`, `L_i[-1]` for even `d`.
pub fn expected_projection(tower: &BwTower, i: u8) -> Result<Lattice> {
    let li = if i == 1 { &tower.l1 } else { &tower.l2 };
    if tower.d % 2 == 1 {
        Ok(li.dual()?)
    } else {
        Ok(twist(li, &tower.child_f, -1)?)
    }
}

pub fn expected_determinant(d: u32) -> BigInt {
    if d % 2 == 1 {
        BigInt::one()
    } else {
        BigInt::one() << (1u64 << (d - 1))
    }
}

pub fn expected_minimum(d: u32) -> BigInt {
    BigInt::one() << (d / 2)
}

pub fn expected_discriminant(d: u32) -> Vec<BigInt> {
    if d % 2 == 1 {
        Vec::new()
    } else {
        vec![BigInt::from(2); 1 << (d - 1)]
    }
}

/// `|L : L_1 ⊥ L_2| = 2^(2^(d-2))`
pub fn expected_glue_index(d: u32) -> BigInt {
    BigInt::one() << (1u64 << (d - 2))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XRow {
    pub clause: String,
    pub check: String,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XReport {
    pub d: u32,
    pub rows: Vec<XRow>,
    /// Enumeration nodes spent certifying minima (this level and below).
    pub nodes: u64,
}

impl XReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn clause_pass(&self, clause: &str) -> bool {
        self.rows.iter().filter(|r| r.clause == clause).all(|r| r.pass)
    }

    fn push(&mut self, clause: &str, check: &str, computed: impl ToString, expected: impl ToString, pass: bool) {
        self.rows.push(XRow {
            clause: clause.into(),
            check: check.into(),
            computed: computed.to_string(),
            expected: expected.to_string(),
            pass,
        });
    }

    fn flag(&mut self, clause: &str, check: &str, ok: bool) {
        self.push(clause, check, ok, true, ok);
    }
}

/// Outcome of certifying `μ(L) = expected`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimumCertificate {
    /// No nonzero vector of norm below `expected`, exhaustively.
    pub none_below: bool,
    pub exhaustive: bool,
    /// Norm of the exhibited short vector, if one was found.
    pub witness_norm: Option<BigInt>,
    pub witness: Option<Vec<BigInt>>,
    pub nodes: u64,
}

impl MinimumCertificate {
    pub fn certified(&self, expected: &BigInt) -> bool {
        self.none_below && self.exhaustive && self.witness_norm.as_ref() == Some(expected)
    }
}

/// Certifies an integral lattice's minimum by exhaustive search below
/// `expected` plus an exhibited vector of norm exactly `expected`.
pub fn certify_minimum(lattice: &Lattice, expected: &BigInt, budget: u64) -> MinimumCertificate {
    let below = vectors_below_target(lattice, expected, budget);
    let mut nodes = below.nodes;
    let none_below = below.vectors.is_empty();
    let gram = lattice.gram();
    let mut witness = None;
    if gram.is_integral() {
        let g = gram.numerator();
        // A short basis vector usually suffices.
        let (reduced, t) = svp::size_reduce(g);
        for i in 0..reduced.rows() {
            if &reduced[(i, i)] == expected {
                witness = Some(t.row_vec(i));
                break;
            }
        }
        if witness.is_none() {
            let r = svp::vectors_below(lattice, expected, budget);
            nodes += r.nodes;
            witness = r.vectors.into_iter().find(|v| &quadratic_form(g, v) == expected);
        }
    }
    let witness_norm = witness.as_ref().map(|w| {
        let v = DyadicMatrix::from_int(IntMatrix::from_rows(std::slice::from_ref(w))).mul(lattice.basis());
        let n = lattice.norm_of(&v);
        n.to_integer()
    });
    MinimumCertificate {
        none_below,
        exhaustive: below.exhaustive,
        witness_norm,
        witness,
        nodes,
    }
}

fn vectors_below_target(lattice: &Lattice, expected: &BigInt, budget: u64) -> svp::NormBoundReport {
    let bound = expected - BigInt::one();
    svp::vectors_below(lattice, &bound, budget)
}

fn fmt_factors(v: &[BigInt]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

pub fn verify_condition_x(tower: &BwTower, svp_budget: u64) -> XReport {
    let d = tower.d;
    let mut r = XReport {
        d,
        rows: Vec::new(),
        nodes: 0,
    };
    let l = &tower.lattice;

    // (a)
    r.push("a", "rank", l.rank(), 1usize << d, l.rank() == 1 << d);
    r.flag("a", "integral", l.is_integral());
    r.flag("a", "even", l.is_even());
    r.push("a", "rank L1", tower.l1.rank(), 1usize << (d - 1), tower.l1.rank() == 1 << (d - 1));
    let sum = tower.orthogonal_sum();
    let contains = sum.as_ref().ok().and_then(|s| l.contains(s).ok()).unwrap_or(false);
    r.flag("a", "L contains L1 ⊥ L2", contains);
    r.flag("a", "L1 ≅ L2 (equal Gram)", tower.l1.gram() == tower.l2.gram());
    let orth = {
        let a = tower.component_rows(1);
        let b = tower.component_rows(2);
        tower.frame.pairing(&a, &b).is_zero()
    };
    r.flag("a", "L1 orthogonal to L2", orth);

    // (b)
    match &tower.child {
        None => {
            let cert = certificate(l, svp_budget);
            r.nodes += cert.1;
            let ok = cert.0 == (4, true, BigInt::from(4), Some(BigInt::from(2)));
            r.push("b", "L ≅ D4 (rank, even, det, min)", fmt_cert(&cert.0), "(4, even, 4, 2)", ok);
            for (name, li) in [("L1", &tower.l1), ("L2", &tower.l2)] {
                // rank 2, even, det 4, min 2 determines A1^2
                let c = certificate(li, svp_budget);
                r.nodes += c.1;
                let ok = c.0 == (2, true, BigInt::from(4), Some(BigInt::from(2)));
                r.push("b", &format!("{name} ≅ A1^2 (rank, even, det, min)"), fmt_cert(&c.0), "(2, even, 4, 2)", ok);
            }
        }
        Some(child) => {
            let s = tower.s_flag();
            let scaled = if s == 1 {
                tower.half_frame.halved()
            } else {
                Some(tower.half_frame.clone())
            };
            let frame_ok = scaled.as_ref().is_some_and(|f| f.gram() == child.frame.gram());
            r.flag("b", "half frame = child frame scaled by 2^s", frame_ok);
            for (name, li) in [("L1", &tower.l1), ("L2", &tower.l2)] {
                r.flag("b", &format!("2^(-s/2) {name} = child L"), li.basis() == child.lattice.basis());
            }
            let sub = verify_condition_x(child, svp_budget);
            r.nodes += sub.nodes;
            let failed: Vec<String> = sub
                .rows
                .iter()
                .filter(|x| !x.pass)
                .map(|x| format!("({}) {}", x.clause, x.check))
                .collect();
            r.push(
                "b",
                &format!("child satisfies X(2^{})", d - 1),
                if failed.is_empty() { "pass".to_string() } else { failed.join("; ") },
                "pass",
                sub.pass(),
            );
        }
    }

    // (c)
    let mu = expected_minimum(d);
    let cert = certify_minimum(l, &mu, svp_budget);
    r.nodes += cert.nodes;
    r.push(
        "c",
        "no nonzero vector below the minimum (exhaustive)",
        format!("none_below={} exhaustive={}", cert.none_below, cert.exhaustive),
        "none_below=true exhaustive=true",
        cert.none_below && cert.exhaustive,
    );
    r.push(
        "c",
        "minimum attained",
        cert.witness_norm.as_ref().map_or("none".into(), |n| n.to_string()),
        &mu,
        cert.witness_norm.as_ref() == Some(&mu),
    );

    // (d)
    let det = l.determinant();
    let det_expected = expected_determinant(d);
    r.push("d", "det L", &det, &det_expected, det.is_integer() && det.to_integer() == det_expected);
    let disc = l.discriminant_group().map(|g| g.invariant_factors);
    let disc_expected = expected_discriminant(d);
    r.push(
        "d",
        "discriminant group",
        disc.as_ref().map_or("not integral".into(), |v| fmt_factors(v)),
        fmt_factors(&disc_expected),
        disc.as_ref().is_ok_and(|v| *v == disc_expected),
    );

    // (e)
    let t = &tower.t;
    r.flag("e", "t is an isometry", t.is_isometry());
    r.flag("e", "t has order 2", t.is_involution() && !t.matrix().is_identity());
    r.flag("e", "t stabilizes L", t.stabilizes(l));
    let swaps = {
        let a = tower.component_rows(1).mul(t.matrix());
        let b = tower.component_rows(2).mul(t.matrix());
        same_rows(&a, &tower.component_rows(2)) && same_rows(&b, &tower.component_rows(1))
    };
    r.flag("e", "t interchanges L1 and L2", swaps);
    let comm = l.image_rows(&t.minus_one());
    let trivial = sum.as_ref().is_ok_and(|s| s.contains_rows(&comm));
    r.flag("e", "[L, t] ≤ L1 ⊥ L2", trivial);

    // (f)
    for i in [1u8, 2] {
        let li = if i == 1 { &tower.l1 } else { &tower.l2 };
        let p = projection(tower, i);
        let e = expected_projection(tower, i);
        let which = if d % 2 == 1 { "dual" } else { "twist(-1)" };
        let ok = matches!((&p, &e), (Ok(p), Ok(e)) if p == e);
        r.flag("f", &format!("projection to V{i} = {which} of L{i}"), ok);
        if let Ok(p) = &p {
            let stable = tower.child_f.stabilizes(p) && tower.child_t.stabilizes(p);
            r.flag("f", &format!("projection to V{i} stable under child f, t"), stable);
        }
        let stable = tower.child_f.stabilizes(li) && tower.child_t.stabilizes(li);
        r.flag("f", &format!("L{i} stable under child f, t"), stable);
    }
    let lf = FrameMap::diagonal_lift(&tower.child_f, &tower.child_f, tower.frame.clone());
    let lt = FrameMap::diagonal_lift(&tower.child_t, &tower.child_t, tower.frame.clone());
    r.flag("f", "L stable under diagonal child f, t", lf.stabilizes(l) && lt.stabilizes(l));
    r.flag(
        "f",
        "diagonal lifts centralize t",
        lf.then(t) == t.then(&lf) && lt.then(t) == t.then(&lt),
    );
    r
}

// Equal row spans of two generator sets in the same frame (possibly lower rank).
fn same_rows(a: &DyadicMatrix, b: &DyadicMatrix) -> bool {
    use crate::linalg::hnf_basis;
    let k = a.log2_den().max(b.log2_den());
    hnf_basis(&a.numerator_at(k)) == hnf_basis(&b.numerator_at(k))
}

type Cert = (usize, bool, BigInt, Option<BigInt>);

fn certificate(l: &Lattice, budget: u64) -> (Cert, u64) {
    let det = l.determinant();
    let det = if det.is_integer() { det.to_integer() } else { BigInt::zero() };
    match svp::min_norm(l, budget) {
        Ok(m) => ((l.rank(), l.is_even(), det, m.norm.is_integer().then(|| m.norm.to_integer())), m.nodes),
        Err(_) => ((l.rank(), l.is_even(), det, None), budget),
    }
}

fn fmt_cert(c: &Cert) -> String {
    format!(
        "({}, {}, {}, {})",
        c.0,
        if c.1 { "even" } else { "not even" },
        c.2,
        c.3.as_ref().map_or("?".into(), |m| m.to_string())
    )
}
