//! Quotient modules `Q(l, m)`, commutator modules `A(g)`, `B(g)`, the Jordan
//! profile of `u` on `L/Tel(t)`, and the lemma suite relating commutator
//! density with 2/4- and 3/4-generation.
//!
//! Forms are ignored here: only frame coordinates matter. Subgroups of
//! `Q(-1,1) = ½Tel/2Tel` are carried as their preimages in `½Tel`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::action::{eigen_rows, eigenlattice, tel, DihedralAction, FrameMap, Sign};
use crate::lattice::{Lattice, LatticeError};
use crate::linalg::f2::F2Matrix;
use crate::linalg::hnf::left_kernel;
use crate::linalg::{DyadicMatrix, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct JordanProfile {
    pub n: usize,
    pub d: usize,
    pub e: usize,
}

/// `2^l Tel(t) / 2^m Tel(t)`, a free `Z/2^(m-l)` module of rank `2n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QModule {
    pub l: i32,
    pub m: i32,
    /// Basis of `2^l Tel(t)` in frame coordinates.
    pub generators: DyadicMatrix,
    /// Induced actions in that basis, entries reduced into `[0, 2^(m-l))`.
    pub t: IntMatrix,
    pub u: IntMatrix,
    pub f: IntMatrix,
}

impl QModule {
    pub fn exponent(&self) -> u32 {
        (self.m - self.l) as u32
    }

    /// `log2 |Q(l, m)| = (m - l) 2n`; equals the dimension over the
    /// two-element field when `m - l = 1`.
    pub fn log2_order(&self) -> usize {
        self.exponent() as usize * self.generators.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.l == self.m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    A,
    B,
}

/// A subgroup of `Q(-1,1)`, stored as its preimage in `½Tel(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutatorModule {
    pub which: Which,
    pub g: FrameMap,
    pub preimage: Lattice,
    pub order: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TwoFourError {
    #[error("need l <= m, got l = {l}, m = {m}")]
    BadRange { l: i32, m: i32 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Action(#[from] crate::action::ActionError),
}

pub type Result<T> = std::result::Result<T, TwoFourError>;

/// Matrix of `g` in the basis of `l` (which `g` must stabilize).
fn in_basis(l: &Lattice, g: &DyadicMatrix) -> IntMatrix {
    l.coordinates_of_rows(&l.basis().mul(g))
        .expect("map stabilizes the lattice")
}

pub fn jordan_profile(action: &DihedralAction) -> JordanProfile {
    let l = action.lattice();
    let n2 = l.rank();
    let tel = tel(l, action.t()).expect("validated action");
    let w = F2Matrix::from_int(&l.coordinates_of_rows(tel.basis()).expect("Tel lies in L"));
    let rank_w = w.rank();
    let dim = n2 - rank_w;
    let u = F2Matrix::from_int(&in_basis(l, action.u().matrix()));
    let u1 = u.add(&F2Matrix::identity(n2));
    let d = u1.stack(&w).rank() - rank_w;
    assert!(2 * d <= dim, "u - 1 has rank {d} on a space of dimension {dim}");
    JordanProfile {
        n: n2 / 2,
        d,
        e: dim - 2 * d,
    }
}

pub fn q_module(action: &DihedralAction, l: i32, m: i32) -> Result<QModule> {
    if l > m {
        return Err(TwoFourError::BadRange { l, m });
    }
    let tel = tel(action.lattice(), action.t())?;
    let base = tel.scaled_pow2(l);
    let modulus = BigInt::one() << (m - l) as u32;
    let reduce = |g: &FrameMap| {
        let c = in_basis(&base, g.matrix());
        let data = c
            .entries()
            .iter()
            .map(|x| num_integer::Integer::mod_floor(x, &modulus))
            .collect();
        IntMatrix::from_flat(c.rows(), c.cols(), data)
    };
    Ok(QModule {
        l,
        m,
        generators: base.basis().clone(),
        t: reduce(action.t()),
        u: reduce(action.u()),
        f: reduce(action.f()),
    })
}

/// Everything the lemma checks share.
struct Ctx<'a> {
    l: &'a Lattice,
    tel: Lattice,
    half_tel: Lattice,
    two_tel: Lattice,
}

impl<'a> Ctx<'a> {
    fn new(action: &'a DihedralAction) -> Self {
        let l = action.lattice();
        let tel = tel(l, action.t()).expect("validated action");
        Ctx {
            l,
            half_tel: tel.scaled_pow2(-1),
            two_tel: tel.scaled_pow2(1),
            tel,
        }
    }

    // `rows + 2Tel` as a lattice.
    fn plus_two_tel(&self, rows: &DyadicMatrix) -> Lattice {
        self.two_tel.sum_rows(rows).expect("same frame")
    }

    fn module(&self, g: &FrameMap, which: Which) -> CommutatorModule {
        let source = match which {
            Which::A => &self.half_tel,
            Which::B => self.l,
        };
        let rows = source.image_rows(&g.minus_one());
        let preimage = self.plus_two_tel(&rows);
        let order = self.two_tel.index_in(&preimage).expect("2Tel lies below");
        CommutatorModule {
            which,
            g: g.clone(),
            preimage,
            order,
        }
    }
}

pub fn commutator_module(action: &DihedralAction, g: &FrameMap, which: Which) -> CommutatorModule {
    let ctx = Ctx::new(action);
    assert!(
        ctx.half_tel.contains(ctx.l).unwrap_or(false),
        "L must lie in ½Tel(t)"
    );
    ctx.module(g, which)
}

/// `{x in l : x m in target}`
fn preimage(l: &Lattice, m: &DyadicMatrix, target: &Lattice) -> Lattice {
    let image = l.basis().mul(m);
    let k = image.log2_den().max(target.basis().log2_den());
    let stacked = image.numerator_at(k).vstack(&target.basis().numerator_at(k));
    let kernel = left_kernel(&stacked);
    let c = kernel.select_cols(0..l.rank());
    let rows = DyadicMatrix::from_int(c).mul(l.basis());
    Lattice::new(l.frame().clone(), &rows).expect("preimage has full rank")
}

// Lattice spanned by rows, if they have full rank.
fn span(l: &Lattice, rows: &DyadicMatrix) -> Option<Lattice> {
    Lattice::new(l.frame().clone(), rows).ok()
}

fn eig(l: &Lattice, s: &FrameMap, e: Sign) -> DyadicMatrix {
    eigen_rows(l, s, e).expect("validated action")
}

pub fn is_commutator_dense(action: &DihedralAction) -> bool {
    let l = action.lattice();
    let lf = l.image_rows(&action.f().minus_one());
    let lt = l.image_rows(&action.t().minus_one());
    let lu = l.image_rows(&action.u().minus_one());
    span(l, &lf) == span(l, &lt.vstack(&lu))
}

pub fn gen24(action: &DihedralAction) -> bool {
    let l = action.lattice();
    let rows = eig(l, action.t(), Sign::Plus).vstack(&eig(l, action.u(), Sign::Plus));
    span(l, &rows).as_ref() == Some(l)
}

pub fn gen34(action: &DihedralAction) -> bool {
    let l = action.lattice();
    let fixed: Vec<DyadicMatrix> = action
        .noncentral_involutions()
        .iter()
        .map(|(_, s)| eig(l, s, Sign::Plus))
        .collect();
    (0..4).all(|skip| {
        let rows = (0..4)
            .filter(|&i| i != skip)
            .map(|i| fixed[i].clone())
            .reduce(|a, b| a.vstack(&b))
            .unwrap();
        span(l, &rows).as_ref() == Some(l)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaRow {
    pub lemma: String,
    pub check: String,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
}

/// Headline numbers of a lemma run (orders are group orders, not logs).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaValues {
    pub profile: JordanProfile,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub tel_index: BigInt,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub two_tel_index: BigInt,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub order_b_u: BigInt,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub order_b_t: BigInt,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub order_b_sum: BigInt,
    #[serde(serialize_with = "crate::json::ser_big")]
    pub gap_index: BigInt,
    pub dense: bool,
    pub gen24: bool,
    pub gen34: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub values: LemmaValues,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, lemma: &str) -> Option<&LemmaRow> {
        self.rows.iter().find(|r| r.lemma == lemma)
    }

    fn push(&mut self, lemma: &str, check: &str, computed: impl ToString, expected: impl ToString, pass: bool) {
        self.rows.push(LemmaRow {
            lemma: lemma.into(),
            check: check.into(),
            computed: computed.to_string(),
            expected: expected.to_string(),
            pass,
        });
    }

    fn equal<T: PartialEq + ToString>(&mut self, lemma: &str, check: &str, computed: T, expected: T) {
        let pass = computed == expected;
        self.push(lemma, check, computed, expected, pass);
    }

    fn holds(&mut self, lemma: &str, check: &str, ok: bool) {
        self.push(lemma, check, ok, true, ok);
    }
}

fn pow2(k: usize) -> BigInt {
    BigInt::one() << k
}

pub fn verify_lemma_suite(action: &DihedralAction) -> LemmaReport {
    let ctx = Ctx::new(action);
    let l = ctx.l;
    let (t, u, f) = (action.t(), action.u(), action.f());
    let p = jordan_profile(action);
    let (n, d, e) = (p.n, p.d, p.e);

    let tel_index = ctx.tel.index_in(l).expect("Tel ≤ L");
    let two_tel_index = ctx.two_tel.index_in(l).expect("2Tel ≤ L");
    let a_t = ctx.module(t, Which::A);
    let a_u = ctx.module(u, Which::A);
    let a_f = ctx.module(f, Which::A);
    let b_t = ctx.module(t, Which::B);
    let b_u = ctx.module(u, Which::B);
    let b_f = ctx.module(f, Which::B);
    let b_sum = b_t.preimage.sum(&b_u.preimage).expect("same frame");
    let order_b_sum = ctx.two_tel.index_in(&b_sum).expect("2Tel below");

    let lt = l.image_rows(&t.minus_one());
    let lu = l.image_rows(&u.minus_one());
    let lf_rows = l.image_rows(&f.minus_one());
    let lf = span(l, &lf_rows).expect("L(f-1) contains 2L");
    let gap_index = lf.index_in(&b_sum).unwrap_or_else(|_| BigInt::zero());

    let dense = is_commutator_dense(action);
    let g24 = gen24(action);
    let g34 = gen34(action);

    let mut r = LemmaReport {
        rows: Vec::new(),
        values: LemmaValues {
            profile: p,
            tel_index: tel_index.clone(),
            two_tel_index: two_tel_index.clone(),
            order_b_u: b_u.order.clone(),
            order_b_t: b_t.order.clone(),
            order_b_sum: order_b_sum.clone(),
            gap_index: gap_index.clone(),
            dense,
            gen24: g24,
            gen34: g34,
        },
    };

    // Profile sanity and the two index formulas.
    r.holds("profile", "2L ≤ Tel(t) ≤ L", ctx.tel.contains(&l.scaled_pow2(1)).unwrap_or(false) && l.contains(&ctx.tel).unwrap_or(false));
    r.holds("profile", "L ≤ ½Tel(t)", ctx.half_tel.contains(l).unwrap_or(false));
    r.equal("tel-index", "|L : Tel(t)| = 2^(2d+e)", tel_index, pow2(2 * d + e));
    r.equal("two-tel-index", "|L : 2Tel(t)| = 2^(2n+2d+e)", two_tel_index, pow2(2 * n + 2 * d + e));

    // Q(0,1) is free over F2<u>: (u-1) has rank n on Tel/2Tel.
    let q01 = q_module(action, 0, 1).expect("0 ≤ 1");
    let u1 = F2Matrix::from_int(&q01.u).add(&F2Matrix::identity(2 * n));
    r.equal("q01-free", "rank of u-1 on Q(0,1) = n", u1.rank(), n);

    // A(u) ∩ Q(0,1) = B(u) ∩ Q(0,1) = Q(0,1)(u-1)
    let q01_u = ctx.plus_two_tel(&ctx.tel.image_rows(&u.minus_one()));
    let au_cap = a_u.preimage.intersect(&ctx.tel).expect("same frame");
    let bu_cap = b_u.preimage.intersect(&ctx.tel).expect("same frame");
    r.holds("a-b-u-in-q01", "A(u) ∩ Q(0,1) = Q(0,1)(u-1)", au_cap == q01_u);
    r.holds("a-b-u-in-q01", "B(u) ∩ Q(0,1) = Q(0,1)(u-1)", bu_cap == q01_u);

    // Fixed cosets of u on L/Tel(t) lift to L^+(u).
    let fixed_cosets = preimage(l, &u.minus_one(), &ctx.tel);
    let lifted = ctx.tel.sum_rows(&eig(l, u, Sign::Plus)).expect("same frame");
    r.holds("coset-lifting", "{x ∈ L : x(u-1) ∈ Tel(t)} = L^+(u) + Tel(t)", fixed_cosets == lifted);

    // A(t) ∩ A(u) = 0
    let cap = a_t.preimage.intersect(&a_u.preimage).expect("same frame");
    r.holds("a-t-cap-a-u", "A(t) ∩ A(u) = 0", cap == ctx.two_tel);

    // B(g) ≤ A(g)
    for m in [(&a_t, &b_t, "t"), (&a_u, &b_u, "u"), (&a_f, &b_f, "f")] {
        r.holds("b-in-a", &format!("B({}) ≤ A({})", m.2, m.2), m.0.preimage.contains(&m.1.preimage).unwrap_or(false));
    }

    r.equal("order-B(u)", "|B(u)| = 2^(n+d)", b_u.order.clone(), pow2(n + d));

    // Kernel of t-1 on L/2Tel(t) is Tel(t)/2Tel(t).
    let ker = preimage(l, &t.minus_one(), &ctx.two_tel);
    r.holds("ker-t-1", "{x ∈ L : x(t-1) ∈ 2Tel(t)} = Tel(t)", ker == ctx.tel);

    r.equal("order-B(t)", "|B(t)| = 2^(2d+e)", b_t.order.clone(), pow2(2 * d + e));

    let bcap = b_t.preimage.intersect(&b_u.preimage).expect("same frame");
    r.holds("b-t-cap-b-u", "B(t) ∩ B(u) = 0", bcap == ctx.two_tel);
    r.equal("order-B(t)+B(u)", "|B(t)+B(u)| = 2^(n+3d+e)", order_b_sum.clone(), pow2(n + 3 * d + e));
    r.equal("order-B(t)+B(u)", "|B(t)+B(u)| = |B(t)| |B(u)|", order_b_sum, &b_t.order * &b_u.order);

    // [L,D] = L(t-1) + L(u-1) ≥ L(f-1) ≥ 2L
    let all_comm = action
        .elements()
        .iter()
        .map(|g| l.image_rows(&g.minus_one()))
        .reduce(|a, b| a.vstack(&b))
        .unwrap();
    let ld = span(l, &all_comm);
    let tu = span(l, &lt.vstack(&lu));
    r.holds("commutator-chain", "[L,D] = L(t-1) + L(u-1)", ld.is_some() && ld == tu);
    r.holds("commutator-chain", "L(f-1) ≤ L(t-1) + L(u-1)", tu.as_ref().is_some_and(|x| x.contains(&lf).unwrap_or(false)));
    r.holds("commutator-chain", "2L ≤ L(f-1)", lf.contains(&l.scaled_pow2(1)).unwrap_or(false));
    r.equal("f-index", "|L : L(f-1)| = 2^n", lf.index_in(l).unwrap_or_default(), pow2(n));
    r.equal("gap-index", "|B(t)+B(u) : L(f-1)/2Tel(t)| = 2^d", gap_index, pow2(d));
    r.push(
        "density-iff-d0",
        "commutator density ⟺ d = 0",
        format!("dense={dense} d={d}"),
        "agree",
        dense == (d == 0),
    );
    r.push("gen24-iff-gen34", "2/4-generation ⟺ 3/4-generation", format!("gen24={g24} gen34={g34}"), "agree", g24 == g34);
    r.push(
        "gen24-iff-density",
        "2/4-generation ⟺ commutator density",
        format!("gen24={g24} dense={dense}"),
        "agree",
        g24 == dense,
    );

    // Equal determinants of the eigenlattices, when a form is preserved.
    if action.is_isometric() {
        for (name, s) in action.noncentral_involutions() {
            let plus = eigenlattice(l, &s, Sign::Plus).expect("validated");
            let minus = eigenlattice(l, &s, Sign::Minus).expect("validated");
            let (dp, dm) = (plus.determinant(), minus.determinant());
            r.push(
                "eigen-det",
                &format!("det L^+({name}) = det L^-({name})"),
                format!("{dp} vs {dm}"),
                "equal",
                dp == dm,
            );
        }
    }
    r
}
