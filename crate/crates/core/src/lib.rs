//! Exact lattice computations around Barnes-Wall lattices and dihedral
//! group actions on free abelian groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: integer/dyadic matrices, Hermite and Smith normal forms.
//! * [`lattice`]: full-rank lattices in a framed inner-product space.
//! * [`svp`]: exact bounded-norm enumeration and minimum certification.
//! * [`action`]: dihedral actions, eigenlattices, commutators, twists.
//! * [`twofour`]: the mod-2 commutator modules and the lemma verifiers.
//! * [`barnes_wall`]: the recursive tower and its Condition X verifier.
//! * [`uniqueness`]: glue enumeration between `L1 ⊥ L2` and its twist.
//! * [`testkit`]: canonical and seeded random dihedral instances.

pub mod action;
pub mod barnes_wall;
pub mod json;
pub mod lattice;
pub mod linalg;
pub mod svp;
pub mod testkit;
pub mod twofour;
pub mod uniqueness;
