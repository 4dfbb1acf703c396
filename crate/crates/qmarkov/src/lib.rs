//! Structure analysis for semigroups of quantum channels.
//!
//! A quantum channel in the Heisenberg picture is a completely positive
//! unital map Φ on d×d matrices; its predual Φ_* evolves states and
//! preserves trace. This crate takes a channel given by predual Kraus
//! operators (Φ_*(ρ) = Σ Bᵢ ρ Bᵢ†) and computes the objects that govern its
//! long-time behaviour:
//!
//! - enclosures (invariant subspaces certified through subharmonic
//!   projections, Φ(p) ≥ p) and their lattice,
//! - the recurrence decomposition into positive recurrent and transient
//!   subspaces, with the maximal-support invariant state,
//! - the fixed-point space F(P) = {x : Φ(x) = x} and checks of when it is
//!   a *-algebra,
//! - absorption operators A(V) = lim Φⁿ(p_V), by iteration and by a
//!   compressed linear system, with the block identities they satisfy,
//! - decompositions into orthogonal minimal enclosures,
//! - classical Markov chains embedded as diagonal channels, bridging
//!   absorption operators and absorption probabilities,
//! - a truncated model of the symmetric walk on the infinite dihedral
//!   group, whose potential sums diverge like √n and whose spectral
//!   partitions refine without minimal parts showing up.
//!
//! Continuous-time semigroups enter through GKLS generators: build the
//! generator, exponentiate, and analyze the sampled channel.
//!
//! See the `book/` directory for a guided tour; its code snippets run as
//! doc-tests of this crate.

pub mod absorption;
pub mod analysis;
pub mod channel;
pub mod dihedral;
mod error;
pub mod numerics;
pub mod sampling;
pub mod structure;

pub use error::{Error, Result};

// The guide chapters double as doc-tests so the book and the library cannot
// drift apart.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/channels.md")]
    pub struct Channels;
    #[doc = include_str!("../../../book/src/enclosures.md")]
    pub struct Enclosures;
    #[doc = include_str!("../../../book/src/recurrence.md")]
    pub struct Recurrence;
    #[doc = include_str!("../../../book/src/absorption.md")]
    pub struct Absorption;
    #[doc = include_str!("../../../book/src/fixed-points.md")]
    pub struct FixedPoints;
    #[doc = include_str!("../../../book/src/dihedral-walk.md")]
    pub struct DihedralWalk;
    #[doc = include_str!("../../../book/src/continuous-time.md")]
    pub struct ContinuousTime;
}
