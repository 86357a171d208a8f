//! Twisted sums `R x E` of the real line with finitely supported sequence
//! spaces, and a desk-scale construction of a trivial-dual vector topology
//! whose neighborhoods control the twisted quasi-norm.
//!
//! The crate is organized bottom-up:
//!
//! * [`seqspace`]: exact rational sparse sequences and the norms on them.
//! * [`quasilinear`]: the Ribe function and its relatives, splitting maps.
//! * [`twisted`]: the twisted-sum quasi-norm and its neighborhood balls.
//! * [`sumsets`]: certificates for membership in weighted sums of finite sets.
//! * [`construction`]: the level-by-level construction of the generator sets
//!   and the verifier for the bound chain on their sums.
//! * [`oracles`]: brute-force and adversarial searches that certify the
//!   constants the construction relies on.
//!
//! Coefficients are exact rationals throughout; only logarithms, square roots
//! and real powers are taken in double precision.

pub mod construction;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod oracles;
pub mod quasilinear;
pub mod rational;
pub mod seqspace;
pub mod sumsets;
pub mod twisted;

pub use error::{Error, Result};
pub use rational::Rational;
pub use seqspace::{Element, FinSeq, MixedSeq, Space};

/// Interior margin for strict inequalities whose sides involve logarithms.
pub const STRICT_MARGIN: f64 = 1e-9;
