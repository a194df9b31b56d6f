//! Numerical model of tame Fréchet spaces.
//!
//! Elements of the model space of exponentially decreasing sequences are
//! stored as finitely many Banach-fiber coefficients ([`TruncatedSequence`]).
//! On top of that the crate provides
//!
//! * the `l1`/`linf` seminorm families and empirical tame-equivalence
//!   certificates between gradings ([`grading`], [`equivalence`]),
//! * the bridge to entire functions: evaluation, disk sup-norms, discrete
//!   Cauchy coefficient recovery ([`holo`]),
//! * tame maps, their certificates and the product/composition combinators
//!   ([`maps`]),
//! * regular points, the `DΦ`/`VΦ` pair and a Newton implicit solver for
//!   constraints with finite-dimensional target ([`implicit`]),
//! * charts and atlases for preimages of regular values ([`atlas`]).
//!
//! The target of every constraint is `ℝ^m`, so the implicit function theorem
//! reduces to the classical one and plain Newton iteration is used; no
//! smoothing operators are involved.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod atlas;
pub mod certificate;
pub mod equivalence;
mod error;
pub mod exec;
pub mod fiber;
pub mod grading;
pub mod holo;
pub mod implicit;
pub mod maps;
pub mod probes;
pub mod sequence;
mod tolerance;

pub use certificate::{BoundForm, Certification, FailureWitness, LevelConstant, Provenance, TamenessCertificate};
pub use error::{Error, Result};
pub use fiber::{BanachFiber, FiberPoint, NormKind, ScalarField};
pub use grading::{Grading, GradingKind};
pub use sequence::TruncatedSequence;
pub use tolerance::Tolerance;

pub use num_complex::Complex64;

/// Largest admissible product `n·k` of a level and a coefficient index.
///
/// `e^{nk}` overflows `f64` near 709; weighted squares `e^{2nk}` must stay
/// finite as well.
pub const MAX_EXPONENT: usize = 256;

/// Default highest seminorm index.
pub const DEFAULT_N_MAX: usize = 8;

/// Default truncation degree.
pub const DEFAULT_DEGREE: usize = 32;

/// `Σ_{k≥0} e^{-k} = 1/(1-e^{-1})`, the constant relating the two gradings.
pub fn geometric_constant() -> f64 {
    1.0 / (1.0 - libm::exp(-1.0))
}
