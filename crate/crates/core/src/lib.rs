//! Exact verification, pullback and factorization of dynamic equivalences
//! between control systems on truncated jet bundles.
//!
//! The symbolic kernel is generic over an exact coefficient field; the rest
//! of the crate works with the [`Rational`] instantiation through the
//! aliases below.

pub mod symkernel;

pub use symkernel::{Coeff, KernelError, Monomial, VarId};

/// Exact rational coefficients.
pub type Rational = num_rational::BigRational;
/// Polynomials over [`Rational`].
pub type Poly = symkernel::Polynomial<Rational>;
/// Rational functions over [`Rational`]; the universal scalar.
pub type RatFn = symkernel::RationalFunction<Rational>;

pub mod blocks;
pub mod jetcontrol;
pub mod coframes;
pub mod equivalence;
pub mod factorize;
pub mod sysio;
pub mod fixtures;
pub mod classify;
