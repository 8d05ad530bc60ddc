//! Exact multivariate rational functions over jet variables.

pub mod gcd;
mod heuristic;
pub mod linalg;
pub mod poly;
pub mod ratfn;
pub mod var;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use thiserror::Error;

pub use poly::Polynomial;
pub use ratfn::RationalFunction;
pub use var::{Monomial, VarId};

/// Exact field coefficients. `Eq + Hash` rules out floating point.
pub trait Coeff:
    Clone + Eq + Hash + Debug + Display + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// The value as a rational number, for fields embedded in `Q`.
    fn to_rational(&self) -> Option<BigRational> {
        None
    }

    fn from_rational(_: &BigRational) -> Option<Self> {
        None
    }
}

impl Coeff for BigRational {
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn from_rational(r: &BigRational) -> Option<Self> {
        Some(r.clone())
    }
}

impl Coeff for Rational64 {
    fn to_rational(&self) -> Option<BigRational> {
        Some(BigRational::new((*self.numer()).into(), (*self.denom()).into()))
    }

    fn from_rational(r: &BigRational) -> Option<Self> {
        Some(Rational64::new(r.numer().to_i64()?, r.denom().to_i64()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("substitution makes the denominator {denominator} vanish identically")]
    SubstitutionPole { denominator: String },
    #[error("denominator vanishes at the evaluation point")]
    DenominatorZero,
    #[error("evaluation point leaves a variable unbound")]
    UnboundVariable,
}
