//! Heuristic gcd by integer evaluation and ξ-adic reconstruction, checked
//! by exact division.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::Polynomial;
use super::var::VarId;
use super::Coeff;

type Q = BigRational;
type P = Polynomial<Q>;

const TRIES: usize = 6;
const MAX_BITS: u64 = 60_000;

/// Monic gcd over the rationals, or `None` when the heuristic gives up.
pub(crate) fn gcd<C: Coeff>(a: &Polynomial<C>, b: &Polynomial<C>) -> Option<Polynomial<C>> {
    let a = primitive(&to_q(a)?);
    let b = primitive(&to_q(b)?);
    let g = heu(&a, &b)?;
    from_q(&g.monic())
}

fn to_q<C: Coeff>(p: &Polynomial<C>) -> Option<P> {
    let terms = p.terms().iter().map(|(m, c)| Some((m.clone(), c.to_rational()?))).collect::<Option<Vec<_>>>()?;
    Some(P::from_terms(terms))
}

fn from_q<C: Coeff>(p: &P) -> Option<Polynomial<C>> {
    let terms = p.terms().iter().map(|(m, c)| Some((m.clone(), C::from_rational(c)?))).collect::<Option<Vec<_>>>()?;
    Some(Polynomial::from_terms(terms))
}

fn int(n: BigInt) -> Q {
    Q::from_integer(n)
}

/// Integer content of a polynomial with integer coefficients.
fn content(p: &P) -> BigInt {
    p.terms().iter().fold(BigInt::zero(), |g, (_, c)| g.gcd(c.numer()))
}

/// Scale to integer coefficients with content 1 and positive leading term.
fn primitive(p: &P) -> P {
    if p.is_zero() {
        return p.clone();
    }
    let den = p.terms().iter().fold(BigInt::one(), |l, (_, c)| l.lcm(c.denom()));
    let ip = p.scale(&int(den));
    let mut c = content(&ip);
    if ip.leading_coeff().is_negative() {
        c = -c;
    }
    ip.scale(&Q::new(BigInt::one(), c))
}

fn norm(p: &P) -> BigInt {
    p.terms().iter().map(|(_, c)| c.numer().abs()).max().unwrap_or_default()
}

fn eval_at(p: &P, v: VarId, xi: &BigInt) -> P {
    let x = int(xi.clone());
    p.coeffs_in(v).iter().rev().fold(P::zero(), |acc, c| acc.scale(&x).add(c))
}

/// Rebuild a polynomial in `v` from its value at `v = ξ` by symmetric
/// base-ξ digits of every coefficient.
fn reconstruct(g: &P, v: VarId, xi: &BigInt) -> P {
    let half = xi / 2;
    let mut rest = g.clone();
    let mut digits = Vec::new();
    while !rest.is_zero() {
        let digit: Vec<_> = rest
            .terms()
            .iter()
            .map(|(m, c)| {
                let mut r = c.numer().mod_floor(xi);
                if r > half {
                    r -= xi;
                }
                (m.clone(), int(r))
            })
            .collect();
        let digit = P::from_terms(digit);
        rest = rest.sub(&digit).scale(&Q::new(BigInt::one(), xi.clone()));
        digits.push(digit);
    }
    P::from_coeffs_in(v, &digits)
}

fn heu(a: &P, b: &P) -> Option<P> {
    if a.is_zero() {
        return Some(primitive(b));
    }
    if b.is_zero() {
        return Some(primitive(a));
    }
    let (ca, cb) = (content(a), content(b));
    let c = ca.gcd(&cb);
    if a.is_constant() || b.is_constant() {
        return Some(P::constant(int(c)));
    }
    let a = a.scale(&Q::new(BigInt::one(), ca));
    let b = b.scale(&Q::new(BigInt::one(), cb));
    let v = *a.vars().union(&b.vars()).next().expect("nonconstant");
    let mut xi: BigInt = norm(&a).min(norm(&b)) * 2 + 29;
    for _ in 0..TRIES {
        if xi.bits() * u64::from(a.degree_in(v).max(b.degree_in(v)) + 1) > MAX_BITS {
            return None;
        }
        let (ea, eb) = (eval_at(&a, v, &xi), eval_at(&b, v, &xi));
        if !ea.is_zero() && !eb.is_zero() {
            let big = heu(&ea, &eb)?;
            let g = primitive(&reconstruct(&big, v, &xi));
            if !g.is_zero() && a.div_exact(&g).is_some() && b.div_exact(&g).is_some() {
                return Some(g.scale(&int(c)));
            }
        }
        xi = xi * 73_794 / 27_011;
    }
    None
}
