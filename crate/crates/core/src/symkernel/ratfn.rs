use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Float;

use super::gcd::gcd;
use super::poly::Polynomial;
use super::var::VarId;
use super::{Coeff, KernelError};

/// Rational function in canonical form: `gcd(num, den) = 1`, `den` monic
/// (so its leading coefficient is positive), and zero stored as `0/1`.
/// Structural equality therefore coincides with mathematical equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction<C: Coeff> {
    num: Polynomial<C>,
    den: Polynomial<C>,
}

impl<C: Coeff> RationalFunction<C> {
    pub fn zero() -> Self {
        RationalFunction { num: Polynomial::zero(), den: Polynomial::one() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        RationalFunction { num: Polynomial::constant(c), den: Polynomial::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(C::from_i64(n).expect("integer fits coefficient type"))
    }

    pub fn var(v: VarId) -> Self {
        Self::from_poly(Polynomial::var(v))
    }

    pub fn from_poly(p: Polynomial<C>) -> Self {
        RationalFunction { num: p, den: Polynomial::one() }
    }

    /// Canonicalize `num / den`.
    pub fn new(num: Polynomial<C>, den: Polynomial<C>) -> Result<Self, KernelError> {
        if den.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Polynomial<C>, den: Polynomial<C>) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_constant() {
            return RationalFunction { num: num.scale(&(C::one() / c)), den: Polynomial::one() };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides numerator"), den.div_exact(&g).expect("gcd divides denominator"))
        };
        Self::make_monic(num, den)
    }

    fn make_monic(num: Polynomial<C>, den: Polynomial<C>) -> Self {
        let lc = den.leading_coeff();
        if lc.is_one() {
            return RationalFunction { num, den };
        }
        let inv = C::one() / lc;
        RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn num(&self) -> &Polynomial<C> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<C> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<C> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.num.degree_in(v) > 0 || self.den.degree_in(v) > 0
    }

    /// Largest control-derivative order present, or −1 if none.
    pub fn max_jet_order(&self) -> i32 {
        self.vars().iter().filter_map(|v| v.jet_order()).map(|k| k as i32).max().unwrap_or(-1)
    }

    pub fn neg(&self) -> Self {
        RationalFunction { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_signed(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_signed(other, true)
    }

    fn add_signed(&self, other: &Self, negate: bool) -> Self {
        let onum = if negate { other.num.neg() } else { other.num.clone() };
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return RationalFunction { num: onum, den: other.den.clone() };
        }
        if self.den == other.den {
            let num = self.num.add(&onum);
            if self.den.is_one() {
                return RationalFunction { num, den: self.den.clone() };
            }
            return Self::reduce(num, self.den.clone());
        }
        if self.den.is_one() {
            // p + r/s = (p s + r)/s is already reduced.
            return RationalFunction { num: self.num.mul(&other.den).add(&onum), den: other.den.clone() };
        }
        if other.den.is_one() {
            return RationalFunction { num: self.num.add(&onum.mul(&self.den)), den: self.den.clone() };
        }
        let g = gcd(&self.den, &other.den);
        if g.is_one() {
            let num = self.num.mul(&other.den).add(&onum.mul(&self.den));
            let den = self.den.mul(&other.den);
            if num.is_zero() {
                return Self::zero();
            }
            return Self::make_monic(num, den);
        }
        let qa = self.den.div_exact(&g).expect("gcd divides");
        let qb = other.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&qb).add(&onum.mul(&qa));
        let den = self.den.mul(&qb);
        if num.is_zero() {
            return Self::zero();
        }
        let h = gcd(&num, &g);
        if h.is_one() {
            return Self::make_monic(num, den);
        }
        Self::make_monic(num.div_exact(&h).expect("gcd divides"), den.div_exact(&h).expect("gcd divides"))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return RationalFunction { num: self.num.mul(&other.num), den: Polynomial::one() };
        }
        let g1 = gcd(&self.num, &other.den);
        let g2 = gcd(&other.num, &self.den);
        let a = if g1.is_one() { self.num.clone() } else { self.num.div_exact(&g1).expect("gcd divides") };
        let d = if g1.is_one() { other.den.clone() } else { other.den.div_exact(&g1).expect("gcd divides") };
        let b = if g2.is_one() { other.num.clone() } else { other.num.div_exact(&g2).expect("gcd divides") };
        let c = if g2.is_one() { self.den.clone() } else { self.den.div_exact(&g2).expect("gcd divides") };
        Self::make_monic(a.mul(&b), c.mul(&d))
    }

    pub fn inv(&self) -> Result<Self, KernelError> {
        if self.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        Ok(Self::make_monic(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self, KernelError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn scale(&self, c: &C) -> Self {
        RationalFunction { num: self.num.scale(c), den: self.den.clone() }.normalized_zero()
    }

    fn normalized_zero(self) -> Self {
        if self.num.is_zero() {
            Self::zero()
        } else {
            self
        }
    }

    pub fn pow(&self, e: i32) -> Result<Self, KernelError> {
        if e >= 0 {
            let e = e as u32;
            Ok(RationalFunction { num: self.num.pow(e), den: self.den.pow(e) }.normalized_zero())
        } else {
            self.inv()?.pow(-e)
        }
    }

    /// Re-run canonicalization; the identity on canonical values.
    pub fn renormalize(&self) -> Self {
        Self::reduce(self.num.clone(), self.den.clone())
    }

    /// Partial derivative by the quotient rule.
    pub fn partial(&self, v: VarId) -> Self {
        let dn = self.num.partial(v);
        if self.den.is_one() {
            return RationalFunction { num: dn, den: Polynomial::one() };
        }
        let dd = self.den.partial(v);
        if dd.is_zero() {
            return Self::reduce(dn, self.den.clone());
        }
        self.quotient_rule(&dn, &dd)
    }

    /// `(n'·d - n·d')/d²` in lowest terms. With `d = g·h` and `d' = g·k`
    /// for `g = gcd(d, d')`, only factors of `g` can cancel.
    fn quotient_rule(&self, dn: &Polynomial<C>, dd: &Polynomial<C>) -> Self {
        let g = gcd(&self.den, dd);
        let h = self.den.div_exact(&g).expect("gcd divides");
        let k = dd.div_exact(&g).expect("gcd divides");
        let num = dn.mul(&h).sub(&self.num.mul(&k));
        if num.is_zero() {
            return Self::zero();
        }
        let c = gcd(&num, &g);
        let den = g.div_exact(&c).expect("gcd divides").mul(&h).mul(&h);
        Self::make_monic(num.div_exact(&c).expect("gcd divides"), den)
    }

    /// Apply the derivation `Σ rate(v) ∂/∂v` over the variables present.
    pub fn derivation(&self, rate: &dyn Fn(VarId) -> Option<Self>) -> Self {
        let dnum = poly_derivation(&self.num, rate);
        if self.den.is_one() {
            return dnum;
        }
        let dden = poly_derivation(&self.den, rate);
        if dden.is_zero() {
            return dnum.mul(&Self::from_poly(self.den.clone()).inv().expect("nonzero denominator"));
        }
        if dnum.den.is_one() && dden.den.is_one() {
            return self.quotient_rule(&dnum.num, &dden.num);
        }
        let top = dnum.mul(&Self::from_poly(self.den.clone())).sub(&dden.mul(&Self::from_poly(self.num.clone())));
        let square = Self::from_poly(self.den.mul(&self.den));
        top.div(&square).expect("denominator is nonzero")
    }

    /// Simultaneous substitution; unbound variables stay put.
    pub fn substitute(&self, binding: &dyn Fn(VarId) -> Option<Self>) -> Result<Self, KernelError> {
        let vars = self.vars();
        let mut table: BTreeMap<VarId, Self> = BTreeMap::new();
        for v in vars {
            if let Some(r) = binding(v) {
                table.insert(v, r);
            }
        }
        if table.is_empty() {
            return Ok(self.clone());
        }
        let (pn, qn) = subst_poly(&self.num, &table);
        let (pd, qd) = subst_poly(&self.den, &table);
        if pd.is_zero() {
            return Err(KernelError::SubstitutionPole { denominator: self.den.to_string() });
        }
        // (pn/qn) / (pd/qd)
        let num = RationalFunction::new(pn, qn).expect("substituted denominators are nonzero products");
        let den = RationalFunction::new(pd, qd).expect("substituted denominators are nonzero products");
        num.div(&den)
    }

    /// Exact evaluation at a point binding every variable present.
    pub fn eval_at(&self, point: &BTreeMap<VarId, C>) -> Result<C, KernelError> {
        let look = |v: VarId| point.get(&v).cloned();
        let missing = || KernelError::UnboundVariable;
        let n = self.num.eval(&look).ok_or_else(missing)?;
        let d = self.den.eval(&look).ok_or_else(missing)?;
        if d.is_zero() {
            return Err(KernelError::DenominatorZero);
        }
        Ok(n / d)
    }

    pub fn eval_float<S: Float>(&self, point: &dyn Fn(VarId) -> S) -> S {
        self.num.eval_float(point) / self.den.eval_float(point)
    }

    /// Value of the denominator alone, used to detect singular points.
    pub fn den_float<S: Float>(&self, point: &dyn Fn(VarId) -> S) -> S {
        self.den.eval_float(point)
    }
}

fn poly_derivation<C: Coeff>(
    p: &Polynomial<C>,
    rate: &dyn Fn(VarId) -> Option<RationalFunction<C>>,
) -> RationalFunction<C> {
    let mut acc = RationalFunction::zero();
    for v in p.vars() {
        if let Some(r) = rate(v) {
            if r.is_zero() {
                continue;
            }
            let dp = RationalFunction::from_poly(p.partial(v));
            acc = acc.add(&dp.mul(&r));
        }
    }
    acc
}

/// Substitute into a polynomial, returning `(P, Q)` with value `P / Q`
/// where `Q` is a product of powers of the binding denominators.
fn subst_poly<C: Coeff>(
    p: &Polynomial<C>,
    table: &BTreeMap<VarId, RationalFunction<C>>,
) -> (Polynomial<C>, Polynomial<C>) {
    let mut maxexp: BTreeMap<VarId, u32> = BTreeMap::new();
    for (m, _) in p.terms() {
        for &(v, e) in m.factors() {
            if table.contains_key(&v) {
                let slot = maxexp.entry(v).or_insert(0);
                *slot = (*slot).max(e);
            }
        }
    }
    let mut num_pows: BTreeMap<(VarId, u32), Polynomial<C>> = BTreeMap::new();
    let mut den_pows: BTreeMap<(VarId, u32), Polynomial<C>> = BTreeMap::new();
    fn pow_of<C: Coeff>(
        cache: &mut BTreeMap<(VarId, u32), Polynomial<C>>,
        base: &Polynomial<C>,
        v: VarId,
        e: u32,
    ) -> Polynomial<C> {
        cache.entry((v, e)).or_insert_with(|| base.pow(e)).clone()
    }
    let mut total = Polynomial::zero();
    for (m, c) in p.terms() {
        let mut term = Polynomial::constant(c.clone());
        for &(v, e) in m.factors() {
            match table.get(&v) {
                Some(r) => term = term.mul(&pow_of(&mut num_pows, r.num(), v, e)),
                None => term = term.mul(&Polynomial::monomial(super::var::Monomial::power(v, e), C::one())),
            }
        }
        for (&v, &top) in &maxexp {
            let d = table[&v].den();
            let rest = top - m.factors().iter().find(|f| f.0 == v).map_or(0, |f| f.1);
            if rest > 0 && !d.is_one() {
                term = term.mul(&pow_of(&mut den_pows, d, v, rest));
            }
        }
        total = total.add(&term);
    }
    let mut q = Polynomial::one();
    for (v, e) in maxexp {
        let d = table[&v].den();
        if !d.is_one() {
            q = q.mul(&d.pow(e));
        }
    }
    (total, q)
}

impl<C: Coeff> fmt::Display for RationalFunction<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $via:ident) => {
        impl<C: Coeff> std::ops::$tr<&RationalFunction<C>> for &RationalFunction<C> {
            type Output = RationalFunction<C>;
            fn $m(self, rhs: &RationalFunction<C>) -> RationalFunction<C> {
                self.$via(rhs)
            }
        }
        impl<C: Coeff> std::ops::$tr<RationalFunction<C>> for RationalFunction<C> {
            type Output = RationalFunction<C>;
            fn $m(self, rhs: RationalFunction<C>) -> RationalFunction<C> {
                (&self).$via(&rhs)
            }
        }
        impl<C: Coeff> std::ops::$tr<&RationalFunction<C>> for RationalFunction<C> {
            type Output = RationalFunction<C>;
            fn $m(self, rhs: &RationalFunction<C>) -> RationalFunction<C> {
                (&self).$via(rhs)
            }
        }
        impl<C: Coeff> std::ops::$tr<RationalFunction<C>> for &RationalFunction<C> {
            type Output = RationalFunction<C>;
            fn $m(self, rhs: RationalFunction<C>) -> RationalFunction<C> {
                self.$via(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);

impl<C: Coeff> std::ops::Neg for &RationalFunction<C> {
    type Output = RationalFunction<C>;
    fn neg(self) -> RationalFunction<C> {
        RationalFunction::neg(self)
    }
}

impl<C: Coeff> std::ops::Neg for RationalFunction<C> {
    type Output = RationalFunction<C>;
    fn neg(self) -> RationalFunction<C> {
        RationalFunction::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{RatFn, Rational};

    fn x(i: usize) -> RatFn {
        RatFn::var(VarId::x(i))
    }
    fn u(j: usize) -> RatFn {
        RatFn::var(VarId::u(j))
    }

    #[test]
    fn cancellation_through_gcd() {
        let r = x(2).div(&u(2)).unwrap().mul(&u(2));
        assert_eq!(r, x(2));
    }

    #[test]
    fn quotient_rule_example() {
        let e = RatFn::one().div(&u(2)).unwrap().sub(&x(1));
        let d = e.partial(VarId::u(2));
        assert_eq!(d.to_string(), "(-1)/(u2^2)");
    }

    #[test]
    fn substitution_pole() {
        let e = RatFn::one().div(&u(2)).unwrap();
        let err = e.substitute(&|v| (v == VarId::u(2)).then(RatFn::zero)).unwrap_err();
        assert!(matches!(err, KernelError::SubstitutionPole { .. }));
    }

    #[test]
    fn substitution_composes_inverse_coordinate() {
        // v1/y2 with v1 -> x1 u2 and y2 -> u2, reusing x/u names as target coordinates.
        let target = u(1).div(&x(2)).unwrap();
        let bound = target
            .substitute(&|v| match v {
                VarId::Control { order: 0, index: 1 } => Some(x(1).mul(&u(2))),
                VarId::State(2) => Some(u(2)),
                _ => None,
            })
            .unwrap();
        assert_eq!(bound, x(1));
    }

    #[test]
    fn evaluation_and_poles() {
        let e = x(1).mul(&x(2)).sub(&x(3));
        let pt: BTreeMap<VarId, Rational> =
            [(VarId::x(1), 1), (VarId::x(2), 2), (VarId::x(3), 3)].into_iter().map(|(v, k)| (v, Rational::from_integer(k.into()))).collect();
        assert_eq!(e.eval_at(&pt).unwrap(), Rational::from_integer((-1).into()));
        let inv = RatFn::one().div(&u(2)).unwrap();
        let zero: BTreeMap<VarId, Rational> = [(VarId::u(2), Rational::from_integer(0.into()))].into_iter().collect();
        assert_eq!(inv.eval_at(&zero), Err(KernelError::DenominatorZero));
    }

    #[test]
    fn jet_order_detection() {
        assert_eq!(x(1).mul(&x(2)).sub(&x(3)).max_jet_order(), -1);
        assert_eq!(x(1).mul(&u(2)).max_jet_order(), 0);
        assert_eq!(RatFn::var(VarId::du(2, 1)).max_jet_order(), 1);
    }

    #[test]
    fn canonical_denominator_is_monic() {
        let a = x(1).div(&u(2).scale(&Rational::from_integer(2.into()))).unwrap();
        assert!(a.den().leading_coeff() == Rational::from_integer(1.into()));
        let b = x(1).scale(&Rational::new(1.into(), 2.into())).div(&u(2)).unwrap();
        assert_eq!(a, b);
    }
}
