use std::collections::BTreeSet;
use std::fmt;

use num_traits::Float;

use super::var::{Monomial, VarId};
use super::Coeff;

/// Sparse multivariate polynomial with exact field coefficients.
///
/// Terms are sorted by descending monomial order, so the first term is the
/// leading term. No zero coefficients are stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial<C: Coeff> {
    terms: Vec<(Monomial, C)>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: vec![(Monomial::one(), c)] }
    }

    pub fn var(v: VarId) -> Self {
        Polynomial { terms: vec![(Monomial::var(v), C::one())] }
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: vec![(m, c)] }
    }

    /// Build from arbitrary terms, merging duplicates and dropping zeros.
    pub fn from_terms(mut terms: Vec<(Monomial, C)>) -> Self {
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        let mut out: Vec<(Monomial, C)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == m => last.1 = last.1.clone() + c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Polynomial { terms: out }
    }

    pub fn terms(&self) -> &[(Monomial, C)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_constant(&self) -> Option<C> {
        match self.terms.as_slice() {
            [] => Some(C::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn leading(&self) -> Option<&(Monomial, C)> {
        self.terms.first()
    }

    pub fn leading_coeff(&self) -> C {
        self.terms.first().map_or_else(C::zero, |t| t.1.clone())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0.degree()).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for (m, _) in &self.terms {
            out.extend(m.factors().iter().map(|f| f.0));
        }
        out
    }

    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.iter().map(|t| t.0.exponent(v)).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Self {
        Polynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())).collect() }
    }

    pub fn mul_monomial(&self, mono: &Monomial, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.mul(mono), k.clone() * c.clone())).collect(),
        }
    }

    /// Scale so that the leading coefficient is one.
    pub fn monic(&self) -> Self {
        match self.terms.first() {
            None => Self::zero(),
            Some((_, lc)) if lc.is_one() => self.clone(),
            Some((_, lc)) => {
                let inv = C::one() / lc.clone();
                self.scale(&inv)
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.merge(other, true)
    }

    fn merge(&self, other: &Self, negate: bool) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let signed = |c: &C| if negate { -c.clone() } else { c.clone() };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((b[j].0.clone(), signed(&b[j].1)));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = a[i].1.clone() + signed(&b[j].1);
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(|(m, c)| (m.clone(), signed(c))));
        Polynomial { terms: out }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                terms.push((ma.mul(mb), ca.clone() * cb.clone()));
            }
        }
        Self::from_terms(terms)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn partial(&self, v: VarId) -> Self {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(v);
            if e == 0 {
                continue;
            }
            let m2 = rest.mul(&Monomial::power(v, e - 1));
            terms.push((m2, c.clone() * C::from_u32(e).expect("exponent fits coefficient type")));
        }
        Self::from_terms(terms)
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(C::one() / c)));
        }
        let (lm, lc) = d.leading().cloned().unwrap();
        let inv = C::one() / lc;
        let mut rem = self.clone();
        let mut quot = Vec::new();
        while let Some((rm, rc)) = rem.leading().cloned() {
            let qm = rm.div(&lm)?;
            let qc = rc * inv.clone();
            rem = rem.sub(&d.mul_monomial(&qm, &qc));
            quot.push((qm, qc));
        }
        Some(Self::from_terms(quot))
    }

    /// Coefficients with respect to `v`: entry `k` is the coefficient of `v^k`.
    pub fn coeffs_in(&self, v: VarId) -> Vec<Self> {
        let deg = self.degree_in(v) as usize;
        let mut buckets: Vec<Vec<(Monomial, C)>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(v);
            buckets[e as usize].push((rest, c.clone()));
        }
        buckets.into_iter().map(Self::from_terms).collect()
    }

    pub fn from_coeffs_in(v: VarId, coeffs: &[Self]) -> Self {
        let mut terms = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            let vk = Monomial::power(v, k as u32);
            for (m, a) in &c.terms {
                terms.push((m.mul(&vk), a.clone()));
            }
        }
        Self::from_terms(terms)
    }

    /// Greatest common divisor of all monomials.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else { return Monomial::one() };
        let mut g = first.clone();
        for (m, _) in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    /// Exact evaluation; variables missing from the lookup yield `None`.
    pub fn eval(&self, point: &dyn Fn(VarId) -> Option<C>) -> Option<C> {
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in m.factors() {
                let x = point(v)?;
                t = t * num_traits::pow(x, e as usize);
            }
            acc = acc + t;
        }
        Some(acc)
    }

    /// Floating-point evaluation for numerical witnesses.
    pub fn eval_float<S: Float>(&self, point: &dyn Fn(VarId) -> S) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut t = S::from(c.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(S::nan);
            for &(v, e) in m.factors() {
                t = t * point(v).powi(e as i32);
            }
            acc = acc + t;
        }
        acc
    }
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_text = mag.to_string();
            let fractional = coeff_text.contains('/');
            if m.is_one() {
                if fractional {
                    write!(f, "({coeff_text})")?;
                } else {
                    write!(f, "{coeff_text}")?;
                }
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else if fractional {
                write!(f, "({coeff_text})*{m}")?;
            } else {
                write!(f, "{coeff_text}*{m}")?;
            }
        }
        Ok(())
    }
}
