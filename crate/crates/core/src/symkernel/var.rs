use std::fmt;

/// A coordinate on the jet space of a control system.
///
/// The derived ordering is the global variable order used everywhere:
/// `t < x1 < … < xn < u1 < … < us < u1' < … < us' < u1'' < …`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    Time,
    State(u32),
    Control { order: u32, index: u32 },
}

impl VarId {
    pub fn x(i: usize) -> Self {
        VarId::State(i as u32)
    }

    pub fn u(j: usize) -> Self {
        VarId::Control { order: 0, index: j as u32 }
    }

    pub fn du(j: usize, k: usize) -> Self {
        VarId::Control { order: k as u32, index: j as u32 }
    }

    /// Jet order of a control derivative, `None` for time and states.
    pub fn jet_order(&self) -> Option<usize> {
        match self {
            VarId::Control { order, .. } => Some(*order as usize),
            _ => None,
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self, VarId::Control { .. })
    }

    /// The next control derivative; identity on time and states.
    pub fn raised(&self) -> Self {
        match *self {
            VarId::Control { order, index } => VarId::Control { order: order + 1, index },
            other => other,
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Time => write!(f, "t"),
            VarId::State(i) => write!(f, "x{i}"),
            VarId::Control { order, index } => {
                write!(f, "u{index}")?;
                for _ in 0..*order {
                    write!(f, "'")?;
                }
                Ok(())
            }
        }
    }
}

/// A power product of variables.
///
/// Factors are kept sorted by descending variable; the derived ordering on
/// `(deg, factors)` is graded lexicographic with the largest variable most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    deg: u32,
    factors: Vec<(VarId, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: VarId) -> Self {
        Monomial::power(v, 1)
    }

    pub fn power(v: VarId, e: u32) -> Self {
        if e == 0 {
            return Monomial::one();
        }
        Monomial { deg: e, factors: vec![(v, e)] }
    }

    pub fn from_factors(mut factors: Vec<(VarId, u32)>) -> Self {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_by(|a, b| b.0.cmp(&a.0));
        let mut merged: Vec<(VarId, u32)> = Vec::with_capacity(factors.len());
        for (v, e) in factors {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => merged.push((v, e)),
            }
        }
        let deg = merged.iter().map(|&(_, e)| e).sum();
        Monomial { deg, factors: merged }
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Factors in descending variable order.
    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.factors
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.factors.iter().find(|f| f.0 == v).map_or(0, |f| f.1)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.factors, &other.factors);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { deg: self.deg + other.deg, factors: out }
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut j = 0;
        for &(v, e) in &self.factors {
            let mut e = e;
            if j < other.factors.len() && other.factors[j].0 == v {
                if other.factors[j].1 > e {
                    return None;
                }
                e -= other.factors[j].1;
                j += 1;
            } else if j < other.factors.len() && other.factors[j].0 > v {
                return None;
            }
            if e > 0 {
                out.push((v, e));
            }
        }
        if j < other.factors.len() {
            return None;
        }
        Some(Monomial { deg: self.deg - other.deg, factors: out })
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for &(v, e) in &self.factors {
            let f = other.exponent(v);
            if f > 0 {
                out.push((v, e.min(f)));
            }
        }
        Monomial::from_factors(out)
    }

    /// Remove variable `v`, returning its exponent and the remaining monomial.
    pub fn split_off(&self, v: VarId) -> (u32, Monomial) {
        let e = self.exponent(v);
        if e == 0 {
            return (0, self.clone());
        }
        let factors: Vec<_> = self.factors.iter().copied().filter(|f| f.0 != v).collect();
        (e, Monomial { deg: self.deg - e, factors })
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.factors.iter().rev().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{v}")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_order_matches_jet_convention() {
        let mut vs = vec![VarId::du(1, 1), VarId::u(2), VarId::x(3), VarId::Time, VarId::u(1), VarId::x(1)];
        vs.sort();
        assert_eq!(vs, vec![VarId::Time, VarId::x(1), VarId::x(3), VarId::u(1), VarId::u(2), VarId::du(1, 1)]);
    }

    #[test]
    fn graded_order_puts_degree_first() {
        let a = Monomial::from_factors(vec![(VarId::du(2, 3), 1)]);
        let b = Monomial::from_factors(vec![(VarId::x(1), 1), (VarId::x(2), 1)]);
        assert!(b > a);
        let c = Monomial::var(VarId::u(1));
        let d = Monomial::var(VarId::x(3));
        assert!(c > d);
    }

    #[test]
    fn division_and_gcd() {
        let a = Monomial::from_factors(vec![(VarId::x(1), 2), (VarId::u(2), 1)]);
        let b = Monomial::from_factors(vec![(VarId::x(1), 1)]);
        assert_eq!(a.div(&b).unwrap(), Monomial::from_factors(vec![(VarId::x(1), 1), (VarId::u(2), 1)]));
        assert!(b.div(&a).is_none());
        assert_eq!(a.gcd(&b), b);
        assert_eq!(format!("{a}"), "x1^2*u2");
    }
}
