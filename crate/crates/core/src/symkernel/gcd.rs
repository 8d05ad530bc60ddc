//! Multivariate gcd over an exact field by recursive primitive
//! pseudo-remainder sequences.

use super::poly::Polynomial;
use super::var::{Monomial, VarId};
use super::Coeff;

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd<C: Coeff>(a: &Polynomial<C>, b: &Polynomial<C>) -> Polynomial<C> {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one();
    }
    if a.is_monomial() || b.is_monomial() {
        let g = a.monomial_content().gcd(&b.monomial_content());
        return Polynomial::monomial(g, C::one());
    }
    if a.monic() == b.monic() {
        return a.monic();
    }

    // Pull out common monomial factors first; cheap and frequent.
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    if !ma.is_one() || !mb.is_one() {
        let mg = ma.gcd(&mb);
        let a2 = a.div_exact(&Polynomial::monomial(ma, C::one())).expect("monomial content divides");
        let b2 = b.div_exact(&Polynomial::monomial(mb, C::one())).expect("monomial content divides");
        let g = gcd(&a2, &b2);
        return g.mul(&Polynomial::monomial(mg, C::one())).monic();
    }

    let va = a.vars();
    let vb = b.vars();
    let shared: Vec<VarId> = va.intersection(&vb).copied().collect();
    if shared.is_empty() {
        return Polynomial::one();
    }
    let all: Vec<VarId> = va.union(&vb).copied().collect();
    let degs: Vec<Option<u32>> = shared.iter().map(|&v| image_degree(a, b, v, &all)).collect();
    if degs.iter().all(|d| *d == Some(0)) {
        return Polynomial::one();
    }
    for (small, big, vs) in [(a, b, &va), (b, a, &vb)] {
        let fits = vs.iter().all(|v| shared.iter().zip(&degs).any(|(w, d)| w == v && *d == Some(small.degree_in(*v))));
        if fits && big.div_exact(small).is_some() {
            return small.monic();
        }
    }
    if let Some(g) = super::heuristic::gcd(a, b) {
        return g;
    }
    if let Some(&v) = va.iter().rev().find(|v| !vb.contains(v)) {
        return gcd_with_coeffs(b, &a.coeffs_in(v));
    }
    if let Some(&v) = vb.iter().rev().find(|v| !va.contains(v)) {
        return gcd_with_coeffs(a, &b.coeffs_in(v));
    }
    let v = *va.iter().next_back().expect("nonconstant polynomial has a variable");
    gcd_in(a, b, v)
}

/// Degree in `v` of the univariate gcd of `a` and `b` with the other
/// variables fixed at a point keeping both leading coefficients in `v`.
/// It bounds `deg_v gcd(a, b)` from above.
fn image_degree<C: Coeff>(a: &Polynomial<C>, b: &Polynomial<C>, v: VarId, all: &[VarId]) -> Option<u32> {
    for attempt in 0..4u64 {
        let point = |w: VarId| -> Option<C> {
            let k = all.iter().position(|x| *x == w)? as u64;
            C::from_u64(((k + 1) * 104_729 + attempt * 7_919) % 89 + 2)
        };
        let image = |p: &Polynomial<C>| -> Option<Vec<C>> { p.coeffs_in(v).iter().map(|c| c.eval(&point)).collect() };
        let (ia, ib) = (image(a)?, image(b)?);
        if ia.last().is_none_or(C::is_zero) || ib.last().is_none_or(C::is_zero) {
            continue;
        }
        return Some(dense_gcd_degree(ia, ib));
    }
    None
}

fn dense_gcd_degree<C: Coeff>(mut p: Vec<C>, mut q: Vec<C>) -> u32 {
    let trim = |x: &mut Vec<C>| {
        while x.last().is_some_and(C::is_zero) {
            x.pop();
        }
    };
    trim(&mut p);
    trim(&mut q);
    if p.len() < q.len() {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_empty() {
        let lq = q.last().expect("nonempty").clone();
        while p.len() >= q.len() {
            let f = p.last().expect("nonempty").clone() / lq.clone();
            let shift = p.len() - q.len();
            for (i, c) in q.iter().enumerate() {
                p[shift + i] = p[shift + i].clone() - f.clone() * c.clone();
            }
            p.pop();
            trim(&mut p);
        }
        std::mem::swap(&mut p, &mut q);
    }
    (p.len() - 1) as u32
}

fn gcd_with_coeffs<C: Coeff>(start: &Polynomial<C>, coeffs: &[Polynomial<C>]) -> Polynomial<C> {
    let mut g = start.clone();
    // Smallest coefficients first keeps the intermediate gcds short.
    let mut cs: Vec<&Polynomial<C>> = coeffs.iter().filter(|c| !c.is_zero()).collect();
    cs.sort_by_key(|c| (c.total_degree(), c.terms().len()));
    for c in cs {
        g = gcd(&g, c);
        if g.is_constant() {
            return Polynomial::one();
        }
    }
    g.monic()
}

/// Product of the distinct irreducible factors of `p`, monic.
pub fn squarefree_part<C: Coeff>(p: &Polynomial<C>) -> Polynomial<C> {
    if p.is_zero() || p.is_constant() {
        return Polynomial::one();
    }
    let mut out = Polynomial::one();
    for v in p.vars() {
        let g = gcd(p, &p.partial(v));
        let part = p.div_exact(&g).expect("gcd divides");
        let common = gcd(&out, &part);
        out = out.mul(&part.div_exact(&common).expect("gcd divides"));
    }
    out.monic()
}

/// Content with respect to `v`: gcd of the coefficients of powers of `v`.
pub fn content_in<C: Coeff>(p: &Polynomial<C>, v: VarId) -> Polynomial<C> {
    let mut cs: Vec<Polynomial<C>> = p.coeffs_in(v).into_iter().filter(|c| !c.is_zero()).collect();
    cs.sort_by_key(|c| (c.total_degree(), c.terms().len()));
    let mut g = Polynomial::zero();
    for c in &cs {
        g = gcd(&g, c);
        if g.is_constant() {
            return Polynomial::one();
        }
    }
    g.monic()
}

fn primitive_in<C: Coeff>(p: &Polynomial<C>, v: VarId) -> Polynomial<C> {
    let c = content_in(p, v);
    if c.is_one() {
        return p.monic();
    }
    p.div_exact(&c).expect("content divides").monic()
}

fn leading_in<C: Coeff>(p: &Polynomial<C>, v: VarId) -> (u32, Polynomial<C>) {
    let cs = p.coeffs_in(v);
    let d = cs.len() - 1;
    (d as u32, cs[d].clone())
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1)·a mod b` in `v`.
fn prem<C: Coeff>(a: &Polynomial<C>, b: &Polynomial<C>, v: VarId) -> Polynomial<C> {
    let (db, lb) = leading_in(b, v);
    let da = a.degree_in(v);
    let mut r = a.clone();
    let mut steps = 0;
    while !r.is_zero() {
        let (dr, lr) = leading_in(&r, v);
        if dr < db {
            break;
        }
        let shift = Polynomial::monomial(Monomial::power(v, dr - db), C::one());
        r = r.mul(&lb).sub(&lr.mul(&shift).mul(b));
        steps += 1;
    }
    let want = da + 1 - db;
    if steps < want && !r.is_zero() {
        r = r.mul(&lb.pow(want - steps));
    }
    r
}

/// Subresultant remainder sequence; coefficients stay polynomially
/// bounded without per-step content removal.
fn gcd_in<C: Coeff>(a: &Polynomial<C>, b: &Polynomial<C>, v: VarId) -> Polynomial<C> {
    let ca = content_in(a, v);
    let cb = content_in(b, v);
    let c = gcd(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides");
    let mut q = b.div_exact(&cb).expect("content divides");
    if p.degree_in(v) < q.degree_in(v) {
        std::mem::swap(&mut p, &mut q);
    }
    let mut g = Polynomial::one();
    let mut h = Polynomial::one();
    let last = loop {
        if q.degree_in(v) == 0 {
            break None;
        }
        let delta = p.degree_in(v) - q.degree_in(v);
        let r = prem(&p, &q, v);
        if r.is_zero() {
            break Some(q);
        }
        if r.degree_in(v) == 0 {
            break None;
        }
        let scale = g.mul(&h.pow(delta));
        p = q;
        q = r.div_exact(&scale).expect("subresultant division is exact");
        g = leading_in(&p, v).1;
        h = if delta == 0 {
            h
        } else {
            g.pow(delta).div_exact(&h.pow(delta - 1)).expect("subresultant division is exact")
        };
    };
    match last {
        Some(q) => primitive_in(&q, v).mul(&c).monic(),
        None => c.monic(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    type P = Polynomial<Rational>;

    fn v(i: usize) -> P {
        P::var(VarId::x(i))
    }

    fn k(n: i64) -> P {
        P::constant(Rational::from_integer(n.into()))
    }

    #[test]
    fn squarefree_part_drops_repeats() {
        let p = v(1).pow(3).mul(&v(2).add(&k(1)).pow(2)).mul(&k(5));
        assert_eq!(squarefree_part(&p), v(1).mul(&v(2).add(&k(1))));
        assert!(squarefree_part(&k(3)).is_one());
    }

    #[test]
    fn gcd_of_products_recovers_common_factor() {
        let common = v(1).mul(&v(2)).add(&k(3)).add(&v(3));
        let a = common.mul(&v(1).sub(&v(2)));
        let b = common.mul(&v(3).add(&k(1))).mul(&v(2));
        assert_eq!(gcd(&a, &b), common.monic());
    }

    #[test]
    fn coprime_inputs_give_one() {
        let a = v(1).mul(&v(1)).add(&k(1));
        let b = v(1).add(&v(2));
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn monomial_gcd() {
        let a = v(1).mul(&v(1)).mul(&v(2));
        let b = v(1).mul(&v(3)).add(&v(1).mul(&v(2)));
        assert_eq!(gcd(&a, &b), v(1));
    }

    #[test]
    fn gcd_divides_both() {
        let f = v(1).add(&v(2).mul(&v(3)));
        let g = v(2).sub(&k(2));
        let a = f.mul(&f).mul(&g);
        let b = f.mul(&g).mul(&g).add(&P::zero());
        let d = gcd(&a, &b);
        assert_eq!(d, f.mul(&g).monic());
        assert!(a.div_exact(&d).is_some());
        assert!(b.div_exact(&d).is_some());
    }
}
