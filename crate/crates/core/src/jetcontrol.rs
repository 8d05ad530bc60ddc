//! Control systems, total derivatives, prolongation, affine decomposition
//! and Lie brackets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use thiserror::Error;

use crate::symkernel::linalg::rank_field;
use crate::{KernelError, Monomial, Poly, RatFn, Rational, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("promotion set is empty")]
    EmptyPromotionSet,
    #[error("control index {0} is out of range")]
    PromotionOutOfRange(usize),
    #[error("f{component} is not affine in the controls (monomial {monomial})")]
    NotAffine { component: usize, monomial: String },
    #[error("vector fields have dimensions {left} and {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `ẋ_i = f_i(t, x, u)` with `n` states and `s` controls.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlSystem {
    n: usize,
    s: usize,
    f: Vec<RatFn>,
}

impl ControlSystem {
    pub fn new(n: usize, s: usize, f: Vec<RatFn>) -> Result<Self, JetError> {
        if f.len() != n {
            return Err(JetError::InvalidSystem(format!("expected {n} right-hand sides, got {}", f.len())));
        }
        for (i, fi) in f.iter().enumerate() {
            for v in fi.vars() {
                let ok = match v {
                    VarId::Time => true,
                    VarId::State(k) => k >= 1 && (k as usize) <= n,
                    VarId::Control { order, index } => order == 0 && index >= 1 && (index as usize) <= s,
                };
                if !ok {
                    return Err(JetError::InvalidSystem(format!("f{} mentions {v}", i + 1)));
                }
            }
        }
        Ok(ControlSystem { n, s, f })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn f(&self) -> &[RatFn] {
        &self.f
    }

    pub fn rate(&self, v: VarId) -> Option<RatFn> {
        match v {
            VarId::Time => Some(RatFn::one()),
            VarId::State(i) => self.f.get(i as usize - 1).cloned(),
            VarId::Control { .. } => Some(RatFn::var(v.raised())),
        }
    }

    /// `D_t^k h` along the system.
    pub fn total_derivative(&self, h: &RatFn, k: usize) -> RatFn {
        let rate = |v: VarId| self.rate(v);
        let mut out = h.clone();
        for _ in 0..k {
            out = out.derivation(&rate);
        }
        out
    }

    /// The `n × s` matrix `∂f_i/∂u_j`.
    pub fn control_jacobian(&self) -> Vec<Vec<RatFn>> {
        self.f.iter().map(|fi| (1..=self.s).map(|j| fi.partial(VarId::u(j))).collect()).collect()
    }

    /// Probabilistic check that `rank ∂f/∂u = s`.
    pub fn regularity<R: Rng>(&self, rng: &mut R) -> RankReport {
        generic_rank(&self.control_jacobian(), rng)
    }

    pub fn is_autonomous(&self) -> bool {
        !self.f.iter().any(|fi| fi.depends_on(VarId::Time))
    }
}

impl fmt::Display for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.f.iter().enumerate().map(|(i, fi)| format!("x{}' = {fi}", i + 1)).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Total prolongation: states `(x, u)`, controls `u̇`.
pub fn prolong_total(sys: &ControlSystem) -> ControlSystem {
    let all: Vec<usize> = (1..=sys.s).collect();
    prolong_partial(sys, &all).expect("promoting every control is valid")
}

/// Promote the listed controls to states; their derivatives become controls.
///
/// New states are `x` followed by the promoted `u` in ascending order. New
/// controls are the unpromoted `u` in ascending order followed by the
/// derivatives of the promoted ones.
pub fn prolong_partial(sys: &ControlSystem, promoted: &[usize]) -> Result<ControlSystem, JetError> {
    let (promoted, kept) = split_promotion(sys.s, promoted)?;
    let mut binding: BTreeMap<VarId, RatFn> = BTreeMap::new();
    for (k, &p) in promoted.iter().enumerate() {
        binding.insert(VarId::u(p), RatFn::var(VarId::x(sys.n + k + 1)));
    }
    for (k, &j) in kept.iter().enumerate() {
        binding.insert(VarId::u(j), RatFn::var(VarId::u(k + 1)));
    }
    let mut f = Vec::with_capacity(sys.n + promoted.len());
    for fi in &sys.f {
        f.push(fi.substitute(&|v| binding.get(&v).cloned())?);
    }
    for k in 0..promoted.len() {
        f.push(RatFn::var(VarId::u(kept.len() + k + 1)));
    }
    ControlSystem::new(sys.n + promoted.len(), sys.s, f)
}

/// The coordinates of a partial prolongation as functions on the source
/// jet space: `(y, v)` with `y = (x, u_P)` and `v = (u_K, u̇_P)`.
pub fn prolongation_coordinates(sys: &ControlSystem, promoted: &[usize]) -> Result<(Vec<RatFn>, Vec<RatFn>), JetError> {
    let (promoted, kept) = split_promotion(sys.s, promoted)?;
    let mut y: Vec<RatFn> = (1..=sys.n).map(|i| RatFn::var(VarId::x(i))).collect();
    y.extend(promoted.iter().map(|&p| RatFn::var(VarId::u(p))));
    let mut v: Vec<RatFn> = kept.iter().map(|&j| RatFn::var(VarId::u(j))).collect();
    v.extend(promoted.iter().map(|&p| RatFn::var(VarId::du(p, 1))));
    Ok((y, v))
}

fn split_promotion(s: usize, promoted: &[usize]) -> Result<(Vec<usize>, Vec<usize>), JetError> {
    if promoted.is_empty() {
        return Err(JetError::EmptyPromotionSet);
    }
    let set: BTreeSet<usize> = promoted.iter().copied().collect();
    if let Some(&bad) = set.iter().find(|&&p| p == 0 || p > s) {
        return Err(JetError::PromotionOutOfRange(bad));
    }
    let kept = (1..=s).filter(|j| !set.contains(j)).collect();
    Ok((set.into_iter().collect(), kept))
}

/// A vector field on the state space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorField {
    pub components: Vec<RatFn>,
}

impl VectorField {
    pub fn new(components: Vec<RatFn>) -> Self {
        VectorField { components }
    }

    pub fn zero(n: usize) -> Self {
        VectorField { components: vec![RatFn::zero(); n] }
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut v = Self::zero(n);
        v.components[i - 1] = RatFn::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(RatFn::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        VectorField { components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, c: &RatFn) -> Self {
        VectorField { components: self.components.iter().map(|a| a * c).collect() }
    }

    /// Directional derivative `X(h)`.
    pub fn apply(&self, h: &RatFn) -> RatFn {
        let mut acc = RatFn::zero();
        for (k, xk) in self.components.iter().enumerate() {
            if !xk.is_zero() {
                acc = acc + xk * h.partial(VarId::x(k + 1));
            }
        }
        acc
    }
}

/// `[X,Y]_i = Σ_k X_k ∂Y_i/∂x_k − Y_k ∂X_i/∂x_k`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, JetError> {
    if x.dim() != y.dim() {
        return Err(JetError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let components = (0..x.dim()).map(|i| x.apply(&y.components[i]) - y.apply(&x.components[i])).collect();
    Ok(VectorField { components })
}

/// `f = f0 + Σ u_j f^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub f0: VectorField,
    pub fvecs: Vec<VectorField>,
}

impl AffineForm {
    pub fn n(&self) -> usize {
        self.f0.dim()
    }

    pub fn s(&self) -> usize {
        self.fvecs.len()
    }

    pub fn reconstruct(&self) -> Vec<RatFn> {
        let mut out = self.f0.components.clone();
        for (j, fj) in self.fvecs.iter().enumerate() {
            let uj = RatFn::var(VarId::u(j + 1));
            for (o, c) in out.iter_mut().zip(&fj.components) {
                *o = &*o + &(c * &uj);
            }
        }
        out
    }
}

pub fn to_affine(sys: &ControlSystem) -> Result<AffineForm, JetError> {
    let n = sys.n;
    let mut f0 = Vec::with_capacity(n);
    let mut fv: Vec<Vec<RatFn>> = vec![Vec::with_capacity(n); sys.s];
    for (i, fi) in sys.f.iter().enumerate() {
        if let Some(v) = fi.den().vars().into_iter().find(VarId::is_control) {
            return Err(JetError::NotAffine { component: i + 1, monomial: format!("1/({}) via {v}", fi.den()) });
        }
        let den = RatFn::from_poly(fi.den().clone());
        let mut drift: Vec<(Monomial, Rational)> = Vec::new();
        let mut lin: Vec<Vec<(Monomial, Rational)>> = vec![Vec::new(); sys.s];
        for (m, c) in fi.num().terms() {
            let controls: Vec<&(VarId, u32)> = m.factors().iter().filter(|f| f.0.is_control()).collect();
            match controls.as_slice() {
                [] => drift.push((m.clone(), c.clone())),
                [(VarId::Control { index, .. }, 1)] => {
                    let rest = m.div(&Monomial::var(VarId::u(*index as usize))).expect("factor divides");
                    lin[*index as usize - 1].push((rest, c.clone()));
                }
                _ => return Err(JetError::NotAffine { component: i + 1, monomial: m.to_string() }),
            }
        }
        let over = |terms: Vec<(Monomial, Rational)>| {
            RatFn::from_poly(Poly::from_terms(terms)).div(&den).expect("denominator is nonzero")
        };
        f0.push(over(drift));
        for (j, t) in lin.into_iter().enumerate() {
            fv[j].push(over(t));
        }
    }
    Ok(AffineForm { f0: VectorField::new(f0), fvecs: fv.into_iter().map(VectorField::new).collect() })
}

/// Outcome of a generic-point rank computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub rank: usize,
    pub per_trial: Vec<usize>,
    /// Fewer than a majority of trials reached the maximum rank.
    pub irregular: bool,
}

pub const GENERIC_TRIALS: usize = 5;
const MAX_RESAMPLES: usize = 200;

/// A random point with integer coordinates in `[-99, 99]`.
pub fn sample_point<R: Rng>(vars: &BTreeSet<VarId>, rng: &mut R) -> BTreeMap<VarId, Rational> {
    vars.iter().map(|&v| (v, Rational::from_integer(BigInt::from(rng.random_range(-99i64..=99))))).collect()
}

/// Evaluate every entry at one point, resampling while a denominator vanishes.
pub fn eval_matrix_generic<R: Rng>(m: &[Vec<RatFn>], rng: &mut R) -> (BTreeMap<VarId, Rational>, Vec<Vec<Rational>>) {
    let mut vars = BTreeSet::new();
    for row in m {
        for e in row {
            vars.extend(e.vars());
        }
    }
    for _ in 0..MAX_RESAMPLES {
        let p = sample_point(&vars, rng);
        let vals: Result<Vec<Vec<Rational>>, _> = m.iter().map(|row| row.iter().map(|e| e.eval_at(&p)).collect()).collect();
        if let Ok(v) = vals {
            return (p, v);
        }
    }
    panic!("no point avoiding the denominators found after {MAX_RESAMPLES} samples");
}

/// Rank at a generic point: the maximum over several random points.
pub fn generic_rank<R: Rng>(m: &[Vec<RatFn>], rng: &mut R) -> RankReport {
    if m.is_empty() || m[0].is_empty() {
        return RankReport { rank: 0, per_trial: vec![0; GENERIC_TRIALS], irregular: false };
    }
    let per_trial: Vec<usize> = (0..GENERIC_TRIALS).map(|_| rank_field(&eval_matrix_generic(m, rng).1)).collect();
    let rank = *per_trial.iter().max().expect("at least one trial");
    let hits = per_trial.iter().filter(|&&r| r == rank).count();
    RankReport { rank, per_trial, irregular: hits * 2 <= GENERIC_TRIALS }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x(i: usize) -> RatFn {
        RatFn::var(VarId::x(i))
    }
    fn u(j: usize) -> RatFn {
        RatFn::var(VarId::u(j))
    }

    fn xu_system() -> ControlSystem {
        ControlSystem::new(3, 2, vec![u(1), u(2), x(2) * u(1)]).unwrap()
    }

    #[test]
    fn total_derivative_of_first_phi_coordinate() {
        let sys = xu_system();
        let h = x(1) * x(2) - x(3);
        assert_eq!(sys.total_derivative(&h, 1), x(1) * u(2));
    }

    #[test]
    fn time_and_constants() {
        let sys = xu_system();
        assert!(sys.total_derivative(&RatFn::var(VarId::Time), 1).is_one());
        assert!(sys.total_derivative(&RatFn::from_int(7), 2).is_zero());
    }

    #[test]
    fn partial_prolongation_example() {
        let sys = ControlSystem::new(2, 2, vec![u(1), u(2)]).unwrap();
        let p = prolong_partial(&sys, &[1]).unwrap();
        assert_eq!(p.f(), &[x(3), u(1), u(2)]);
        assert_eq!(prolong_partial(&sys, &[]), Err(JetError::EmptyPromotionSet));
    }

    #[test]
    fn affine_split_of_one_plus_x2u1() {
        let sys = ControlSystem::new(3, 2, vec![u(1), u(2), RatFn::one() + x(2) * u(1)]).unwrap();
        let a = to_affine(&sys).unwrap();
        assert_eq!(a.f0.components, vec![RatFn::zero(), RatFn::zero(), RatFn::one()]);
        assert_eq!(a.fvecs[0].components, vec![RatFn::one(), RatFn::zero(), x(2)]);
        assert_eq!(a.fvecs[1].components, vec![RatFn::zero(), RatFn::one(), RatFn::zero()]);
        assert_eq!(a.reconstruct(), sys.f());
    }

    #[test]
    fn squared_control_is_not_affine() {
        let sys = ControlSystem::new(1, 1, vec![u(1) * u(1)]).unwrap();
        assert!(matches!(to_affine(&sys), Err(JetError::NotAffine { component: 1, .. })));
    }

    #[test]
    fn bracket_example() {
        let a = VectorField::new(vec![RatFn::one(), RatFn::zero(), x(2)]);
        let b = VectorField::coordinate(3, 2);
        let c = lie_bracket(&a, &b).unwrap();
        assert_eq!(c.components, vec![RatFn::zero(), RatFn::zero(), RatFn::from_int(-1)]);
        assert!(lie_bracket(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn regular_system_has_full_control_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = xu_system().regularity(&mut rng);
        assert_eq!(r.rank, 2);
        assert!(!r.irregular);
    }
}
