//! Static invariants of control-affine systems with at most three states,
//! identification of the static normal form, and the dynamic classes of
//! the three-state, two-control forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::jetcontrol::{generic_rank, lie_bracket, sample_point, to_affine, AffineForm, ControlSystem, JetError, VectorField};
use crate::{RatFn, Rational, VarId};

pub use crate::fixtures::builtin_fixtures;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    NotAffine(#[from] JetError),
    #[error("classification covers at most three states, got {0}")]
    TooManyStates(usize),
    #[error("no table row matches the invariants {0}")]
    UnclassifiedSignature(InvariantRecord),
    #[error("invariants change near the sampled points: {0}")]
    Irregular(InvariantRecord),
    #[error("{0} has no dynamic class in the three-state, two-control table")]
    OutOfTable(ElkinTag),
}

/// Generic-point invariants of `f⁰ + Σ u_j f^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantRecord {
    pub n: usize,
    pub rank_fu: usize,
    pub involutive_d: bool,
    pub drift_in_d: bool,
    /// Dimension of `span{f^j, [X,f^j], [X,[Y,f^j]]}`, `X, Y ∈ {f⁰, f^j}`.
    pub dim_c0: usize,
    pub drift_in_c0: bool,
    /// Involutivity of `span{f^j, [f⁰, f^j]}`.
    pub involutive_d1: bool,
    pub point: BTreeMap<VarId, Rational>,
    pub irregular: bool,
}

impl fmt::Display for InvariantRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} rank_fu={} drift_in_D={} involutive_D={} dim_C0={} drift_in_C0={} involutive_D1={}",
            self.n, self.rank_fu, self.drift_in_d, self.involutive_d, self.dim_c0, self.drift_in_c0, self.involutive_d1
        )
    }
}

fn rows(fields: &[VectorField]) -> Vec<Vec<RatFn>> {
    fields.iter().map(|v| v.components.clone()).collect()
}

struct Ranker<'a, R: Rng> {
    rng: &'a mut R,
    irregular: bool,
}

impl<R: Rng> Ranker<'_, R> {
    fn rank(&mut self, fields: &[VectorField]) -> usize {
        if fields.is_empty() {
            return 0;
        }
        let rep = generic_rank(&rows(fields), self.rng);
        self.irregular |= rep.irregular;
        rep.rank
    }

    fn contains(&mut self, span: &[VectorField], extra: &[VectorField], base: usize) -> bool {
        let all: Vec<VectorField> = span.iter().chain(extra).cloned().collect();
        self.rank(&all) == base
    }
}

fn brackets(a: &[VectorField], b: &[VectorField]) -> Result<Vec<VectorField>, JetError> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let z = lie_bracket(x, y)?;
            if !z.is_zero() {
                out.push(z);
            }
        }
    }
    Ok(out)
}

pub fn static_invariants<R: Rng>(a: &AffineForm, rng: &mut R) -> Result<InvariantRecord, ClassifyError> {
    let n = a.n();
    if n > 3 {
        return Err(ClassifyError::TooManyStates(n));
    }
    let d: Vec<VectorField> = a.fvecs.iter().filter(|v| !v.is_zero()).cloned().collect();
    let drift = vec![a.f0.clone()];
    let mut all_fields = d.clone();
    all_fields.push(a.f0.clone());

    let mut r = Ranker { rng, irregular: false };
    let rank_fu = r.rank(&d);
    let involutive_d = r.contains(&d, &brackets(&d, &d)?, rank_fu);
    let drift_in_d = r.contains(&d, &drift, rank_fu);

    let first = brackets(&all_fields, &d)?;
    let second = brackets(&all_fields, &first)?;
    let c0: Vec<VectorField> = d.iter().chain(&first).chain(&second).cloned().collect();
    let dim_c0 = r.rank(&c0);
    let drift_in_c0 = r.contains(&c0, &drift, dim_c0);

    let d1: Vec<VectorField> = d.iter().cloned().chain(brackets(&drift, &d)?).collect();
    let rank_d1 = r.rank(&d1);
    let involutive_d1 = r.contains(&d1, &brackets(&d1, &d1)?, rank_d1);

    let mut vars = BTreeSet::new();
    for v in &all_fields {
        for c in &v.components {
            vars.extend(c.vars());
        }
    }
    vars.extend((1..=n).map(VarId::x));
    let point = sample_point(&vars, r.rng);
    let irregular = r.irregular;
    Ok(InvariantRecord { n, rank_fu, involutive_d, drift_in_d, dim_c0, drift_in_c0, involutive_d1, point, irregular })
}

/// The three-state, two-control normal forms, by `ẋ₃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elkin32 {
    Zero,
    One,
    X2,
    X2U1,
    OnePlusX2U1,
}

impl Elkin32 {
    pub const ALL: [Elkin32; 5] = [Elkin32::Zero, Elkin32::One, Elkin32::X2, Elkin32::X2U1, Elkin32::OnePlusX2U1];

    /// `ẋ₃` as written in system files.
    pub fn rhs(self) -> &'static str {
        match self {
            Elkin32::Zero => "0",
            Elkin32::One => "1",
            Elkin32::X2 => "x2",
            Elkin32::X2U1 => "x2*u1",
            Elkin32::OnePlusX2U1 => "1+x2*u1",
        }
    }
}

/// One entry of the static normal-form list for `n ≤ 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElkinTag {
    /// `ẋ = 0`.
    Zero,
    /// `ẋ₁ = 1`, other rates zero.
    Constant,
    /// `ẋ_i = u_i` for all `i`.
    FullRank,
    N2U1Zero,
    N2U1One,
    N2U1X1,
    N3U1Zero,
    N3U1One,
    N3U1X1,
    N3U1X1One,
    N3U1X1X2,
    /// `(u₁, H(x)u₁, 1 + x₂u₁)` with `∂H/∂x₃ ≠ 0`.
    N3U1HFamily,
    N3S2(Elkin32),
}

impl fmt::Display for ElkinTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElkinTag::Zero => "0",
            ElkinTag::Constant => "(1, 0, ...)",
            ElkinTag::FullRank => "(u1, ..., un)",
            ElkinTag::N2U1Zero => "(u1, 0)",
            ElkinTag::N2U1One => "(u1, 1)",
            ElkinTag::N2U1X1 => "(u1, x1)",
            ElkinTag::N3U1Zero => "(u1, 0, 0)",
            ElkinTag::N3U1One => "(u1, 1, 0)",
            ElkinTag::N3U1X1 => "(u1, x1, 0)",
            ElkinTag::N3U1X1One => "(u1, x1, 1)",
            ElkinTag::N3U1X1X2 => "(u1, x1, x2)",
            ElkinTag::N3U1HFamily => "(u1, H*u1, 1+x2*u1)",
            ElkinTag::N3S2(e) => e.rhs(),
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticClass {
    pub n: usize,
    pub s: usize,
    pub tag: ElkinTag,
    pub record: InvariantRecord,
}

fn lookup(r: &InvariantRecord) -> Option<ElkinTag> {
    use ElkinTag::*;
    let (n, s) = (r.n, r.rank_fu);
    if s == 0 {
        return Some(if r.drift_in_d { Zero } else { Constant });
    }
    if s == n {
        return Some(FullRank);
    }
    let sig = (r.drift_in_d, r.involutive_d, r.dim_c0, r.drift_in_c0, r.involutive_d1);
    let tag = match (n, s, sig) {
        (2, 1, (true, true, 1, _, _)) => N2U1Zero,
        (2, 1, (false, true, 1, _, _)) => N2U1One,
        (2, 1, (false, true, 2, _, _)) => N2U1X1,
        (3, 1, (true, true, 1, true, true)) => N3U1Zero,
        (3, 1, (false, true, 1, false, true)) => N3U1One,
        (3, 1, (false, true, 2, true, true)) => N3U1X1,
        (3, 1, (false, true, 2, false, true)) => N3U1X1One,
        (3, 1, (false, true, 3, true, true)) => N3U1X1X2,
        (3, 1, (false, true, 3, true, false)) => N3U1HFamily,
        (3, 2, (true, true, 2, _, _)) => N3S2(Elkin32::Zero),
        (3, 2, (false, true, 2, _, _)) => N3S2(Elkin32::One),
        (3, 2, (false, true, 3, _, _)) => N3S2(Elkin32::X2),
        (3, 2, (true, false, 3, _, _)) => N3S2(Elkin32::X2U1),
        (3, 2, (false, false, 3, _, _)) => N3S2(Elkin32::OnePlusX2U1),
        _ => return None,
    };
    Some(tag)
}

pub fn classify_static<R: Rng>(sys: &ControlSystem, rng: &mut R) -> Result<StaticClass, ClassifyError> {
    if sys.n() > 3 {
        return Err(ClassifyError::TooManyStates(sys.n()));
    }
    let record = static_invariants(&to_affine(sys)?, rng)?;
    if record.irregular {
        return Err(ClassifyError::Irregular(record));
    }
    let tag = lookup(&record).ok_or_else(|| ClassifyError::UnclassifiedSignature(record.clone()))?;
    Ok(StaticClass { n: sys.n(), s: record.rank_fu, tag, record })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DynClass {
    Class1,
    Class2,
    Class3,
}

impl fmt::Display for DynClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DynClass::Class1 => "Class1",
            DynClass::Class2 => "Class2",
            DynClass::Class3 => "Class3",
        };
        write!(f, "{s}")
    }
}

pub fn dynamic_class(c: &StaticClass) -> Result<DynClass, ClassifyError> {
    match c.tag {
        ElkinTag::N3S2(Elkin32::X2 | Elkin32::X2U1 | Elkin32::OnePlusX2U1) => Ok(DynClass::Class1),
        ElkinTag::N3S2(Elkin32::Zero) => Ok(DynClass::Class2),
        ElkinTag::N3S2(Elkin32::One) => Ok(DynClass::Class3),
        t => Err(ClassifyError::OutOfTable(t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{elkin_32, system};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bracket_of_x2u1_is_not_in_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = to_affine(&elkin_32("x2*u1")).unwrap();
        let r = static_invariants(&a, &mut rng).unwrap();
        assert_eq!((r.rank_fu, r.involutive_d, r.drift_in_d, r.dim_c0), (2, false, true, 3));
    }

    #[test]
    fn two_state_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = classify_static(&system(2, 1, &["u1", "x1"]), &mut rng).unwrap();
        assert_eq!(c.tag, ElkinTag::N2U1X1);
    }
}
