//! Candidate equivalence maps: prolongation, exact verification, order
//! detection and the pullback matrix.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::blocks::{BlockLayout, BlockMatrix, Slot};
use crate::coframes::{d_function, Coframe, CoframeError, OneForm};
use crate::jetcontrol::{generic_rank, ControlSystem};
use crate::symkernel::gcd::squarefree_part;
use crate::{KernelError, RatFn, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("map has {got} {what} coordinates, target expects {expected}")]
    ArityMismatch { what: &'static str, expected: usize, got: usize },
    #[error("control counts differ: {src} and {tgt}")]
    ControlCountMismatch { src: usize, tgt: usize },
    #[error("pulled back form {row} has dt coefficient {coeff}")]
    DtResidue { row: Slot, coeff: RatFn },
    #[error("block ({row_block},{col_block}) is nonzero outside the band J = {band}")]
    BandViolation { row_block: i32, col_block: i32, band: i32 },
    #[error("source frame has {have} levels, {need} are required")]
    TruncationExceeded { need: usize, have: usize },
    #[error("block A^{i}_{col} differs from the first repeated block")]
    RepeatViolation { i: i32, col: i32 },
    #[error("verified single-control pair reports orders J = {j}, K = {k}")]
    ScalarContradiction { j: i32, k: i32 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Coframe(#[from] CoframeError),
}

/// `y = y(x, u, u̇, …)`, `v = v(x, u, u̇, …)` from `src` to `tgt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivMap {
    pub name: String,
    pub src: ControlSystem,
    pub tgt: ControlSystem,
    pub y: Vec<RatFn>,
    pub v: Vec<RatFn>,
}

impl EquivMap {
    pub fn new(
        name: impl Into<String>,
        src: ControlSystem,
        tgt: ControlSystem,
        y: Vec<RatFn>,
        v: Vec<RatFn>,
    ) -> Result<Self, EquivError> {
        if src.s() != tgt.s() {
            return Err(EquivError::ControlCountMismatch { src: src.s(), tgt: tgt.s() });
        }
        if y.len() != tgt.n() {
            return Err(EquivError::ArityMismatch { what: "state", expected: tgt.n(), got: y.len() });
        }
        if v.len() != tgt.s() {
            return Err(EquivError::ArityMismatch { what: "control", expected: tgt.s(), got: v.len() });
        }
        Ok(EquivMap { name: name.into(), src, tgt, y, v })
    }

    /// `J`: the highest control-derivative order among the `y`.
    pub fn detect_order(&self) -> i32 {
        self.y.iter().map(RatFn::max_jet_order).max().unwrap_or(-1)
    }

    /// Highest control-derivative order among the `v`.
    pub fn detect_v_order(&self) -> i32 {
        self.v.iter().map(RatFn::max_jet_order).max().unwrap_or(-1)
    }

    /// `(y, v, D_t v, …, D_t^k v)`.
    pub fn prolong(&self, k: usize) -> Vec<RatFn> {
        let mut out = self.y.clone();
        let mut level = self.v.clone();
        out.extend(level.iter().cloned());
        for _ in 0..k {
            level = level.iter().map(|e| self.src.total_derivative(e, 1)).collect();
            out.extend(level.iter().cloned());
        }
        out
    }

    /// Target coordinates as source functions, up to `v^(k)`.
    pub fn binding(&self, k: usize) -> BTreeMap<VarId, RatFn> {
        let p = self.prolong(k);
        let (m, s) = (self.tgt.n(), self.tgt.s());
        let mut b = BTreeMap::new();
        b.insert(VarId::Time, RatFn::var(VarId::Time));
        for i in 0..m {
            b.insert(VarId::x(i + 1), p[i].clone());
        }
        for l in 0..=k {
            for j in 0..s {
                b.insert(VarId::du(j + 1, l), p[m + l * s + j].clone());
            }
        }
        b
    }

    /// Pull a target function back along the map.
    pub fn pull(&self, h: &RatFn) -> Result<RatFn, KernelError> {
        let order = h.max_jet_order().max(0) as usize;
        let b = self.binding(order);
        h.substitute(&|v| b.get(&v).cloned())
    }

    /// Nonconstant denominators of the map coordinates.
    pub fn assumptions(&self) -> Vec<RatFn> {
        collect_assumptions(self.y.iter().chain(&self.v))
    }
}

/// `(y, v, v̇, …, v^(k))` of `m`.
pub fn prolong_map(m: &EquivMap, k: usize) -> Vec<RatFn> {
    m.prolong(k)
}

fn collect_assumptions<'a>(it: impl Iterator<Item = &'a RatFn>) -> Vec<RatFn> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for e in it {
        if !e.den().is_constant() {
            let d = RatFn::from_poly(squarefree_part(e.den()));
            if seen.insert(d.to_string()) {
                out.push(d);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub forward_ok: bool,
    pub inverse_ok: Option<bool>,
    pub detected_j: i32,
    pub detected_k: Option<i32>,
    pub inverse_order: Option<usize>,
    pub residuals: Vec<(String, RatFn)>,
    pub assumptions: Vec<RatFn>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.forward_ok && self.inverse_ok.unwrap_or(true)
    }
}

/// `D_t y_i − g_i(y, v)` for every target state.
pub fn verify_forward(m: &EquivMap) -> Result<VerificationReport, EquivError> {
    let b = m.binding(0);
    let mut residuals = Vec::new();
    let mut pulled = Vec::new();
    for (i, (yi, gi)) in m.y.iter().zip(m.tgt.f()).enumerate() {
        let g = gi.substitute(&|v| b.get(&v).cloned())?;
        let r = m.src.total_derivative(yi, 1) - &g;
        pulled.push(g);
        if !r.is_zero() {
            residuals.push((format!("y{}", i + 1), r));
        }
    }
    let assumptions = collect_assumptions(m.y.iter().chain(&m.v).chain(&pulled));
    Ok(VerificationReport {
        forward_ok: residuals.is_empty(),
        inverse_ok: None,
        detected_j: m.detect_order(),
        detected_k: None,
        inverse_order: None,
        residuals,
        assumptions,
    })
}

/// Check that `minv ∘ m` is the identity on `(x, u, u̇, …, u^(order))`.
pub fn verify_inverse(m: &EquivMap, minv: &EquivMap, order: usize) -> Result<VerificationReport, EquivError> {
    if minv.src != m.tgt || minv.tgt != m.src {
        return Err(EquivError::NotApplicable("inverse map does not connect the same systems".into()));
    }
    let back = minv.prolong(order);
    let need = back.iter().map(RatFn::max_jet_order).max().unwrap_or(-1).max(0) as usize;
    let b = m.binding(need);
    let (n, s) = (m.src.n(), m.src.s());
    let mut residuals = Vec::new();
    let mut composed = Vec::new();
    for (idx, e) in back.iter().enumerate() {
        let c = e.substitute(&|v| b.get(&v).cloned())?;
        let expect = if idx < n { VarId::x(idx + 1) } else { VarId::du((idx - n) % s + 1, (idx - n) / s) };
        let r = &c - &RatFn::var(expect);
        if !r.is_zero() {
            residuals.push((expect.to_string(), r));
        }
        composed.push(c);
    }
    let assumptions = collect_assumptions(m.prolong(need).iter().chain(&back).chain(&composed));
    Ok(VerificationReport {
        forward_ok: true,
        inverse_ok: Some(residuals.is_empty()),
        detected_j: m.detect_order(),
        detected_k: Some(minv.detect_order()),
        inverse_order: Some(order),
        residuals,
        assumptions,
    })
}

/// Forward checks for both maps and inverse checks in both directions.
pub fn verify_pair(m: &EquivMap, minv: &EquivMap, order: usize) -> Result<VerificationReport, EquivError> {
    let f = verify_forward(m)?;
    let fb = verify_forward(minv)?;
    let i1 = verify_inverse(m, minv, order)?;
    let i2 = verify_inverse(minv, m, order)?;
    let mut residuals = f.residuals;
    residuals.extend(fb.residuals.into_iter().map(|(k, v)| (format!("inverse {k}"), v)));
    residuals.extend(i1.residuals.into_iter().map(|(k, v)| (format!("composed {k}"), v)));
    residuals.extend(i2.residuals.into_iter().map(|(k, v)| (format!("reverse composed {k}"), v)));
    let mut assumptions = f.assumptions;
    for a in fb.assumptions.into_iter().chain(i1.assumptions).chain(i2.assumptions) {
        if !assumptions.contains(&a) {
            assumptions.push(a);
        }
    }
    Ok(VerificationReport {
        forward_ok: f.forward_ok && fb.forward_ok,
        inverse_ok: Some(i1.inverse_ok == Some(true) && i2.inverse_ok == Some(true)),
        detected_j: m.detect_order(),
        detected_k: Some(minv.detect_order()),
        inverse_order: Some(order),
        residuals,
        assumptions,
    })
}

pub fn detect_order(m: &EquivMap) -> i32 {
    m.detect_order()
}

/// Pull back one target form: `Σ c_z dz ↦ Σ (c_z∘Φ) d(z∘Φ)`.
pub fn pull_form(form: &OneForm, b: &BTreeMap<VarId, RatFn>) -> Result<OneForm, EquivError> {
    let look = |v: VarId| b.get(&v).cloned();
    let mut out = OneForm::zero();
    for (z, c) in form.coeffs() {
        let cz = c.substitute(&look)?;
        let zz = look(*z).unwrap_or_else(|| RatFn::var(*z));
        out = out.add(&d_function(&zz).scale(&cz));
    }
    Ok(out)
}

/// The matrix `A` with `Φ*Ω = A ω`, rows over `tgt_frame` up to `levels`.
pub fn pullback_matrix(m: &EquivMap, src_frame: &Coframe, tgt_frame: &Coframe, levels: usize) -> Result<BlockMatrix, EquivError> {
    let j = m.detect_order();
    let need = (levels as i32 + j + 1).max(levels as i32) as usize;
    if src_frame.levels() < need {
        return Err(EquivError::TruncationExceeded { need, have: src_frame.levels() });
    }
    if tgt_frame.levels() < levels {
        return Err(EquivError::TruncationExceeded { need: levels, have: tgt_frame.levels() });
    }
    let rows = BlockLayout::new(m.tgt.n(), m.tgt.s(), levels);
    let cols = src_frame.layout();
    let b = m.binding(levels);
    let mut entries = Vec::with_capacity(rows.dim());
    for slot in rows.slots() {
        let pulled = pull_form(tgt_frame.form(slot), &b)?;
        let row = src_frame.express_one(&pulled)?;
        if slot.block >= 0 && !row[0].is_zero() {
            return Err(EquivError::DtResidue { row: slot, coeff: row[0].clone() });
        }
        entries.push(row);
    }
    let a = BlockMatrix::from_entries(rows, cols, entries).with_band(Some(j));
    for bi in 0..=levels as i32 {
        for bj in (bi + j + 2).max(0)..=cols.levels as i32 {
            if !a.is_zero_block(bi, bj) {
                return Err(EquivError::BandViolation { row_block: bi, col_block: bj, band: j });
            }
        }
    }
    Ok(a)
}

/// Substitute `m` into the inverse pullback and multiply: `(A⁻¹∘Φ)·A`.
pub fn compose_pullbacks(m: &EquivMap, a: &BlockMatrix, ainv: &BlockMatrix) -> Result<BlockMatrix, EquivError> {
    let need_rows = ainv.cols.levels;
    if a.rows.levels < need_rows {
        return Err(EquivError::TruncationExceeded { need: need_rows, have: a.rows.levels });
    }
    let pulled = ainv.try_map(|e| m.pull(e))?;
    Ok(pulled.mul(&a.truncate_rows(need_rows)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArepeatsReport {
    pub band: i32,
    pub checked: Vec<i32>,
}

/// `A^i_{J+i+1} = A^1_{J+2}` for every `i` representable in the truncation
/// (at most `max_i` when given).
pub fn check_arepeats(a: &BlockMatrix, max_i: Option<i32>) -> Result<ArepeatsReport, EquivError> {
    let j = a.band.unwrap_or(-1);
    let reference = a.block(1, j + 2);
    let mut checked = Vec::new();
    let mut i = 1;
    while i <= a.rows.levels as i32 && j + i + 1 <= a.cols.levels as i32 && max_i.is_none_or(|m| i <= m) {
        if a.block(i, j + i + 1) != reference {
            return Err(EquivError::RepeatViolation { i, col: j + i + 1 });
        }
        checked.push(i);
        i += 1;
    }
    Ok(ArepeatsReport { band: j, checked })
}

/// Generic rank of block `(i, j)`.
pub fn block_rank<R: Rng>(a: &BlockMatrix, i: i32, j: i32, rng: &mut R) -> usize {
    generic_rank(&a.block(i, j), rng).rank
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonautStaticPairReport {
    pub forward_lower: bool,
    pub inverse_lower: bool,
}

impl NonautStaticPairReport {
    /// Triangularity of `A` and of `A⁻¹` agree.
    pub fn holds(&self) -> bool {
        self.forward_lower == self.inverse_lower
    }
}

pub fn check_nonaut_static_pair(a: &BlockMatrix, ainv: &BlockMatrix) -> NonautStaticPairReport {
    NonautStaticPairReport { forward_lower: a.is_block_lower_triangular(), inverse_lower: ainv.is_block_lower_triangular() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarReport {
    pub verified: bool,
    pub j: i32,
    pub k: i32,
}

impl ScalarReport {
    /// The pair verified and is static.
    pub fn passed(&self) -> bool {
        self.verified && self.j == -1 && self.k == -1
    }
}

/// A verified single-control pair between equal state counts must be static.
pub fn verify_scalar_theorem(m: &EquivMap, minv: &EquivMap, order: usize) -> Result<ScalarReport, EquivError> {
    if m.src.s() != 1 {
        return Err(EquivError::NotApplicable(format!("{} controls", m.src.s())));
    }
    if m.src.n() != m.tgt.n() {
        return Err(EquivError::NotApplicable("state counts differ; the systems are related by prolongation".into()));
    }
    let rep = verify_pair(m, minv, order)?;
    let (j, k) = (m.detect_order(), minv.detect_order());
    let verified = rep.passed();
    if verified && (j >= 0 || k >= 0) {
        return Err(EquivError::ScalarContradiction { j, k });
    }
    Ok(ScalarReport { verified, j, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> RatFn {
        RatFn::var(VarId::x(i))
    }
    fn u(j: usize) -> RatFn {
        RatFn::var(VarId::u(j))
    }

    #[test]
    fn identity_map_prolongs_to_jets() {
        let sys = ControlSystem::new(2, 1, vec![u(1), x(1)]).unwrap();
        let id = EquivMap::new("id", sys.clone(), sys.clone(), vec![x(1), x(2)], vec![u(1)]).unwrap();
        let p = id.prolong(2);
        assert_eq!(p, vec![x(1), x(2), u(1), RatFn::var(VarId::du(1, 1)), RatFn::var(VarId::du(1, 2))]);
        assert!(verify_pair(&id, &id, 3).unwrap().passed());
        assert_eq!(id.detect_order(), -1);
    }

    #[test]
    fn arity_is_checked() {
        let sys = ControlSystem::new(1, 1, vec![u(1)]).unwrap();
        let err = EquivMap::new("bad", sys.clone(), sys, vec![x(1)], vec![]).unwrap_err();
        assert!(matches!(err, EquivError::ArityMismatch { what: "control", .. }));
    }

    #[test]
    fn identity_pullback_is_identity() {
        let sys = ControlSystem::new(3, 2, vec![u(1), u(2), x(2) * u(1)]).unwrap();
        let id = EquivMap::new("id", sys.clone(), sys.clone(), vec![x(1), x(2), x(3)], vec![u(1), u(2)]).unwrap();
        let f = Coframe::contact(&sys, 3);
        let a = pullback_matrix(&id, &f, &f, 3).unwrap();
        assert_eq!(a.truncate_cols(3), BlockMatrix::identity(f.layout()).with_band(Some(-1)));
    }
}
