//! One- and two-forms on truncated jet spaces, contact and adapted
//! coframes, basis change and structure equations.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::blocks::{BlockLayout, Slot};
use crate::jetcontrol::{ControlSystem, JetError};
use crate::symkernel::linalg;
use crate::{RatFn, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoframeError {
    #[error("differential d{var} lies beyond the frame truncation (level {levels})")]
    TruncationExceeded { var: VarId, levels: usize },
    #[error("system is not in the normal form x1' = u1, x2' = u2, x3' = f")]
    NotNormalizedForm,
    #[error("frame forms are not a basis over their differentials")]
    SingularFrame,
    #[error("structure equation fails for slot {slot}: residual {}", fmt_residual(.residual))]
    StructureViolation { slot: Slot, residual: Vec<(String, RatFn)> },
    #[error("structure check needs truncation level at least 2")]
    LevelTooLow,
    #[error(transparent)]
    Jet(#[from] JetError),
}

fn fmt_residual(r: &[(String, RatFn)]) -> String {
    r.iter().map(|(k, v)| format!("{k}: {v}")).collect::<Vec<_>>().join(", ")
}

/// `Σ a_v dv` over coordinate differentials.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct OneForm {
    coeffs: BTreeMap<VarId, RatFn>,
}

impl OneForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(v: VarId) -> Self {
        Self::from_pairs([(v, RatFn::one())])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, RatFn)>) -> Self {
        let mut out = Self::zero();
        for (v, c) in pairs {
            out.add_term(v, &c);
        }
        out
    }

    pub fn coeffs(&self) -> &BTreeMap<VarId, RatFn> {
        &self.coeffs
    }

    pub fn coeff(&self, v: VarId) -> RatFn {
        self.coeffs.get(&v).cloned().unwrap_or_else(RatFn::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, v: VarId, c: &RatFn) {
        if c.is_zero() {
            return;
        }
        let sum = self.coeff(v) + c;
        if sum.is_zero() {
            self.coeffs.remove(&v);
        } else {
            self.coeffs.insert(v, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            out.add_term(*v, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&RatFn::from_int(-1)))
    }

    pub fn scale(&self, c: &RatFn) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        OneForm { coeffs: self.coeffs.iter().map(|(v, a)| (*v, a * c)).collect() }
    }

    pub fn wedge(&self, other: &Self) -> TwoForm {
        let mut out = TwoForm::zero();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.add_term(*a, *b, &(ca * cb));
            }
        }
        out
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().map(|(v, c)| format!("({c}) d{v}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `Σ c_ab da∧db` stored with `a < b`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TwoForm {
    coeffs: BTreeMap<(VarId, VarId), RatFn>,
}

impl TwoForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn coeffs(&self) -> &BTreeMap<(VarId, VarId), RatFn> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `da∧db`, antisymmetric in the arguments.
    pub fn coeff(&self, a: VarId, b: VarId) -> RatFn {
        if a < b {
            self.coeffs.get(&(a, b)).cloned().unwrap_or_else(RatFn::zero)
        } else {
            -self.coeff(b, a)
        }
    }

    /// Add `c da∧db`.
    pub fn add_term(&mut self, a: VarId, b: VarId, c: &RatFn) {
        if a == b || c.is_zero() {
            return;
        }
        let (key, c) = if a < b { ((a, b), c.clone()) } else { ((b, a), -c) };
        let sum = self.coeffs.get(&key).cloned().unwrap_or_else(RatFn::zero) + c;
        if sum.is_zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, sum);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((a, b), c) in &other.coeffs {
            out.add_term(*a, *b, c);
        }
        out
    }
}

/// `dh = Σ ∂h/∂v dv`.
pub fn d_function(h: &RatFn) -> OneForm {
    OneForm::from_pairs(h.vars().into_iter().map(|v| (v, h.partial(v))))
}

/// `d(Σ a_α dz_α) = Σ da_α ∧ dz_α`.
pub fn exterior_d(theta: &OneForm) -> TwoForm {
    let mut out = TwoForm::zero();
    for (z, a) in &theta.coeffs {
        for v in a.vars() {
            out.add_term(v, *z, &a.partial(v));
        }
    }
    out
}

/// Coefficients over a frame's slots.
pub type FrameOne = Vec<RatFn>;
/// Two-form coefficients over slot pairs `(k, l)` with `k < l`.
pub type FrameTwo = BTreeMap<(usize, usize), RatFn>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Contact,
    Adapted3x2,
    Custom,
}

/// An ordered block coframe `(ω⁻¹; ω⁰; ω¹ … ω^N)`.
#[derive(Clone, Debug)]
pub struct Coframe {
    sys: ControlSystem,
    layout: BlockLayout,
    kind: FrameKind,
    forms: Vec<OneForm>,
    support: Vec<VarId>,
    /// `dz_c = Σ_k inverse[c][k] ω_k`.
    inverse: Vec<Vec<RatFn>>,
}

impl Coframe {
    /// `ω⁻¹ = dt`, `ω⁰_i = dx_i − f_i dt`, `ω^k_j = du_j^(k−1) − u_j^(k) dt`.
    pub fn contact(sys: &ControlSystem, levels: usize) -> Self {
        let layout = BlockLayout::new(sys.n(), sys.s(), levels);
        let forms = layout
            .slots()
            .map(|slot| match slot.block {
                -1 => OneForm::basis(VarId::Time),
                0 => contact_form(VarId::x(slot.comp), &sys.f()[slot.comp - 1]),
                l => {
                    let v = VarId::du(slot.comp, l as usize - 1);
                    contact_form(v, &RatFn::var(v.raised()))
                }
            })
            .collect();
        Self::build(sys.clone(), layout, FrameKind::Contact, forms).expect("contact frames are unit lower-triangular")
    }

    /// Contact frame with `ω⁰₃ = dx₃ − f dt − f_{u1}(dx₁ − u₁dt) − f_{u2}(dx₂ − u₂dt)`.
    pub fn adapted_3x2(sys: &ControlSystem, levels: usize) -> Result<Self, CoframeError> {
        let (u1, u2) = (RatFn::var(VarId::u(1)), RatFn::var(VarId::u(2)));
        if sys.n() != 3 || sys.s() != 2 || sys.f()[0] != u1 || sys.f()[1] != u2 {
            return Err(CoframeError::NotNormalizedForm);
        }
        let mut frame = Self::contact(sys, levels);
        let f = &sys.f()[2];
        let w1 = contact_form(VarId::x(1), &u1);
        let w2 = contact_form(VarId::x(2), &u2);
        let w3 = contact_form(VarId::x(3), f)
            .sub(&w1.scale(&f.partial(VarId::u(1))))
            .sub(&w2.scale(&f.partial(VarId::u(2))));
        frame.forms[3] = w3;
        Self::build(frame.sys, frame.layout, FrameKind::Adapted3x2, frame.forms)
    }

    /// The adapted frame for normal-form systems, otherwise the contact frame.
    pub fn auto(sys: &ControlSystem, levels: usize) -> Self {
        Self::adapted_3x2(sys, levels).unwrap_or_else(|_| Self::contact(sys, levels))
    }

    /// A frame from explicit forms, which must be a basis over the union of
    /// their differentials.
    pub fn from_forms(sys: &ControlSystem, layout: BlockLayout, forms: Vec<OneForm>) -> Result<Self, CoframeError> {
        if forms.len() != layout.dim() {
            return Err(CoframeError::SingularFrame);
        }
        Self::build(sys.clone(), layout, FrameKind::Custom, forms)
    }

    fn build(sys: ControlSystem, layout: BlockLayout, kind: FrameKind, forms: Vec<OneForm>) -> Result<Self, CoframeError> {
        let support: Vec<VarId> = match kind {
            FrameKind::Custom => {
                let mut vs: Vec<VarId> = forms.iter().flat_map(|f| f.coeffs.keys().copied()).collect();
                vs.sort();
                vs.dedup();
                vs
            }
            _ => layout.slots().map(|s| layout.support_var(s)).collect(),
        };
        if support.len() != forms.len() {
            return Err(CoframeError::SingularFrame);
        }
        let m: Vec<Vec<RatFn>> = forms.iter().map(|f| support.iter().map(|v| f.coeff(*v)).collect()).collect();
        let inverse = invert_unit_lower(&m).or_else(|| linalg::invert(&m)).ok_or(CoframeError::SingularFrame)?;
        Ok(Coframe { sys, layout, kind, forms, support, inverse })
    }

    pub fn sys(&self) -> &ControlSystem {
        &self.sys
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn levels(&self) -> usize {
        self.layout.levels
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn forms(&self) -> &[OneForm] {
        &self.forms
    }

    pub fn form(&self, slot: Slot) -> &OneForm {
        &self.forms[self.layout.index(slot)]
    }

    /// Coordinate differentials spanned by the frame.
    pub fn support(&self) -> &[VarId] {
        &self.support
    }

    fn support_index(&self, v: VarId) -> Result<usize, CoframeError> {
        self.support.binary_search(&v).map_err(|_| CoframeError::TruncationExceeded { var: v, levels: self.layout.levels })
    }

    /// Unique coefficients `c` with `θ = Σ c_k ω_k`.
    pub fn express_one(&self, theta: &OneForm) -> Result<FrameOne, CoframeError> {
        let mut out = vec![RatFn::zero(); self.forms.len()];
        for (v, a) in &theta.coeffs {
            let c = self.support_index(*v)?;
            for (k, m) in self.inverse[c].iter().enumerate() {
                if !m.is_zero() {
                    out[k] = &out[k] + &(a * m);
                }
            }
        }
        Ok(out)
    }

    /// Coefficients over `ω_k∧ω_l`, `k < l`.
    pub fn express_two(&self, omega: &TwoForm) -> Result<FrameTwo, CoframeError> {
        let mut out = FrameTwo::new();
        for ((a, b), c) in &omega.coeffs {
            let ia = self.support_index(*a)?;
            let ib = self.support_index(*b)?;
            for (k, mk) in self.inverse[ia].iter().enumerate() {
                if mk.is_zero() {
                    continue;
                }
                for (l, ml) in self.inverse[ib].iter().enumerate() {
                    if ml.is_zero() || k == l {
                        continue;
                    }
                    let term = c * &(mk * ml);
                    let (key, term) = if k < l { ((k, l), term) } else { ((l, k), -term) };
                    let sum = out.get(&key).cloned().unwrap_or_else(RatFn::zero) + term;
                    if sum.is_zero() {
                        out.remove(&key);
                    } else {
                        out.insert(key, sum);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Σ c_k ω_k` back over coordinate differentials.
    pub fn expand_one(&self, coeffs: &[RatFn]) -> OneForm {
        let mut out = OneForm::zero();
        for (c, w) in coeffs.iter().zip(&self.forms) {
            if !c.is_zero() {
                out = out.add(&w.scale(c));
            }
        }
        out
    }

    pub fn expand_two(&self, coeffs: &FrameTwo) -> TwoForm {
        let mut out = TwoForm::zero();
        for ((k, l), c) in coeffs {
            out = out.add(&self.forms[*k].scale(c).wedge(&self.forms[*l]));
        }
        out
    }

    /// Drop every component with a factor in one of `blocks`.
    pub fn reduce_mod(&self, two: &FrameTwo, blocks: &[i32]) -> FrameTwo {
        let inside = |k: usize| blocks.contains(&self.layout.slot(k).block);
        two.iter().filter(|((k, l), _)| !inside(*k) && !inside(*l)).map(|(k, v)| (*k, v.clone())).collect()
    }

    /// Verify the structure equations of this frame.
    pub fn check_structure(&self) -> Result<StructureReport, CoframeError> {
        if self.layout.levels < 2 {
            return Err(CoframeError::LevelTooLow);
        }
        if self.kind == FrameKind::Custom {
            let nice = self.check_nice(&self.forms)?;
            return Ok(StructureReport { checked: nice.checked });
        }
        let l = self.layout;
        let mut checked = Vec::new();
        for slot in l.slots().filter(|s| s.block >= 0 && (s.block as usize) < l.levels) {
            let d = self.express_two(&exterior_d(self.form(slot)))?;
            let mut expected = FrameTwo::new();
            let ideal: Vec<i32>;
            if slot.block == 0 {
                ideal = vec![0];
                let adapted_third = self.kind == FrameKind::Adapted3x2 && slot.comp == 3;
                if !adapted_third {
                    let fi = &self.sys.f()[slot.comp - 1];
                    for j in 1..=l.s {
                        let c = fi.partial(VarId::u(j));
                        if !c.is_zero() {
                            expected.insert((0, l.index(Slot::new(1, j))), c);
                        }
                    }
                }
            } else {
                ideal = match self.kind {
                    FrameKind::Contact => vec![],
                    _ => (0..=slot.block).collect(),
                };
                expected.insert((0, l.index(Slot::new(slot.block + 1, slot.comp))), RatFn::one());
            }
            let got = self.reduce_mod(&d, &ideal);
            self.compare(slot, &got, &expected)?;
            checked.push(slot);
        }
        Ok(StructureReport { checked })
    }

    fn compare(&self, slot: Slot, got: &FrameTwo, expected: &FrameTwo) -> Result<(), CoframeError> {
        if got == expected {
            return Ok(());
        }
        let mut keys: Vec<&(usize, usize)> = got.keys().chain(expected.keys()).collect();
        keys.sort();
        keys.dedup();
        let residual = keys
            .into_iter()
            .filter_map(|k| {
                let g = got.get(k).cloned().unwrap_or_else(RatFn::zero);
                let e = expected.get(k).cloned().unwrap_or_else(RatFn::zero);
                let r = g - e;
                (!r.is_zero()).then(|| (format!("{}^{}", self.layout.slot(k.0), self.layout.slot(k.1)), r))
            })
            .collect();
        Err(CoframeError::StructureViolation { slot, residual })
    }

    /// Check `dΘ^i ∈ span{ω^{i+1}∧ω⁻¹} mod ω⁰ … ω^i` for forms indexed by
    /// this frame's layout (possibly fewer levels). Levels whose derivative
    /// leaves the truncation stop the check and are reported.
    pub fn check_nice(&self, forms: &[OneForm]) -> Result<NiceReport, CoframeError> {
        let l = self.layout;
        let form_levels = (forms.len().saturating_sub(1 + l.n) / l.s.max(1)).min(l.levels);
        let mut checked = Vec::new();
        for level in 0..form_levels as i32 {
            let mut level_ok = Vec::new();
            for idx in l.range(level) {
                let d = match self.express_two(&exterior_d(&forms[idx])) {
                    Ok(d) => d,
                    Err(CoframeError::TruncationExceeded { .. }) => {
                        return Ok(NiceReport { checked, truncated_at: Some(level) });
                    }
                    Err(e) => return Err(e),
                };
                let ideal: Vec<i32> = (0..=level).collect();
                let residue = self.reduce_mod(&d, &ideal);
                let allowed = l.range(level + 1);
                let bad: FrameTwo =
                    residue.into_iter().filter(|((k, m), _)| !(*k == 0 && allowed.contains(m))).collect();
                if !bad.is_empty() {
                    self.compare(l.slot(idx), &bad, &FrameTwo::new())?;
                }
                level_ok.push(l.slot(idx));
            }
            checked.extend(level_ok);
        }
        Ok(NiceReport { checked, truncated_at: None })
    }
}

fn contact_form(v: VarId, rate: &RatFn) -> OneForm {
    OneForm::from_pairs([(v, RatFn::one()), (VarId::Time, -rate)])
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
pub(crate) fn invert_unit_lower(m: &[Vec<RatFn>]) -> Option<Vec<Vec<RatFn>>> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if !row[i].is_one() || row[i + 1..].iter().any(|e| !e.is_zero()) {
            return None;
        }
    }
    let mut x = vec![vec![RatFn::zero(); n]; n];
    for i in 0..n {
        x[i][i] = RatFn::one();
        for j in 0..i {
            let mut acc = RatFn::zero();
            for k in j..i {
                if !m[i][k].is_zero() && !x[k][j].is_zero() {
                    acc = acc + &m[i][k] * &x[k][j];
                }
            }
            x[i][j] = -acc;
        }
    }
    Some(x)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub checked: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NiceReport {
    pub checked: Vec<Slot>,
    pub truncated_at: Option<i32>,
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

    fn sys(f3: RatFn) -> ControlSystem {
        ControlSystem::new(3, 2, vec![u(1), u(2), f3]).unwrap()
    }

    #[test]
    fn adapted_third_form_collapses() {
        let f = Coframe::adapted_3x2(&sys(x(2) * u(1)), 3).unwrap();
        let w = f.form(Slot::new(0, 3));
        assert_eq!(w, &OneForm::from_pairs([(VarId::x(3), RatFn::one()), (VarId::x(1), -x(2))]));
    }

    #[test]
    fn dx1_in_contact_frame() {
        let f = Coframe::contact(&sys(x(2) * u(1)), 2);
        let c = f.express_one(&OneForm::basis(VarId::x(1))).unwrap();
        assert!(c[f.layout().index(Slot::new(0, 1))].is_one());
        assert_eq!(c[0], u(1));
    }

    #[test]
    fn truncation_is_reported() {
        let f = Coframe::contact(&sys(x(2)), 2);
        let err = f.express_one(&OneForm::basis(VarId::du(1, 2))).unwrap_err();
        assert!(matches!(err, CoframeError::TruncationExceeded { .. }));
    }

    #[test]
    fn d_of_exact_is_zero() {
        let h = x(1) * x(2) + u(2) * RatFn::var(VarId::du(1, 1));
        assert!(exterior_d(&d_function(&h)).is_zero());
    }
}
