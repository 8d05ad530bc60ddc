//! Factorization `A = g·S·G` of two-control pullback matrices with
//! `J = K = 0` into nonautonomous static factors around the fixed
//! orthogonal matrix `S`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::blocks::{BlockLayout, BlockMatrix, Slot};
use crate::coframes::{invert_unit_lower, Coframe, CoframeError, NiceReport, OneForm};
use crate::symkernel::linalg;
use crate::{KernelError, RatFn};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("block {block} has rank {rank}, expected 1")]
    RankMismatch { block: String, rank: usize },
    #[error("pivot vanishes: {0}")]
    PivotVanishes(String),
    #[error("matrix has {have} column levels, {need} are required")]
    TruncationExceeded { need: usize, have: usize },
    #[error("inconsistent matrix: {0}")]
    Inconsistent(String),
    #[error("diagonal block g^{i}_{i} differs from g^1_1")]
    DiagonalDrift { i: i32 },
    #[error("matrix is not block-lower-triangular")]
    NotLowerTriangular,
    #[error("entry [{row}, {col}] is {found}, pattern requires {expected}")]
    PatternViolation { row: Slot, col: Slot, expected: RatFn, found: RatFn },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Coframe(#[from] CoframeError),
}

/// The constant 0/1 matrix `S`: rows over `(n, 2, N)`, columns over
/// `(n, 2, N+1)`.
pub fn build_s(n: usize, levels: usize) -> BlockMatrix {
    let rows = BlockLayout::new(n, 2, levels);
    let cols = BlockLayout::new(n, 2, levels + 1);
    let mut m = BlockMatrix::zeros(rows, cols);
    for r in rows.slots() {
        let c = s_column(r);
        m.set(r, c, RatFn::one());
    }
    m
}

/// Column hit by row `r` of `S`.
fn s_column(r: Slot) -> Slot {
    match (r.block, r.comp) {
        (-1, _) => Slot::DT,
        (0, 1) => Slot::new(1, 2),
        (0, k) => Slot::new(0, k),
        (i, 1) => Slot::new(i - 1, 1),
        (i, _) => Slot::new(i + 1, 2),
    }
}

/// A block-lower-triangular factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonautStatic {
    pub matrix: BlockMatrix,
    pub structure_preserving: bool,
}

impl NonautStatic {
    pub fn new(matrix: BlockMatrix) -> Result<Self, FactorError> {
        if !matrix.is_block_lower_triangular() {
            return Err(FactorError::NotLowerTriangular);
        }
        let structure_preserving = diagonal_drift(&matrix).is_none();
        Ok(NonautStatic { matrix: matrix.with_band(Some(-1)), structure_preserving })
    }
}

/// First `i ≥ 2` with `M^i_i ≠ M^1_1`.
fn diagonal_drift(m: &BlockMatrix) -> Option<i32> {
    let top = m.rows.levels.min(m.cols.levels) as i32;
    let reference = m.block(1, 1);
    (2..=top).find(|&i| m.block(i, i) != reference)
}

/// `(p₀, p₁, q)` of the reduced `G`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GnicePattern {
    pub p0: RatFn,
    pub p1: RatFn,
    pub q: RatFn,
}

impl GnicePattern {
    pub fn identity() -> Self {
        GnicePattern { p0: RatFn::zero(), p1: RatFn::zero(), q: RatFn::zero() }
    }

    /// `G[(i+1,2), (i,1)] = p₁ + i·q`.
    pub fn subdiagonal(&self, i: usize) -> RatFn {
        &self.p1 + &(&self.q * &RatFn::from_int(i as i64))
    }
}

/// The unit lower-triangular `G` carrying the pattern on a square layout
/// with two controls.
pub fn gnice_matrix(layout: BlockLayout, p: &GnicePattern) -> BlockMatrix {
    assert_eq!(layout.s, 2, "pattern needs two controls");
    let mut g = BlockMatrix::identity(layout);
    for a in 0..=layout.levels as i32 {
        let (row, col) = if a == 0 { (Slot::new(0, 2), Slot::new(0, 1)) } else { (Slot::new(a, 2), Slot::new(a, 1)) };
        g.set(row, col, p.p0.clone());
        if a < layout.levels as i32 {
            g.set(Slot::new(a + 1, 2), Slot::new(a, 1), p.subdiagonal(a as usize));
        }
    }
    g
}

/// Extract `(p₀, p₁, q)` and compare every entry with the pattern.
pub fn check_gnice(g: &BlockMatrix) -> Result<GnicePattern, FactorError> {
    let l = g.rows;
    if l != g.cols || l.s != 2 || l.n < 2 {
        return Err(FactorError::NotApplicable("pattern needs a square layout with s = 2, n ≥ 2".into()));
    }
    if l.levels < 1 {
        return Err(FactorError::TruncationExceeded { need: 1, have: l.levels });
    }
    let p0 = g.get(Slot::new(0, 2), Slot::new(0, 1)).clone();
    let p1 = g.get(Slot::new(1, 2), Slot::new(0, 1)).clone();
    let q = if l.levels >= 2 { g.get(Slot::new(2, 2), Slot::new(1, 1)) - &p1 } else { RatFn::zero() };
    let pattern = GnicePattern { p0, p1, q };
    let expected = gnice_matrix(l, &pattern);
    for i in 0..l.dim() {
        for j in 0..l.dim() {
            if g.entry(i, j) != expected.entry(i, j) {
                return Err(FactorError::PatternViolation {
                    row: l.slot(i),
                    col: l.slot(j),
                    expected: expected.entry(i, j).clone(),
                    found: g.entry(i, j).clone(),
                });
            }
        }
    }
    Ok(pattern)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub g: NonautStatic,
    pub s: BlockMatrix,
    pub big_g: NonautStatic,
    pub pattern: GnicePattern,
    /// Divisors assumed nonzero.
    pub assumptions: Vec<RatFn>,
    pub ops: Vec<String>,
}

impl Factorization {
    pub fn product(&self) -> BlockMatrix {
        self.g.matrix.mul(&self.s).mul(&self.big_g.matrix)
    }
}

struct Assumptions {
    seen: BTreeSet<String>,
    list: Vec<RatFn>,
}

impl Assumptions {
    fn record(&mut self, d: &RatFn) {
        if d.as_constant().is_some() {
            return;
        }
        if self.seen.insert(d.to_string()) {
            self.list.push(d.clone());
        }
    }

    fn divide(&mut self, a: &RatFn, b: &RatFn) -> Result<RatFn, FactorError> {
        self.record(b);
        Ok(a.div(b)?)
    }
}

fn column(a: &BlockMatrix, row_block: i32, col: Slot) -> Vec<RatFn> {
    let j = a.cols.index(col);
    a.rows.range(row_block).map(|i| a.entry(i, j).clone()).collect()
}

fn axpy(x: &[RatFn], c: &RatFn, y: &[RatFn]) -> Vec<RatFn> {
    x.iter().zip(y).map(|(a, b)| a - &(c * b)).collect()
}

/// Solve `r = c·w` for the scalar `c`.
fn solve_multiple(r: &[RatFn], w: &[RatFn], what: &str, asm: &mut Assumptions) -> Result<RatFn, FactorError> {
    let Some(k) = w.iter().position(|e| !e.is_zero()) else {
        if r.iter().all(RatFn::is_zero) {
            return Ok(RatFn::zero());
        }
        return Err(FactorError::PivotVanishes(format!("{what}: reference column is zero")));
    };
    let c = asm.divide(&r[k], &w[k])?;
    if r.iter().zip(w).any(|(a, b)| a != &(&c * b)) {
        return Err(FactorError::Inconsistent(format!("{what}: columns are not proportional")));
    }
    Ok(c)
}

/// Factor a `J = K = 0`, two-control pullback matrix.
pub fn factor_jk0(a: &BlockMatrix) -> Result<Factorization, FactorError> {
    let rows = a.rows;
    if rows.s != 2 || a.cols.s != 2 {
        return Err(FactorError::NotApplicable(format!("{} controls", rows.s)));
    }
    if rows.n != a.cols.n || rows.n < 2 {
        return Err(FactorError::NotApplicable("state counts must agree and be at least 2".into()));
    }
    if rows.levels < 2 {
        return Err(FactorError::TruncationExceeded { need: 2, have: rows.levels });
    }
    let need = rows.levels + 1;
    if a.cols.levels < need {
        return Err(FactorError::TruncationExceeded { need, have: a.cols.levels });
    }
    for (bi, bj) in [(0, 1), (1, 2)] {
        let rank = linalg::rank(&a.block(bi, bj));
        if rank != 1 {
            return Err(FactorError::RankMismatch { block: format!("A^{bi}_{bj}"), rank });
        }
    }
    let a = a.truncate_cols(need);
    let n_lev = rows.levels as i32;
    let mut asm = Assumptions { seen: BTreeSet::new(), list: Vec::new() };
    let mut ops = Vec::new();

    let a12 = a.block(1, 2);
    let beta = a12.iter().find(|r| r.iter().any(|e| !e.is_zero())).expect("rank one");
    if beta[1].is_zero() {
        return Err(FactorError::PivotVanishes("second column of A^1_2 is zero".into()));
    }
    let p0 = asm.divide(&beta[0], &beta[1])?;
    ops.push(format!("p0 = {p0} from A^1_2"));
    for lvl in 0..=n_lev {
        let c1 = column(&a, lvl, Slot::new(lvl + 1, 1));
        let c2 = column(&a, lvl, Slot::new(lvl + 1, 2));
        if axpy(&c1, &p0, &c2).iter().any(|e| !e.is_zero()) {
            return Err(FactorError::Inconsistent(format!("A^{lvl}_{} columns not related by p0", lvl + 1)));
        }
    }

    let pivot = p0.clone();
    let slope = |lvl: i32, asm: &mut Assumptions| -> Result<RatFn, FactorError> {
        let r = axpy(&column(&a, lvl, Slot::new(lvl, 1)), &pivot, &column(&a, lvl, Slot::new(lvl, 2)));
        let w = column(&a, lvl, Slot::new(lvl + 1, 2));
        solve_multiple(&r, &w, &format!("level {lvl}"), asm)
    };
    let p1 = slope(0, &mut asm)?;
    ops.push(format!("p1 = {p1} from A^0_0, A^0_1"));
    let c1 = slope(1, &mut asm)?;
    let q = &c1 - &p1;
    ops.push(format!("q = {q} from A^1_1, A^1_2"));
    let pattern = GnicePattern { p0, p1, q };
    for lvl in 2..=n_lev {
        let c = slope(lvl, &mut asm)?;
        if c != pattern.subdiagonal(lvl as usize) {
            return Err(FactorError::Inconsistent(format!("subdiagonal at level {lvl} breaks the progression")));
        }
    }

    let big_g = gnice_matrix(a.cols, &pattern);
    let ginv = invert_unit_lower(big_g.entries()).expect("pattern is unit lower-triangular");
    let ginv = BlockMatrix::from_entries(a.cols, a.cols, ginv);
    let b = a.clone().with_band(None).mul(&ginv);
    ops.push("B = A·G^-1: column (i,1) -= p0·column (i,2) + (p1 + i·q)·column (i+1,2)".into());
    for lvl in [n_lev, n_lev + 1] {
        let j = b.cols.index(Slot::new(lvl, 1));
        if (0..b.rows.dim()).any(|i| !b.entry(i, j).is_zero()) {
            return Err(FactorError::Inconsistent(format!("column ({lvl},1) of A·G^-1 is not zero")));
        }
    }
    let s = build_s(rows.n, rows.levels);
    let g = b.mul(&s.transpose());
    ops.push("g = B·S^T".into());
    if !g.is_block_lower_triangular() {
        return Err(FactorError::Inconsistent("g is not block-lower-triangular".into()));
    }
    for lvl in -1..=n_lev {
        let blk = g.block(lvl, lvl);
        if linalg::rank(&blk) != blk.len() {
            return Err(FactorError::PivotVanishes(format!("diagonal block g^{lvl}_{lvl} is singular")));
        }
    }
    let out = Factorization {
        g: NonautStatic::new(g)?,
        s,
        big_g: NonautStatic::new(big_g)?,
        pattern,
        assumptions: asm.list,
        ops,
    };
    if out.product() != a.clone().with_band(None) {
        return Err(FactorError::Inconsistent("g·S·G does not reproduce A".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub nice: NiceReport,
}

/// Check that `g` keeps its diagonal blocks and that `g·ω` still satisfies
/// the structure equations of `frame`.
pub fn validate_nonaut_static(g: &BlockMatrix, frame: &Coframe) -> Result<ValidationReport, FactorError> {
    if !g.is_block_lower_triangular() {
        return Err(FactorError::NotLowerTriangular);
    }
    if let Some(i) = diagonal_drift(g) {
        return Err(FactorError::DiagonalDrift { i });
    }
    let fl = frame.layout();
    if g.cols.n != fl.n || g.cols.s != fl.s || g.cols.levels > fl.levels {
        return Err(FactorError::NotApplicable("matrix columns do not fit the frame".into()));
    }
    let forms: Vec<OneForm> = g
        .entries()
        .iter()
        .map(|row| {
            let mut acc = OneForm::zero();
            for (c, w) in row.iter().zip(frame.forms()) {
                if !c.is_zero() {
                    acc = acc.add(&w.scale(c));
                }
            }
            acc
        })
        .collect();
    Ok(ValidationReport { nice: frame.check_nice(&forms)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::VarId;

    #[test]
    fn s_is_a_partial_permutation() {
        let s = build_s(3, 4);
        for row in s.entries() {
            assert_eq!(row.iter().filter(|e| e.is_one()).count(), 1);
        }
        let sst = s.mul(&s.transpose());
        assert_eq!(sst, BlockMatrix::identity(s.rows));
    }

    #[test]
    fn gnice_round_trips() {
        let p = GnicePattern {
            p0: RatFn::var(VarId::x(1)),
            p1: RatFn::var(VarId::u(1)),
            q: RatFn::var(VarId::du(1, 1)),
        };
        let g = gnice_matrix(BlockLayout::new(3, 2, 4), &p);
        assert_eq!(check_gnice(&g).unwrap(), p);
    }
}
