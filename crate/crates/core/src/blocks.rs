//! Block indexing shared by coframes and block matrices.
//!
//! A layout with `n` states, `s` controls and `levels = N` has the blocks
//! `-1` (one slot, `dt`), `0` (`n` slots) and `1..=N` (`s` slots each).

use std::fmt;

use crate::{RatFn, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockLayout {
    pub n: usize,
    pub s: usize,
    pub levels: usize,
}

/// A single slot: block index and 1-based component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub block: i32,
    pub comp: usize,
}

impl Slot {
    pub const DT: Slot = Slot { block: -1, comp: 1 };

    pub fn new(block: i32, comp: usize) -> Self {
        Slot { block, comp }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.block < 0 {
            write!(f, "(-1)")
        } else {
            write!(f, "({},{})", self.block, self.comp)
        }
    }
}

impl BlockLayout {
    pub fn new(n: usize, s: usize, levels: usize) -> Self {
        BlockLayout { n, s, levels }
    }

    pub fn dim(&self) -> usize {
        1 + self.n + self.s * self.levels
    }

    pub fn block_size(&self, block: i32) -> usize {
        match block {
            -1 => 1,
            0 => self.n,
            b if b >= 1 && (b as usize) <= self.levels => self.s,
            _ => 0,
        }
    }

    pub fn offset(&self, block: i32) -> usize {
        match block {
            -1 => 0,
            0 => 1,
            b => 1 + self.n + self.s * (b as usize - 1),
        }
    }

    pub fn has_block(&self, block: i32) -> bool {
        block >= -1 && block <= self.levels as i32
    }

    pub fn index(&self, slot: Slot) -> usize {
        debug_assert!(slot.comp >= 1 && slot.comp <= self.block_size(slot.block), "slot {slot} outside layout");
        self.offset(slot.block) + slot.comp - 1
    }

    pub fn slot(&self, index: usize) -> Slot {
        if index == 0 {
            return Slot::DT;
        }
        if index <= self.n {
            return Slot::new(0, index);
        }
        let k = index - 1 - self.n;
        Slot::new((k / self.s) as i32 + 1, k % self.s + 1)
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.dim()).map(move |i| self.slot(i))
    }

    /// Index range of a block.
    pub fn range(&self, block: i32) -> std::ops::Range<usize> {
        let o = self.offset(block);
        o..o + self.block_size(block)
    }

    /// The coordinate whose differential leads the contact form in `slot`:
    /// `dt`, `dx_i`, or `du_j^(l-1)` at level `l`.
    pub fn support_var(&self, slot: Slot) -> VarId {
        match slot.block {
            -1 => VarId::Time,
            0 => VarId::x(slot.comp),
            l => VarId::du(slot.comp, l as usize - 1),
        }
    }

    /// Inverse of [`support_var`](Self::support_var) within this layout.
    pub fn slot_of_var(&self, v: VarId) -> Option<Slot> {
        let slot = match v {
            VarId::Time => Slot::DT,
            VarId::State(i) => Slot::new(0, i as usize),
            VarId::Control { order, index } => Slot::new(order as i32 + 1, index as usize),
        };
        (self.has_block(slot.block) && slot.comp >= 1 && slot.comp <= self.block_size(slot.block)).then_some(slot)
    }
}

/// A matrix of rational functions indexed by a row and a column layout.
///
/// `band` records the offset `J` with `A^i_j = 0` for `j > J + i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockMatrix {
    pub rows: BlockLayout,
    pub cols: BlockLayout,
    pub band: Option<i32>,
    entries: Vec<Vec<RatFn>>,
}

impl BlockMatrix {
    pub fn zeros(rows: BlockLayout, cols: BlockLayout) -> Self {
        BlockMatrix { rows, cols, band: None, entries: vec![vec![RatFn::zero(); cols.dim()]; rows.dim()] }
    }

    pub fn from_entries(rows: BlockLayout, cols: BlockLayout, entries: Vec<Vec<RatFn>>) -> Self {
        assert_eq!(entries.len(), rows.dim(), "row count");
        assert!(entries.iter().all(|r| r.len() == cols.dim()), "column count");
        BlockMatrix { rows, cols, band: None, entries }
    }

    pub fn identity(layout: BlockLayout) -> Self {
        let mut m = Self::zeros(layout, layout);
        for i in 0..layout.dim() {
            m.entries[i][i] = RatFn::one();
        }
        m
    }

    pub fn with_band(mut self, band: Option<i32>) -> Self {
        self.band = band;
        self
    }

    pub fn entries(&self) -> &[Vec<RatFn>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &RatFn {
        &self.entries[i][j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, v: RatFn) {
        self.entries[i][j] = v;
    }

    pub fn get(&self, r: Slot, c: Slot) -> &RatFn {
        &self.entries[self.rows.index(r)][self.cols.index(c)]
    }

    pub fn set(&mut self, r: Slot, c: Slot, v: RatFn) {
        let (i, j) = (self.rows.index(r), self.cols.index(c));
        self.entries[i][j] = v;
    }

    /// Dense copy of block `(bi, bj)`; empty when the block is outside.
    pub fn block(&self, bi: i32, bj: i32) -> Vec<Vec<RatFn>> {
        if !self.rows.has_block(bi) || !self.cols.has_block(bj) {
            return Vec::new();
        }
        self.rows.range(bi).map(|i| self.cols.range(bj).map(|j| self.entries[i][j].clone()).collect()).collect()
    }

    pub fn is_zero_block(&self, bi: i32, bj: i32) -> bool {
        self.block(bi, bj).iter().flatten().all(RatFn::is_zero)
    }

    /// `A^i_j = 0` whenever `j > i`.
    pub fn is_block_lower_triangular(&self) -> bool {
        for bi in -1..=self.rows.levels as i32 {
            for bj in bi + 1..=self.cols.levels as i32 {
                if !self.is_zero_block(bi, bj) {
                    return false;
                }
            }
        }
        true
    }

    pub fn mul(&self, other: &BlockMatrix) -> BlockMatrix {
        assert_eq!(self.cols, other.rows, "inner layouts differ");
        let mut out = BlockMatrix::zeros(self.rows, other.cols);
        for (i, row) in self.entries.iter().enumerate() {
            for (k, a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (j, b) in other.entries[k].iter().enumerate() {
                    if !b.is_zero() {
                        out.entries[i][j] = &out.entries[i][j] + &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> BlockMatrix {
        let entries = (0..self.cols.dim()).map(|j| (0..self.rows.dim()).map(|i| self.entries[i][j].clone()).collect()).collect();
        BlockMatrix { rows: self.cols, cols: self.rows, band: None, entries }
    }

    /// Keep row blocks up to `levels`.
    pub fn truncate_rows(&self, levels: usize) -> BlockMatrix {
        let rows = BlockLayout::new(self.rows.n, self.rows.s, levels);
        BlockMatrix { rows, cols: self.cols, band: self.band, entries: self.entries[..rows.dim()].to_vec() }
    }

    /// Keep column blocks up to `levels`.
    pub fn truncate_cols(&self, levels: usize) -> BlockMatrix {
        let cols = BlockLayout::new(self.cols.n, self.cols.s, levels);
        let entries = self.entries.iter().map(|r| r[..cols.dim()].to_vec()).collect();
        BlockMatrix { rows: self.rows, cols, band: self.band, entries }
    }

    /// Apply `f` to every entry.
    pub fn try_map<E>(&self, f: impl Fn(&RatFn) -> Result<RatFn, E>) -> Result<BlockMatrix, E> {
        let entries = self.entries.iter().map(|r| r.iter().map(&f).collect::<Result<Vec<_>, E>>()).collect::<Result<Vec<_>, E>>()?;
        Ok(BlockMatrix { rows: self.rows, cols: self.cols, band: self.band, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_slot_round_trip() {
        let l = BlockLayout::new(3, 2, 4);
        assert_eq!(l.dim(), 12);
        for i in 0..l.dim() {
            assert_eq!(l.index(l.slot(i)), i);
        }
        assert_eq!(l.index(Slot::new(2, 1)), 6);
        assert_eq!(l.slot_of_var(VarId::du(2, 1)), Some(Slot::new(2, 2)));
        assert_eq!(l.slot_of_var(VarId::du(2, 4)), None);
    }
}
