//! Bob's filtered view of the A-table: odd rows have one cell hidden until
//! Alice fills another cell in the same row, so every visible row is even.

use std::collections::BTreeMap;

use crate::protocol::Cell;
use crate::tables::{FiniteFun, FiniteTable};

/// Map from A-row to the `(col, val)` cell Bob currently ignores.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeldCells {
    held: BTreeMap<u64, (u64, u64)>,
}

impl HeldCells {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies the hold/release rule to the rows touched by `delta`, which
    /// must already be written into `a`. A row turning odd holds its
    /// newest cell (largest column written this stage); a row turning even
    /// releases. A held cell stays held while the row stays odd, so the view
    /// only ever grows.
    pub fn update(&mut self, a: &FiniteTable, delta: &[Cell]) {
        let mut newest: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for &(r, c, v) in delta {
            let e = newest.entry(r).or_insert((c, v));
            if c > e.0 {
                *e = (c, v);
            }
        }
        for (r, cell) in newest {
            if a.is_odd_row(r) {
                self.held.entry(r).or_insert(cell);
            } else {
                self.held.remove(&r);
            }
        }
    }

    pub fn get(&self, row: u64) -> Option<(u64, u64)> {
        self.held.get(&row).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, (u64, u64))> + '_ {
        self.held.iter().map(|(&r, &c)| (r, c))
    }

    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    /// Held cells exist exactly for odd rows and are filled cells of them.
    pub fn check(&self, a: &FiniteTable) -> Result<(), String> {
        for (r, (c, v)) in self.iter() {
            if a.get(r, c) != Some(v) {
                return Err(format!("held cell ({r},{c}) is not a cell of A"));
            }
            if !a.is_odd_row(r) {
                return Err(format!("row {r} is even but holds ({r},{c})"));
            }
        }
        for (r, _) in a.rows() {
            if a.is_odd_row(r) && self.get(r).is_none() {
                return Err(format!("odd row {r} has no held cell"));
            }
        }
        Ok(())
    }
}

/// A virtual table: A minus the held cells (or A itself when unfiltered).
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    a: &'a FiniteTable,
    held: Option<&'a HeldCells>,
}

/// Bob's view of `a` with the cells in `held` ignored.
pub fn filtered_view<'a>(a: &'a FiniteTable, held: &'a HeldCells) -> View<'a> {
    View { a, held: Some(held) }
}

impl<'a> View<'a> {
    pub fn raw(a: &'a FiniteTable) -> Self {
        View { a, held: None }
    }

    fn hidden(&self, row: u64) -> Option<u64> {
        self.held.and_then(|h| h.get(row)).map(|(c, _)| c)
    }

    pub fn row_cells(&self, row: u64) -> impl Iterator<Item = (u64, u64)> + 'a {
        let hidden = self.hidden(row);
        self.a
            .row(row)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&c, &v)| (c, v)))
            .filter(move |&(c, _)| Some(c) != hidden)
    }

    fn prefix_cells(&self, row: u64, k: u64) -> impl Iterator<Item = (u64, u64)> + 'a {
        let hidden = self.hidden(row);
        self.a
            .row(row)
            .into_iter()
            .flat_map(move |m| m.range(..k).map(|(&c, &v)| (c, v)))
            .filter(move |&(c, _)| Some(c) != hidden)
    }

    /// Does row `row` show any cell below column `k`?
    pub fn prefix_nonempty(&self, row: u64, k: u64) -> bool {
        self.prefix_cells(row, k).next().is_some()
    }

    pub fn get(&self, row: u64, col: u64) -> Option<u64> {
        if self.hidden(row) == Some(col) {
            None
        } else {
            self.a.get(row, col)
        }
    }

    pub fn row_len(&self, row: u64) -> usize {
        self.a.row_len(row) - usize::from(self.hidden(row).is_some())
    }

    pub fn row_fun(&self, row: u64) -> FiniteFun {
        self.row_cells(row).collect()
    }

    /// Rows `i` and `j` agree on every column `< k`.
    pub fn prefix_equal(&self, i: u64, j: u64, k: u64) -> bool {
        i == j || self.prefix_cells(i, k).eq(self.prefix_cells(j, k))
    }

    /// The first `k` positions of row `i` are all filled with one value.
    pub fn prefix_constant(&self, i: u64, k: u64) -> bool {
        if k == 0 {
            return true;
        }
        let mut expect_col = 0;
        let mut value = None;
        for (c, v) in self.prefix_cells(i, k) {
            if c != expect_col || value.is_some_and(|w| w != v) {
                return false;
            }
            value = Some(v);
            expect_col += 1;
        }
        expect_col == k
    }

    pub fn rows(&self) -> impl Iterator<Item = u64> + 'a {
        self.a.rows().map(|(r, _)| r)
    }

    pub fn materialize(&self) -> FiniteTable {
        let mut t = FiniteTable::new();
        for r in self.rows() {
            for (c, v) in self.row_cells(r) {
                t.set_cell(r, c, v).expect("fresh table");
            }
        }
        t
    }
}
