//! Monotone sparse tables over ℕ², finite functions, pairing and direct-sum indexing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("conflicting write at ({row},{col}): holds {held}, attempted {attempted}")]
    ConflictingWrite {
        row: u64,
        col: u64,
        held: u64,
        attempted: u64,
    },
    #[error("summand {0} is excluded from the direct sum")]
    ExcludedSummand(u64),
    #[error("malformed finite function `{0}`")]
    Malformed(String),
}

/// A finite partial function ℕ ⇀ ℕ with canonical (sorted) key order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteFun(BTreeMap<u64, u64>);

impl FiniteFun {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_odd(&self) -> bool {
        self.0.len() % 2 == 1
    }

    pub fn get(&self, col: u64) -> Option<u64> {
        self.0.get(&col).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.0.iter().map(|(&c, &v)| (c, v))
    }

    pub fn max_key(&self) -> Option<u64> {
        self.0.keys().next_back().copied()
    }

    /// Inserts a point; returns the previous value if the key was defined.
    pub fn insert(&mut self, col: u64, val: u64) -> Option<u64> {
        self.0.insert(col, val)
    }

    pub fn remove(&mut self, col: u64) -> Option<u64> {
        self.0.remove(&col)
    }

    /// `self ⊆ other` as graphs.
    pub fn is_subfunction_of(&self, other: &FiniteFun) -> bool {
        self.iter().all(|(c, v)| other.get(c) == Some(v))
    }

    pub fn as_map(&self) -> &BTreeMap<u64, u64> {
        &self.0
    }
}

impl FromIterator<(u64, u64)> for FiniteFun {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        FiniteFun(iter.into_iter().collect())
    }
}

impl From<BTreeMap<u64, u64>> for FiniteFun {
    fn from(m: BTreeMap<u64, u64>) -> Self {
        FiniteFun(m)
    }
}

/// Canonical text form: sorted `col:val` pairs joined by commas. The empty
/// function is the empty string.
impl fmt::Display for FiniteFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, v) in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{c}:{v}")?;
        }
        Ok(())
    }
}

impl FromStr for FiniteFun {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut out = BTreeMap::new();
        if s.is_empty() {
            return Ok(FiniteFun(out));
        }
        for part in s.split(',') {
            let (c, v) = part
                .split_once(':')
                .ok_or_else(|| TableError::Malformed(s.to_string()))?;
            let c: u64 = c.trim().parse().map_err(|_| TableError::Malformed(s.to_string()))?;
            let v: u64 = v.trim().parse().map_err(|_| TableError::Malformed(s.to_string()))?;
            if out.insert(c, v).is_some() {
                return Err(TableError::Malformed(s.to_string()));
            }
        }
        Ok(FiniteFun(out))
    }
}

/// An append-only finite partial map (row, col) → value.
///
/// Absence of a cell means undefined; empty rows are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteTable {
    rows: BTreeMap<u64, BTreeMap<u64, u64>>,
    cells: usize,
}

impl FiniteTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes `v` into cell `(r, c)`. Returns `Ok(true)` for a fresh cell and
    /// `Ok(false)` for an idempotent rewrite.
    pub fn set_cell(&mut self, r: u64, c: u64, v: u64) -> Result<bool, TableError> {
        let row = self.rows.entry(r).or_default();
        match row.get(&c) {
            Some(&held) if held == v => Ok(false),
            Some(&held) => Err(TableError::ConflictingWrite {
                row: r,
                col: c,
                held,
                attempted: v,
            }),
            None => {
                row.insert(c, v);
                self.cells += 1;
                Ok(true)
            }
        }
    }

    /// Checks a write without applying it.
    pub fn check_cell(&self, r: u64, c: u64, v: u64) -> Result<(), TableError> {
        match self.get(r, c) {
            Some(held) if held != v => Err(TableError::ConflictingWrite {
                row: r,
                col: c,
                held,
                attempted: v,
            }),
            _ => Ok(()),
        }
    }

    pub fn get(&self, r: u64, c: u64) -> Option<u64> {
        self.rows.get(&r).and_then(|row| row.get(&c)).copied()
    }

    pub fn row(&self, r: u64) -> Option<&BTreeMap<u64, u64>> {
        self.rows.get(&r)
    }

    pub fn row_fun(&self, r: u64) -> FiniteFun {
        self.rows.get(&r).cloned().map(FiniteFun::from).unwrap_or_default()
    }

    pub fn row_len(&self, r: u64) -> usize {
        self.rows.get(&r).map_or(0, BTreeMap::len)
    }

    pub fn is_odd_row(&self, r: u64) -> bool {
        self.row_len(r) % 2 == 1
    }

    /// True iff rows `i` and `j` agree (both empty or equal) on every column `< k`.
    pub fn prefix_equal(&self, i: u64, j: u64, k: u64) -> bool {
        if i == j {
            return true;
        }
        let empty = BTreeMap::new();
        let a = self.rows.get(&i).unwrap_or(&empty);
        let b = self.rows.get(&j).unwrap_or(&empty);
        a.range(..k).eq(b.range(..k))
    }

    /// Rows holding at least one cell, in increasing order.
    pub fn rows(&self) -> impl Iterator<Item = (u64, &BTreeMap<u64, u64>)> + '_ {
        self.rows.iter().map(|(&r, row)| (r, row))
    }

    pub fn cells(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        self.rows
            .iter()
            .flat_map(|(&r, row)| row.iter().map(move |(&c, &v)| (r, c, v)))
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    pub fn max_row(&self) -> Option<u64> {
        self.rows.keys().next_back().copied()
    }

    /// `self ⊆ other` cellwise.
    pub fn is_subtable_of(&self, other: &FiniteTable) -> bool {
        self.cells().all(|(r, c, v)| other.get(r, c) == Some(v))
    }
}

/// Rows Bob has invalidated. Grows monotonically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvalidationSet(BTreeSet<u64>);

impl InvalidationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row; returns false if it was already invalid.
    pub fn insert(&mut self, row: u64) -> bool {
        self.0.insert(row)
    }

    pub fn contains(&self, row: u64) -> bool {
        self.0.contains(&row)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &InvalidationSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

/// Cantor pairing `(j+k)(j+k+1)/2 + k`.
pub fn pair(j: u64, k: u64) -> u64 {
    let s = j + k;
    s * (s + 1) / 2 + k
}

pub fn unpair(n: u64) -> (u64, u64) {
    let w = ((8 * n as u128 + 1).isqrt() as u64 - 1) / 2;
    let t = w * (w + 1) / 2;
    let k = n - t;
    (w - k, k)
}

/// Row index of row `m` of summand `l` in a direct-sum table. With an
/// excluded summand the remaining summands are re-indexed order-preservingly.
pub fn direct_sum_row_index(l: u64, m: u64, excluded: Option<u64>) -> Result<u64, TableError> {
    let p = match excluded {
        Some(k) if l == k => return Err(TableError::ExcludedSummand(k)),
        Some(k) if l > k => l - 1,
        _ => l,
    };
    Ok(pair(p, m))
}

/// Inverse of [`direct_sum_row_index`]: the `(summand, row)` addressed by `n`.
pub fn direct_sum_locate(n: u64, excluded: Option<u64>) -> (u64, u64) {
    let (p, m) = unpair(n);
    match excluded {
        Some(k) if p >= k => (p + 1, m),
        _ => (p, m),
    }
}
