//! Canonical enumeration of odd finite functions and the per-table registry
//! of committed odd functions.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::tables::FiniteFun;

/// Weight of a finite function: Σ (col + val + 1) over its graph.
pub fn weight(g: &FiniteFun) -> u64 {
    g.iter().map(|(c, v)| c + v + 1).sum()
}

/// Position of `g` in the canonical order: by weight, then lexicographically
/// on the sorted `(col, val)` sequence.
pub fn canonical_cmp(a: &FiniteFun, b: &FiniteFun) -> Ordering {
    weight(a).cmp(&weight(b)).then_with(|| a.iter().cmp(b.iter()))
}

/// Lazily materialized canonical enumeration of all odd finite functions.
/// There are finitely many functions of each weight, so every odd function
/// has a finite index.
#[derive(Debug, Clone, Default)]
pub struct OddEnumeration {
    cache: Vec<FiniteFun>,
    next_weight: u64,
}

impl OddEnumeration {
    pub fn new() -> Self {
        OddEnumeration {
            cache: Vec::new(),
            next_weight: 1,
        }
    }

    pub fn get(&mut self, idx: usize) -> &FiniteFun {
        while self.cache.len() <= idx {
            let w = self.next_weight;
            self.next_weight += 1;
            let mut seq = Vec::new();
            gen_weight(0, w, &mut seq, &mut self.cache);
        }
        &self.cache[idx]
    }

    pub fn materialized(&self) -> usize {
        self.cache.len()
    }
}

fn gen_weight(min_col: u64, remaining: u64, seq: &mut Vec<(u64, u64)>, out: &mut Vec<FiniteFun>) {
    let mut col = min_col;
    while col < remaining {
        let mut val = 0;
        while col + val < remaining {
            let cost = col + val + 1;
            seq.push((col, val));
            if cost == remaining {
                if seq.len() % 2 == 1 {
                    out.push(seq.iter().copied().collect());
                }
            } else {
                gen_weight(col + 1, remaining - cost, seq, out);
            }
            seq.pop();
            val += 1;
        }
        col += 1;
    }
}

/// Every odd function ever placed into one output table, plus the column
/// watermark used to make odd-ified rows new.
#[derive(Debug, Clone, Default)]
pub struct OddRegistry {
    committed: HashSet<FiniteFun>,
    col_watermark: u64,
}

impl OddRegistry {
    pub fn contains(&self, g: &FiniteFun) -> bool {
        self.committed.contains(g)
    }

    /// Registers an odd function; returns false if it was already committed.
    pub fn commit(&mut self, g: FiniteFun) -> bool {
        debug_assert!(g.is_odd());
        self.committed.insert(g)
    }

    pub fn len(&self) -> usize {
        self.committed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.committed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FiniteFun> {
        self.committed.iter()
    }

    pub fn watermark(&self) -> u64 {
        self.col_watermark
    }

    /// Records that `col` is used in the table.
    pub fn note_col(&mut self, col: u64) {
        self.col_watermark = self.col_watermark.max(col + 1);
    }
}
