//! Replayed end-of-run state shared by both referees.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::adversaries::LimitDecl;
use crate::protocol::{BetaSpec, GameKind, GameState, ProtocolError, Transcript};
use crate::strategies::{filtered_view, HeldCells, OddEnumeration, View};
use crate::tables::{FiniteFun, FiniteTable, InvalidationSet};

use super::Provenance;

/// The finite rectangle of rows and columns a verdict quantifies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub rows: u64,
    pub cols: u64,
}

impl Default for Window {
    fn default() -> Self {
        Window { rows: 64, cols: 32 }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s.split_once('x').ok_or_else(|| format!("bad window `{s}`, want RxC"))?;
        let rows = r.parse().map_err(|_| format!("bad window rows `{r}`"))?;
        let cols = c.parse().map_err(|_| format!("bad window cols `{c}`"))?;
        Ok(Window { rows, cols })
    }
}

/// Final boards, held cells and provenance of a transcript.
pub struct Ctx<'t> {
    pub t: &'t Transcript,
    pub window: Window,
    pub a: FiniteTable,
    pub r: FiniteTable,
    pub out: Vec<FiniteTable>,
    pub k: InvalidationSet,
    pub held: HeldCells,
    pub uses_view: bool,
    pub prov: Vec<BTreeMap<u64, Provenance>>,
    pub cursors: BTreeMap<usize, FiniteFun>,
    beta: Vec<FiniteFun>,
}

impl<'t> Ctx<'t> {
    /// Replays the transcript, re-checking every duty on the way.
    pub fn replay(t: &'t Transcript, window: Window) -> Result<Self, ProtocolError> {
        let uses_view = matches!(
            t.kind,
            GameKind::G0 | GameKind::G2 | GameKind::G3 | GameKind::G4 { .. } | GameKind::Pp65 { .. }
        );
        let mut st = GameState::new(t.kind.clone(), t.seed)?;
        let mut held = HeldCells::new();
        for rec in &t.records {
            st.submit_alice(&rec.alice)?;
            if uses_view {
                held.update(&st.a, &rec.alice.a);
            }
            st.submit_bob(&rec.bob)?;
        }
        let tables = st.out.len().max(t.kind.table_count(t.stages.saturating_sub(1)));
        let mut prov = vec![BTreeMap::new(); tables];
        for p in &t.provenance {
            if p.table >= tables {
                return Err(ProtocolError::ShapeMismatch(format!(
                    "provenance for missing table {}",
                    p.table
                )));
            }
            prov[p.table].insert(p.row, p.kind.clone());
        }
        let mut out = st.out.clone();
        out.resize(tables, FiniteTable::new());
        let max_beta = t
            .provenance
            .iter()
            .filter_map(|p| match p.kind {
                Provenance::Beta(idx) => Some(idx as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let beta = match &t.kind {
            GameKind::Ext {
                beta: BetaSpec::Listed(list),
            } => list.clone(),
            GameKind::Ext {
                beta: BetaSpec::CanonicalOdd,
            } => {
                let mut e = OddEnumeration::new();
                (0..max_beta).map(|i| e.get(i).clone()).collect()
            }
            _ => Vec::new(),
        };
        Ok(Ctx {
            t,
            window,
            a: st.a,
            r: st.r,
            out,
            k: st.k,
            held,
            uses_view,
            prov,
            cursors: t.cursors.iter().cloned().collect(),
            beta,
        })
    }

    pub fn stages(&self) -> u64 {
        self.t.records.len() as u64
    }

    pub fn tables(&self) -> usize {
        self.out.len()
    }

    pub fn label(&self, table: usize) -> String {
        self.t.kind.table_label(table)
    }

    pub fn view(&self) -> View<'_> {
        if self.uses_view {
            filtered_view(&self.a, &self.held)
        } else {
            View::raw(&self.a)
        }
    }

    pub fn a_limit(&self, row: u64) -> LimitDecl {
        self.t.decls.a(row)
    }

    pub fn r_limit(&self, row: u64) -> LimitDecl {
        self.t.decls.r(row)
    }

    /// Limit of the row Bob's assistant `i` mirrors. An odd finite A-row
    /// only has a known view once it is complete, since the hidden cell is
    /// fixed from then on.
    pub fn mirror_limit(&self, i: u64) -> LimitDecl {
        let d = self.a_limit(i);
        if !self.uses_view {
            return d;
        }
        match d {
            LimitDecl::Finite(g) if g.is_odd() => {
                if !LimitDecl::Finite(g.clone()).is_reached_by(self.a.row(i)) {
                    return LimitDecl::Undeclared;
                }
                let mut h = g;
                if let Some((c, _)) = self.held.get(i) {
                    h.remove(c);
                }
                LimitDecl::Finite(h)
            }
            other => other,
        }
    }

    pub fn beta_member(&self, idx: u64) -> Option<&FiniteFun> {
        self.beta.get(idx as usize)
    }

    pub fn prov_limit(&self, p: &Provenance) -> LimitDecl {
        match p {
            Provenance::Mirror(i) => self.mirror_limit(*i),
            Provenance::Constant(m) => LimitDecl::constant(*m),
            Provenance::Odd(g) | Provenance::Released(g) => LimitDecl::Finite(g.clone()),
            Provenance::Beta(idx) => self
                .beta_member(*idx)
                .map_or(LimitDecl::Undeclared, |g| LimitDecl::Finite(g.clone())),
            Provenance::Pending => LimitDecl::Undeclared,
        }
    }

    /// Whether B-row `row` of `table` takes part in the winner conditions.
    pub fn is_valid(&self, table: usize, row: u64) -> bool {
        !(self.t.kind.has_k() && table == 0 && self.k.contains(row))
    }

    /// Row indices over which injectivity is checked: window rows plus every
    /// mirror, constant and released row (odd and ℬ rows are distinct by
    /// construction outside the window).
    pub fn in_injectivity_domain(&self, row: u64, p: &Provenance) -> bool {
        !matches!(p, Provenance::Pending)
            && (row < self.window.rows
                || matches!(p, Provenance::Mirror(_) | Provenance::Constant(_) | Provenance::Released(_)))
    }

    /// Excuse for an uncovered A-row, or `None` if it is a real violation.
    /// `has_mirror(j)` tells whether table `table` holds a mirror of A-row `j`.
    pub fn coverage_excuse(
        &self,
        table: usize,
        i: u64,
        limit: &LimitDecl,
        has_mirror: impl Fn(u64) -> bool,
    ) -> Option<&'static str> {
        let stages = self.stages();
        match limit {
            LimitDecl::Undeclared => return Some("undeclared"),
            LimitDecl::Finite(g) if g.is_odd() => {
                if let Some(cur) = self.cursors.get(&table) {
                    if crate::strategies::canonical_cmp(cur, g) != std::cmp::Ordering::Greater {
                        return Some("enumerator not there yet");
                    }
                }
                if matches!(self.t.kind, GameKind::Pp65 { .. }) && !limit.is_reached_by(self.a.row(i)) {
                    return Some("odd row not complete");
                }
            }
            _ => {}
        }
        if let Some(m) = limit.as_constant() {
            if self.t.kind.has_r() {
                // constant assistant m holds a row in every table once active
                return (m >= stages).then_some("constant assistant inactive");
            }
        }
        let mine = self.mirror_limit(i);
        if !mine.is_known() {
            return Some("view limit unknown");
        }
        let first = (0..=i).find(|&j| self.mirror_limit(j) == mine).unwrap_or(i);
        if first >= stages || !has_mirror(first) {
            return Some("responsible assistant has no row");
        }
        None
    }
}
