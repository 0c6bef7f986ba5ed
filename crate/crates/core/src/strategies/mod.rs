//! Bob's winning strategies, built from one assistant framework.
//!
//! Every output table has a pool of main assistants (assistant `i` mirrors
//! A-row `i`), an optional tail assistant (odd enumerator, ℬ-assistant or
//! copier), and in G3/G4 the constant assistants shared by all tables.

mod odd;
mod split;
mod view;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::protocol::{AliceMove, BetaSpec, BobMove, BobWrite, FSpec, GameKind};
use crate::referee::{Provenance, RowProvenance};
use crate::tables::{direct_sum_locate, unpair, FiniteFun, FiniteTable, TableError};

pub use odd::{canonical_cmp, weight, OddEnumeration, OddRegistry};
pub use split::{interleave, split_numbering};
pub use view::{filtered_view, HeldCells, View};

/// How far a ℬ-ification may scan the canonical odd enumeration.
pub const BETA_SCAN_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy wrote a conflicting cell in table {table}: {source}")]
    Conflict { table: usize, source: TableError },
    #[error("no unused member of class B extends `{content}` (row {row})")]
    BetaExhausted { row: u64, content: String },
    #[error("odd function `{0}` committed twice")]
    Duplicate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actor {
    Main { table: usize, index: u64 },
    Constant { m: u64 },
    Tail { table: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Copy,
    Oddify,
    BetaFill,
    ConstantFill,
    Emit,
    Release,
}

/// Who wrote a cell and why.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WriteTag {
    pub actor: Actor,
    pub purpose: Purpose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Duplicate,
    ConstantPrefix,
    Diagonal,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    /// The G2 instruction of main assistant `i`.
    Diagonal(u64),
    /// The G3/G4 instruction of constant assistant `m`.
    Cross(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Oddified {
        stage: u64,
        table: usize,
        row: u64,
        actor: Actor,
        cause: Cause,
        result: FiniteFun,
    },
    BetaFilled {
        stage: u64,
        table: usize,
        row: u64,
        actor: Actor,
        index: u64,
    },
    Invalidated {
        stage: u64,
        row: u64,
        index: u64,
    },
    Fired {
        stage: u64,
        instruction: Instruction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Main(usize, u64),
    Constant(u64),
    Tail,
}

#[derive(Debug, Clone)]
enum Fill {
    Invalidate,
    Serial,
    FValues(FSpec),
    Beta(BetaSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tail {
    None,
    OddEnumerator,
    Beta,
    Copier,
}

#[derive(Debug, Clone)]
struct Rules {
    view: bool,
    fill: Fill,
    tail: Tail,
    diagonal: bool,
    constants: bool,
}

impl Rules {
    fn for_kind(kind: &GameKind) -> Rules {
        let g0 = Rules {
            view: true,
            fill: Fill::Serial,
            tail: Tail::OddEnumerator,
            diagonal: false,
            constants: false,
        };
        match kind {
            GameKind::G0 => g0,
            GameKind::G1 => Rules {
                view: false,
                fill: Fill::Invalidate,
                tail: Tail::None,
                ..g0
            },
            GameKind::G2 => Rules {
                diagonal: true,
                ..g0
            },
            GameKind::G3 | GameKind::G4 { .. } => Rules {
                constants: true,
                ..g0
            },
            GameKind::Ext { beta } => Rules {
                view: false,
                fill: Fill::Beta(beta.clone()),
                tail: Tail::Beta,
                ..g0
            },
            GameKind::Pp65 { f } => Rules {
                fill: Fill::FValues(f.clone()),
                tail: Tail::Copier,
                ..g0
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct MainState {
    reserved: Option<u64>,
    invalid_count: u64,
    diag_fired: bool,
}

#[derive(Debug, Clone, Default)]
struct ConstState {
    rows: Vec<Option<u64>>,
    fired: bool,
}

#[derive(Debug, Clone, Default)]
struct Board {
    table: FiniteTable,
    next_fresh: u64,
    registry: OddRegistry,
    serial: u64,
    provenance: BTreeMap<u64, Provenance>,
    reserved_by: BTreeMap<u64, Owner>,
    cursor: usize,
    cursor_fn: Option<FiniteFun>,
    mains: Vec<MainState>,
}

/// Bob's strategy state for one run.
#[derive(Debug, Clone)]
pub struct Bob {
    kind: GameKind,
    rules: Rules,
    boards: Vec<Board>,
    consts: Vec<ConstState>,
    held: HeldCells,
    odd: OddEnumeration,
    beta_used: BTreeSet<u64>,
    beta_next: u64,
    stage: u64,
    out: BobMove,
    cur_tags: Vec<WriteTag>,
    tags: Vec<Vec<WriteTag>>,
    events: Vec<Event>,
    fired: BTreeMap<Instruction, u32>,
}

impl Bob {
    pub fn new(kind: GameKind) -> Result<Self, crate::protocol::ProtocolError> {
        kind.validate()?;
        Ok(Bob {
            rules: Rules::for_kind(&kind),
            kind,
            boards: Vec::new(),
            consts: Vec::new(),
            held: HeldCells::new(),
            odd: OddEnumeration::new(),
            beta_used: BTreeSet::new(),
            beta_next: 0,
            stage: 0,
            out: BobMove::default(),
            cur_tags: Vec::new(),
            tags: Vec::new(),
            events: Vec::new(),
            fired: BTreeMap::new(),
        })
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    /// Bob's reply at `stage`. `a` and `r` already include `alice`.
    pub fn step(
        &mut self,
        stage: u64,
        a: &FiniteTable,
        r: &FiniteTable,
        alice: &AliceMove,
    ) -> Result<BobMove, StrategyError> {
        self.stage = stage;
        if self.rules.view {
            self.held.update(a, &alice.a);
        }
        let count = self.kind.table_count(stage);
        while self.boards.len() < count {
            self.boards.push(Board::default());
        }
        for board in &mut self.boards {
            board.mains.resize(stage as usize + 1, MainState::default());
        }

        let held = self.held.clone();
        let view = if self.rules.view {
            filtered_view(a, &held)
        } else {
            View::raw(a)
        };
        let nonempty: Vec<u64> = view.rows().filter(|&row| view.row_len(row) > 0).collect();

        for b in 0..count {
            for i in 0..=stage {
                self.main_step(b, i, &view, &nonempty)?;
            }
        }
        if self.rules.constants {
            if self.consts.len() <= stage as usize {
                self.consts.resize(stage as usize + 1, ConstState::default());
            }
            for m in 0..=stage {
                self.constant_step(m, r, count)?;
            }
        }
        for b in 0..count {
            match self.rules.tail {
                Tail::None => {}
                Tail::OddEnumerator => self.enumerator_step(b)?,
                Tail::Beta => self.beta_step(b)?,
                Tail::Copier => self.copier_step(b, a)?,
            }
        }

        self.tags.push(std::mem::take(&mut self.cur_tags));
        Ok(std::mem::take(&mut self.out))
    }

    fn main_step(&mut self, b: usize, i: u64, view: &View, nonempty: &[u64]) -> Result<(), StrategyError> {
        let actor = Actor::Main { table: b, index: i };
        let mut st = self.boards[b].mains[i as usize];

        if self.rules.diagonal && !st.diag_fired {
            if let (Some(n), Some(row)) = (view.get(i, i), st.reserved) {
                if n == row {
                    self.oddify(b, row, actor, Cause::Diagonal)?;
                    st.reserved = None;
                    st.invalid_count += 1;
                    st.diag_fired = true;
                    self.fire(Instruction::Diagonal(i));
                }
            }
        }

        let row = match st.reserved {
            Some(row) => row,
            None => self.reserve(b, Owner::Main(b, i), Provenance::Mirror(i)),
        };
        st.reserved = Some(row);

        let k = st.invalid_count;
        let cause = if has_duplicate_before(view, nonempty, i, k) {
            Some(Cause::Duplicate)
        } else if self.rules.constants && view.prefix_constant(i, k) {
            Some(Cause::ConstantPrefix)
        } else {
            None
        };
        match cause {
            Some(cause) => {
                match self.rules.fill {
                    Fill::Invalidate => {
                        let board = &mut self.boards[b];
                        board.reserved_by.remove(&row);
                        board.provenance.insert(row, Provenance::Pending);
                        self.out.k_delta.push(row);
                        self.events.push(Event::Invalidated {
                            stage: self.stage,
                            row,
                            index: i,
                        });
                    }
                    Fill::Beta(_) => self.betaify(b, row, actor)?,
                    Fill::Serial | Fill::FValues(_) => self.oddify(b, row, actor, cause)?,
                }
                st.invalid_count += 1;
                st.reserved = None;
            }
            None => {
                let missing: Vec<(u64, u64)> = view
                    .row_cells(i)
                    .filter(|&(c, _)| self.boards[b].table.get(row, c).is_none())
                    .collect();
                for (c, v) in missing {
                    self.write(b, row, c, v, actor, Purpose::Copy)?;
                }
            }
        }
        self.boards[b].mains[i as usize] = st;
        Ok(())
    }

    fn constant_step(&mut self, m: u64, r: &FiniteTable, count: usize) -> Result<(), StrategyError> {
        let actor = Actor::Constant { m };
        let mi = m as usize;
        self.consts[mi].rows.resize(count, None);
        if !self.consts[mi].fired {
            if let Some((dst, row)) = self.cross_target(m, r, count) {
                self.oddify(dst, row, actor, Cause::Cross)?;
                self.consts[mi].rows[dst] = None;
                self.consts[mi].fired = true;
                self.fire(Instruction::Cross(m));
            }
        }
        for b in 0..count {
            let row = match self.consts[mi].rows[b] {
                Some(row) => row,
                None => {
                    let row = self.reserve(b, Owner::Constant(m), Provenance::Constant(m));
                    self.consts[mi].rows[b] = Some(row);
                    row
                }
            };
            let len = self.boards[b].table.row_len(row) as u64;
            self.write(b, row, len, m, actor, Purpose::ConstantFill)?;
        }
        Ok(())
    }

    /// The row constant assistant `m` must odd-ify now, if any.
    fn cross_target(&self, m: u64, r: &FiniteTable, count: usize) -> Option<(usize, u64)> {
        let rows = &self.consts[m as usize].rows;
        match self.kind {
            GameKind::G3 => {
                let i = m / 2;
                let (src, dst) = if m.is_multiple_of(2) { (1, 0) } else { (0, 1) };
                let n = r.get(i, rows[src]?)?;
                (rows[dst] == Some(n)).then_some((dst, n))
            }
            GameKind::G4 { .. } => {
                let (i, k) = unpair(m);
                if k as usize >= count {
                    return None;
                }
                let n = r.get(i, rows[k as usize]?)?;
                let (l, row) = direct_sum_locate(n, Some(k));
                let l = l as usize;
                (l < count && rows[l] == Some(row)).then_some((l, row))
            }
            _ => None,
        }
    }

    fn enumerator_step(&mut self, b: usize) -> Result<(), StrategyError> {
        let g = loop {
            let g = self.odd.get(self.boards[b].cursor).clone();
            self.boards[b].cursor += 1;
            if !self.boards[b].registry.contains(&g) {
                break g;
            }
        };
        self.place(b, &g, Provenance::Odd(g.clone()), Purpose::Emit)?;
        self.commit(b, g)?;
        let next = self.odd.get(self.boards[b].cursor).clone();
        self.boards[b].cursor_fn = Some(next);
        Ok(())
    }

    fn beta_step(&mut self, b: usize) -> Result<(), StrategyError> {
        let idx = self.beta_next;
        if let Some(g) = self.beta_member(idx) {
            self.place(b, &g, Provenance::Beta(idx), Purpose::Emit)?;
            self.mark_beta_used(idx);
        }
        Ok(())
    }

    fn copier_step(&mut self, b: usize, a: &FiniteTable) -> Result<(), StrategyError> {
        let odd_rows: Vec<FiniteFun> = a
            .rows()
            .filter(|(_, cells)| cells.len() % 2 == 1)
            .map(|(_, cells)| cells.clone().into())
            .collect();
        // every odd B-row is committed, so the registry decides "identical to a B-row"
        for g in odd_rows {
            if self.boards[b].registry.contains(&g) {
                continue;
            }
            self.place(b, &g, Provenance::Released(g.clone()), Purpose::Release)?;
            self.commit(b, g)?;
        }
        Ok(())
    }

    /// Writes `g` into a fresh row that is released at once.
    fn place(&mut self, b: usize, g: &FiniteFun, prov: Provenance, purpose: Purpose) -> Result<(), StrategyError> {
        let actor = Actor::Tail { table: b };
        let row = self.reserve(b, Owner::Tail, prov);
        for (c, v) in g.iter() {
            self.write(b, row, c, v, actor, purpose)?;
        }
        self.boards[b].reserved_by.remove(&row);
        Ok(())
    }

    fn reserve(&mut self, b: usize, owner: Owner, prov: Provenance) -> u64 {
        let board = &mut self.boards[b];
        let row = board.next_fresh;
        board.next_fresh += 1;
        board.reserved_by.insert(row, owner);
        board.provenance.insert(row, prov);
        row
    }

    fn write(&mut self, b: usize, row: u64, col: u64, val: u64, actor: Actor, purpose: Purpose) -> Result<(), StrategyError> {
        let board = &mut self.boards[b];
        match board.table.set_cell(row, col, val) {
            Ok(true) => {
                board.registry.note_col(col);
                self.out.writes.push(BobWrite {
                    table: b,
                    row,
                    col,
                    val,
                });
                self.cur_tags.push(WriteTag { actor, purpose });
                Ok(())
            }
            Ok(false) => Ok(()),
            Err(source) => Err(StrategyError::Conflict { table: b, source }),
        }
    }

    fn commit(&mut self, b: usize, g: FiniteFun) -> Result<(), StrategyError> {
        let text = g.to_string();
        if self.boards[b].registry.commit(g) {
            Ok(())
        } else {
            Err(StrategyError::Duplicate(text))
        }
    }

    /// Makes `row` new and odd: one fresh cell if its size is even, two if odd.
    fn oddify(&mut self, b: usize, row: u64, actor: Actor, cause: Cause) -> Result<(), StrategyError> {
        let n = if self.boards[b].table.row_len(row).is_multiple_of(2) { 1 } else { 2 };
        let mut col = self.boards[b].registry.watermark();
        for _ in 0..n {
            let (c, v) = match &self.rules.fill {
                Fill::FValues(f) => {
                    let c = f.next_domain_col(col);
                    (c, f.value(c).expect("column is in the domain"))
                }
                _ => {
                    let board = &mut self.boards[b];
                    board.serial += 1;
                    (col, board.serial - 1)
                }
            };
            self.write(b, row, c, v, actor, Purpose::Oddify)?;
            col = c + 1;
        }
        let g = self.boards[b].table.row_fun(row);
        self.commit(b, g.clone())?;
        let board = &mut self.boards[b];
        board.provenance.insert(row, Provenance::Odd(g.clone()));
        board.reserved_by.remove(&row);
        self.events.push(Event::Oddified {
            stage: self.stage,
            table: b,
            row,
            actor,
            cause,
            result: g,
        });
        Ok(())
    }

    /// Extends `row` to the least unused member of ℬ containing it.
    fn betaify(&mut self, b: usize, row: u64, actor: Actor) -> Result<(), StrategyError> {
        let content = self.boards[b].table.row_fun(row);
        let exhausted = || StrategyError::BetaExhausted {
            row,
            content: content.to_string(),
        };
        let mut idx = self.beta_next;
        let g = loop {
            if idx as usize >= BETA_SCAN_CAP {
                return Err(exhausted());
            }
            let Some(g) = self.beta_member(idx) else {
                return Err(exhausted());
            };
            if !self.beta_used.contains(&idx) && content.is_subfunction_of(&g) {
                break g;
            }
            idx += 1;
        };
        for (c, v) in g.iter() {
            self.write(b, row, c, v, actor, Purpose::BetaFill)?;
        }
        self.mark_beta_used(idx);
        let board = &mut self.boards[b];
        board.provenance.insert(row, Provenance::Beta(idx));
        board.reserved_by.remove(&row);
        self.events.push(Event::BetaFilled {
            stage: self.stage,
            table: b,
            row,
            actor,
            index: idx,
        });
        Ok(())
    }

    fn beta_member(&mut self, idx: u64) -> Option<FiniteFun> {
        match &self.rules.fill {
            Fill::Beta(BetaSpec::CanonicalOdd) => Some(self.odd.get(idx as usize).clone()),
            Fill::Beta(BetaSpec::Listed(list)) => list.get(idx as usize).cloned(),
            _ => None,
        }
    }

    fn mark_beta_used(&mut self, idx: u64) {
        self.beta_used.insert(idx);
        while self.beta_used.contains(&self.beta_next) {
            self.beta_next += 1;
        }
    }

    fn fire(&mut self, instruction: Instruction) {
        *self.fired.entry(instruction).or_default() += 1;
        self.events.push(Event::Fired {
            stage: self.stage,
            instruction,
        });
    }

    pub fn provenance(&self) -> Vec<RowProvenance> {
        let mut out = Vec::new();
        for (t, board) in self.boards.iter().enumerate() {
            for (&row, kind) in &board.provenance {
                out.push(RowProvenance {
                    table: t,
                    row,
                    kind: kind.clone(),
                });
            }
        }
        out
    }

    /// The next function each odd enumerator will try.
    pub fn cursors(&self) -> Vec<(usize, FiniteFun)> {
        self.boards
            .iter()
            .enumerate()
            .filter_map(|(t, b)| b.cursor_fn.clone().map(|g| (t, g)))
            .collect()
    }

    pub fn tags(&self) -> &[Vec<WriteTag>] {
        &self.tags
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn held(&self) -> &HeldCells {
        &self.held
    }

    pub fn table(&self, b: usize) -> Option<&FiniteTable> {
        self.boards.get(b).map(|board| &board.table)
    }

    pub fn registry(&self, b: usize) -> Option<&OddRegistry> {
        self.boards.get(b).map(|board| &board.registry)
    }

    pub fn main_reservation(&self, b: usize, i: u64) -> Option<u64> {
        self.boards.get(b)?.mains.get(i as usize)?.reserved
    }

    pub fn invalid_count(&self, b: usize, i: u64) -> u64 {
        self.boards
            .get(b)
            .and_then(|board| board.mains.get(i as usize))
            .map_or(0, |m| m.invalid_count)
    }

    /// Rows constant assistant `m` holds, per table.
    pub fn constant_rows(&self, m: u64) -> Vec<Option<u64>> {
        self.consts
            .get(m as usize)
            .map_or_else(Vec::new, |c| c.rows.clone())
    }

    pub fn fired_count(&self, instruction: Instruction) -> u32 {
        self.fired.get(&instruction).copied().unwrap_or(0)
    }

    /// Checks the strategy's structural invariants against Alice's A-table.
    pub fn check_invariants(&self, a: &FiniteTable) -> Result<(), String> {
        let mut owners: Vec<BTreeMap<u64, Owner>> = vec![BTreeMap::new(); self.boards.len()];
        let mut claim = |b: usize, row: u64, who: Owner| -> Result<(), String> {
            match owners[b].insert(row, who) {
                Some(prev) => Err(format!("row {row} of table {b} held by {prev:?} and {who:?}")),
                None => Ok(()),
            }
        };
        for (b, board) in self.boards.iter().enumerate() {
            for (i, m) in board.mains.iter().enumerate() {
                if let Some(row) = m.reserved {
                    claim(b, row, Owner::Main(b, i as u64))?;
                }
            }
        }
        for (m, c) in self.consts.iter().enumerate() {
            for (b, row) in c.rows.iter().enumerate() {
                if let Some(row) = row {
                    claim(b, *row, Owner::Constant(m as u64))?;
                }
            }
        }
        for (b, board) in self.boards.iter().enumerate() {
            if owners[b] != board.reserved_by {
                return Err(format!("reservation map of table {b} is out of sync"));
            }
            for g in board.registry.iter() {
                if !g.is_odd() {
                    return Err(format!("registry of table {b} holds even `{g}`"));
                }
            }
            for (&row, prov) in &board.provenance {
                if let Provenance::Odd(g) | Provenance::Released(g) = prov {
                    if board.table.row_fun(row) != *g || !board.registry.contains(g) {
                        return Err(format!("odd row {row} of table {b} is not `{g}`"));
                    }
                }
                if row >= board.next_fresh {
                    return Err(format!("row {row} of table {b} is above the fresh cursor"));
                }
            }
        }
        if self.rules.view {
            self.held.check(a)?;
            let view = filtered_view(a, &self.held);
            if let Some(row) = view.rows().find(|&row| view.row_len(row) % 2 == 1) {
                return Err(format!("view row {row} is odd"));
            }
        }
        if let Some((ins, n)) = self.fired.iter().find(|(_, &n)| n > 1) {
            return Err(format!("{ins:?} fired {n} times"));
        }
        Ok(())
    }
}

/// Is the first-`k` prefix of view row `i` equal to that of some row `j < i`?
/// Rows outside `nonempty` have empty prefixes, so only those need a scan.
fn has_duplicate_before(view: &View, nonempty: &[u64], i: u64, k: u64) -> bool {
    let below = nonempty.partition_point(|&j| j < i);
    if nonempty[..below].iter().any(|&j| view.prefix_equal(i, j, k)) {
        return true;
    }
    let empty_prefix = !view.prefix_nonempty(i, k);
    empty_prefix && (below as u64) < i
}
