//! Game definitions, move shapes, duty enforcement and the run loop.

pub mod trace;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::adversaries::{AdversaryError, AdversarySpec, Declarations, Pattern};
use crate::referee::RowProvenance;
use crate::strategies::{Bob, Event, StrategyError, WriteTag};
use crate::tables::{FiniteFun, FiniteTable, InvalidationSet, TableError};

/// A cell write `(row, col, val)`.
pub type Cell = (u64, u64, u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("duty violation on {table}: {source}")]
    ConflictingWrite { table: String, source: TableError },
    #[error("out of turn: {0}")]
    OutOfTurn(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// The members of class ℬ for the extension game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BetaSpec {
    /// All odd finite functions in canonical order.
    CanonicalOdd,
    Listed(Vec<FiniteFun>),
}

/// A function with infinite domain `{offset + stride·t}` whose value at
/// column `c` is `values(c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FSpec {
    pub values: Pattern,
    pub offset: u64,
    pub stride: u64,
}

impl FSpec {
    pub fn identity() -> Self {
        FSpec {
            values: Pattern::identity(),
            offset: 0,
            stride: 1,
        }
    }

    pub fn in_domain(&self, col: u64) -> bool {
        col >= self.offset && (col - self.offset).is_multiple_of(self.stride)
    }

    /// Least domain column `>= col`.
    pub fn next_domain_col(&self, col: u64) -> u64 {
        if col <= self.offset {
            return self.offset;
        }
        let d = col - self.offset;
        self.offset + d.div_ceil(self.stride) * self.stride
    }

    pub fn value(&self, col: u64) -> Option<u64> {
        self.in_domain(col).then(|| self.values.value(col))
    }
}

impl fmt::Display for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0 && self.stride == 1 {
            if self.values == Pattern::identity() {
                return write!(f, "identity");
            }
            if let Some(m) = self.values.as_constant() {
                return write!(f, "const:{m}");
            }
        }
        write!(f, "pattern:{}@{}/{}", self.values, self.offset, self.stride)
    }
}

impl FromStr for FSpec {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProtocolError::BadParameters(format!("bad f spec `{s}`"));
        if s == "identity" {
            return Ok(FSpec::identity());
        }
        if let Some(m) = s.strip_prefix("const:") {
            return Ok(FSpec {
                values: Pattern::constant(m.parse().map_err(|_| bad())?),
                offset: 0,
                stride: 1,
            });
        }
        let rest = s.strip_prefix("pattern:").ok_or_else(bad)?;
        let (p, dom) = rest.split_once('@').unwrap_or((rest, "0/1"));
        let (off, stride) = dom.split_once('/').ok_or_else(bad)?;
        Ok(FSpec {
            values: p.parse().map_err(|_| bad())?,
            offset: off.parse().map_err(|_| bad())?,
            stride: stride.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameKind {
    G0,
    G1,
    G2,
    G3,
    /// `max_tables` caps how many of the tables B⁰, B¹, … are ever opened.
    G4 { max_tables: Option<u64> },
    Ext { beta: BetaSpec },
    Pp65 { f: FSpec },
}

pub const ALL_KINDS: [&str; 7] = ["g0", "g1", "g2", "g3", "g4", "ext", "pp65"];

impl GameKind {
    pub fn name(&self) -> &'static str {
        match self {
            GameKind::G0 => "g0",
            GameKind::G1 => "g1",
            GameKind::G2 => "g2",
            GameKind::G3 => "g3",
            GameKind::G4 { .. } => "g4",
            GameKind::Ext { .. } => "ext",
            GameKind::Pp65 { .. } => "pp65",
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            GameKind::Ext {
                beta: BetaSpec::Listed(list),
            } => {
                if list.is_empty() {
                    return Err(ProtocolError::BadParameters("class B has no members".into()));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(dup) = list.iter().find(|g| !seen.insert(*g)) {
                    return Err(ProtocolError::BadParameters(format!(
                        "class B numbering repeats `{dup}`"
                    )));
                }
                Ok(())
            }
            GameKind::Pp65 { f } if f.stride == 0 => Err(ProtocolError::BadParameters(
                "f needs an infinite domain (stride >= 1)".into(),
            )),
            GameKind::G4 { max_tables: Some(0) } => {
                Err(ProtocolError::BadParameters("g4 needs at least one table".into()))
            }
            _ => Ok(()),
        }
    }

    /// Whether Alice's R board is part of the game.
    pub fn has_r(&self) -> bool {
        matches!(self, GameKind::G3 | GameKind::G4 { .. })
    }

    pub fn has_k(&self) -> bool {
        matches!(self, GameKind::G1)
    }

    /// Number of output tables Bob may write at `stage`.
    pub fn table_count(&self, stage: u64) -> usize {
        match self {
            GameKind::G3 => 2,
            GameKind::G4 { max_tables } => {
                let n = stage + 1;
                max_tables.map_or(n, |m| n.min(m)) as usize
            }
            _ => 1,
        }
    }

    pub fn table_label(&self, idx: usize) -> String {
        match self {
            GameKind::G3 if idx == 1 => "C".into(),
            GameKind::G4 { .. } => format!("B{idx}"),
            _ => "B".into(),
        }
    }

    pub fn parse_table_label(&self, label: &str) -> Option<usize> {
        match self {
            GameKind::G3 => match label {
                "B" => Some(0),
                "C" => Some(1),
                _ => None,
            },
            GameKind::G4 { .. } => label.strip_prefix('B')?.parse().ok(),
            _ => (label == "B").then_some(0),
        }
    }

    /// Number of winner conditions of the game itself.
    pub fn condition_count(&self) -> usize {
        match self {
            GameKind::G0 | GameKind::G1 | GameKind::Ext { .. } | GameKind::Pp65 { .. } => 2,
            GameKind::G2 | GameKind::G4 { .. } => 3,
            GameKind::G3 => 6,
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameKind::G4 {
                max_tables: Some(m),
            } => write!(f, "g4:tables={m}"),
            GameKind::Ext {
                beta: BetaSpec::CanonicalOdd,
            } => write!(f, "ext:canonical-odd"),
            GameKind::Ext {
                beta: BetaSpec::Listed(list),
            } => {
                let parts: Vec<String> = list.iter().map(|g| g.to_string()).collect();
                write!(f, "ext:listed:{}", parts.join(";"))
            }
            GameKind::Pp65 { f: spec } => write!(f, "pp65:{spec}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for GameKind {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProtocolError::BadParameters(format!("unknown game `{s}`"));
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let kind = match (name, params) {
            ("g0", None) => GameKind::G0,
            ("g1", None) => GameKind::G1,
            ("g2", None) => GameKind::G2,
            ("g3", None) => GameKind::G3,
            ("g4", None) => GameKind::G4 { max_tables: None },
            ("g4", Some(p)) => {
                let m = p.strip_prefix("tables=").ok_or_else(bad)?;
                GameKind::G4 {
                    max_tables: Some(m.parse().map_err(|_| bad())?),
                }
            }
            ("ext", None) => {
                return Err(ProtocolError::BadParameters(
                    "ext needs a class B spec (canonical-odd or listed:...)".into(),
                ))
            }
            ("ext", Some(p)) => GameKind::Ext {
                beta: parse_beta(p)?,
            },
            ("pp65", None) => {
                return Err(ProtocolError::BadParameters("pp65 needs an f spec".into()))
            }
            ("pp65", Some(p)) => GameKind::Pp65 { f: p.parse()? },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// `canonical-odd` or `listed:f1;f2;...`.
pub fn parse_beta(s: &str) -> Result<BetaSpec, ProtocolError> {
    if s == "canonical-odd" {
        return Ok(BetaSpec::CanonicalOdd);
    }
    let list = s
        .strip_prefix("listed:")
        .ok_or_else(|| ProtocolError::BadParameters(format!("bad class B spec `{s}`")))?;
    list.split(';')
        .map(|g| {
            g.parse::<FiniteFun>()
                .map_err(|e| ProtocolError::BadParameters(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(BetaSpec::Listed)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliceMove {
    pub a: Vec<Cell>,
    pub r: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BobWrite {
    pub table: usize,
    pub row: u64,
    pub col: u64,
    pub val: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BobMove {
    pub writes: Vec<BobWrite>,
    pub k_delta: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Turn {
    Alice,
    Bob,
}

/// Accumulated boards plus whose turn it is.
#[derive(Debug, Clone)]
pub struct GameState {
    kind: GameKind,
    seed: u64,
    stage: u64,
    turn: Turn,
    pub a: FiniteTable,
    pub r: FiniteTable,
    pub out: Vec<FiniteTable>,
    pub k: InvalidationSet,
}

impl GameState {
    pub fn new(kind: GameKind, seed: u64) -> Result<Self, ProtocolError> {
        kind.validate()?;
        Ok(GameState {
            kind,
            seed,
            stage: 0,
            turn: Turn::Alice,
            a: FiniteTable::new(),
            r: FiniteTable::new(),
            out: Vec::new(),
            k: InvalidationSet::new(),
        })
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn submit_alice(&mut self, mv: &AliceMove) -> Result<(), ProtocolError> {
        if self.turn != Turn::Alice {
            return Err(ProtocolError::OutOfTurn("Alice moved twice"));
        }
        if !mv.r.is_empty() && !self.kind.has_r() {
            return Err(ProtocolError::ShapeMismatch(format!(
                "{} has no R board",
                self.kind.name()
            )));
        }
        check_delta(&self.a, &mv.a, "A")?;
        check_delta(&self.r, &mv.r, "R")?;
        apply(&mut self.a, &mv.a);
        apply(&mut self.r, &mv.r);
        self.turn = Turn::Bob;
        Ok(())
    }

    pub fn submit_bob(&mut self, mv: &BobMove) -> Result<(), ProtocolError> {
        if self.turn != Turn::Bob {
            return Err(ProtocolError::OutOfTurn("Bob moved before Alice"));
        }
        if !mv.k_delta.is_empty() && !self.kind.has_k() {
            return Err(ProtocolError::ShapeMismatch(format!(
                "{} has no invalidation set",
                self.kind.name()
            )));
        }
        let count = self.kind.table_count(self.stage);
        let mut per_table: Vec<Vec<Cell>> = vec![Vec::new(); count];
        for w in &mv.writes {
            let cells = per_table.get_mut(w.table).ok_or_else(|| {
                ProtocolError::ShapeMismatch(format!(
                    "stage {} allows {count} table(s), write to table {}",
                    self.stage, w.table
                ))
            })?;
            cells.push((w.row, w.col, w.val));
        }
        while self.out.len() < count {
            self.out.push(FiniteTable::new());
        }
        for (t, cells) in per_table.iter().enumerate() {
            check_delta(&self.out[t], cells, &self.kind.table_label(t))?;
        }
        for (t, cells) in per_table.iter().enumerate() {
            apply(&mut self.out[t], cells);
        }
        for &row in &mv.k_delta {
            self.k.insert(row);
        }
        self.turn = Turn::Alice;
        self.stage += 1;
        Ok(())
    }

    /// Bob announces his complete tables and K instead of deltas. Anything
    /// missing from an earlier announcement is a duty violation.
    pub fn announce_bob(
        &mut self,
        tables: &[FiniteTable],
        k: &InvalidationSet,
    ) -> Result<(), ProtocolError> {
        if !self.k.is_subset(k) {
            return Err(ProtocolError::ShapeMismatch("K may not shrink".into()));
        }
        for (t, old) in self.out.iter().enumerate() {
            let new = tables.get(t).ok_or_else(|| {
                ProtocolError::ShapeMismatch(format!("table {t} was dropped"))
            })?;
            if !old.is_subtable_of(new) {
                return Err(ProtocolError::ShapeMismatch(format!(
                    "table {} lost cells",
                    self.kind.table_label(t)
                )));
            }
        }
        let mut mv = BobMove::default();
        for (t, new) in tables.iter().enumerate() {
            for (row, col, val) in new.cells() {
                let old = self.out.get(t).and_then(|o| o.get(row, col));
                if old.is_none() {
                    mv.writes.push(BobWrite {
                        table: t,
                        row,
                        col,
                        val,
                    });
                }
            }
        }
        mv.k_delta = k.iter().filter(|&r| !self.k.contains(r)).collect();
        self.submit_bob(&mv)
    }
}

/// Validates a delta against `t` without applying anything.
fn check_delta(t: &FiniteTable, cells: &[Cell], label: &str) -> Result<(), ProtocolError> {
    let mut seen = std::collections::HashMap::new();
    for &(row, col, val) in cells {
        let err = |source| ProtocolError::ConflictingWrite {
            table: label.to_string(),
            source,
        };
        t.check_cell(row, col, val).map_err(err)?;
        if let Some(&held) = seen.get(&(row, col)) {
            if held != val {
                return Err(err(TableError::ConflictingWrite {
                    row,
                    col,
                    held,
                    attempted: val,
                }));
            }
        }
        seen.insert((row, col), val);
    }
    Ok(())
}

fn apply(t: &mut FiniteTable, cells: &[Cell]) {
    for &(row, col, val) in cells {
        t.set_cell(row, col, val).expect("delta was checked");
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageRecord {
    pub alice: AliceMove,
    pub bob: BobMove,
}

/// Everything a run produced. Tags and events are kept in memory only.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub kind: GameKind,
    pub seed: u64,
    pub stages: u64,
    pub records: Vec<StageRecord>,
    pub provenance: Vec<RowProvenance>,
    /// Next function each odd enumerator would try, per table.
    pub cursors: Vec<(usize, FiniteFun)>,
    pub decls: Declarations,
    pub tags: Vec<Vec<WriteTag>>,
    pub events: Vec<Event>,
}

impl Transcript {
    /// Rebuilds the accumulated boards from the records.
    pub fn replay(&self) -> Result<GameState, ProtocolError> {
        let mut st = GameState::new(self.kind.clone(), self.seed)?;
        for rec in &self.records {
            st.submit_alice(&rec.alice)?;
            st.submit_bob(&rec.bob)?;
        }
        Ok(st)
    }

    pub fn alice_moves(&self) -> Vec<AliceMove> {
        self.records.iter().map(|r| r.alice.clone()).collect()
    }
}

/// Drives Alice and Bob through the protocol one stage at a time.
pub struct Runner {
    state: GameState,
    alice: Box<dyn crate::adversaries::Alice>,
    bob: Bob,
    records: Vec<StageRecord>,
}

impl Runner {
    pub fn new(kind: GameKind, spec: &AdversarySpec, seed: u64) -> Result<Self, ProtocolError> {
        let state = GameState::new(kind.clone(), seed)?;
        Ok(Runner {
            state,
            alice: spec.instantiate(seed)?,
            bob: Bob::new(kind)?,
            records: Vec::new(),
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn bob(&self) -> &Bob {
        &self.bob
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn step(&mut self) -> Result<(), ProtocolError> {
        let s = self.state.stage();
        let amv = self.alice.next_move(s, &self.state.a, &self.state.r)?;
        self.state.submit_alice(&amv)?;
        let bmv = self.bob.step(s, &self.state.a, &self.state.r, &amv)?;
        self.state.submit_bob(&bmv)?;
        self.records.push(StageRecord {
            alice: amv,
            bob: bmv,
        });
        Ok(())
    }

    pub fn finish(self) -> Transcript {
        let stages = self.records.len() as u64;
        Transcript {
            kind: self.state.kind.clone(),
            seed: self.state.seed,
            stages,
            records: self.records,
            provenance: self.bob.provenance(),
            cursors: self.bob.cursors(),
            decls: self.alice.declarations().clone(),
            tags: self.bob.tags().to_vec(),
            events: self.bob.events().to_vec(),
        }
    }
}

pub fn run_game(
    kind: GameKind,
    spec: &AdversarySpec,
    stages: u64,
    seed: u64,
) -> Result<Transcript, ProtocolError> {
    run_game_with(kind, spec, stages, seed, |_| Ok(()))
}

/// Like [`run_game`], calling `check` after every stage.
pub fn run_game_with(
    kind: GameKind,
    spec: &AdversarySpec,
    stages: u64,
    seed: u64,
    mut check: impl FnMut(&Runner) -> Result<(), ProtocolError>,
) -> Result<Transcript, ProtocolError> {
    if stages == 0 {
        return Err(ProtocolError::BadParameters("need at least one stage".into()));
    }
    let mut runner = Runner::new(kind, spec, seed)?;
    for _ in 0..stages {
        runner.step()?;
        check(&runner)?;
    }
    Ok(runner.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(table: usize, row: u64, col: u64, val: u64) -> BobWrite {
        BobWrite {
            table,
            row,
            col,
            val,
        }
    }

    #[test]
    fn new_game_states() {
        let st = GameState::new(GameKind::G0, 0).unwrap();
        assert!(st.a.is_empty() && st.out.is_empty());
        let st = GameState::new(GameKind::G4 { max_tables: None }, 7).unwrap();
        assert_eq!(st.out.len(), 0);
        assert_eq!(st.kind().table_count(0), 1);
        let empty = GameKind::Ext {
            beta: BetaSpec::Listed(vec![]),
        };
        assert!(matches!(GameState::new(empty, 0), Err(ProtocolError::BadParameters(_))));
    }

    #[test]
    fn alice_duties_and_turns() {
        let mut st = GameState::new(GameKind::G0, 0).unwrap();
        let mv = AliceMove {
            a: vec![(0, 0, 3)],
            r: vec![],
        };
        st.submit_alice(&mv).unwrap();
        assert_eq!(st.a.get(0, 0), Some(3));
        assert_eq!(
            st.submit_alice(&AliceMove::default()),
            Err(ProtocolError::OutOfTurn("Alice moved twice"))
        );
        st.submit_bob(&BobMove::default()).unwrap();
        let bad = AliceMove {
            a: vec![(0, 0, 4)],
            r: vec![],
        };
        assert!(matches!(
            st.submit_alice(&bad),
            Err(ProtocolError::ConflictingWrite { .. })
        ));
        assert_eq!(st.a.get(0, 0), Some(3));
    }

    #[test]
    fn rejected_moves_are_atomic() {
        let mut st = GameState::new(GameKind::G0, 0).unwrap();
        let mv = AliceMove {
            a: vec![(0, 0, 3), (1, 1, 1), (0, 0, 4)],
            r: vec![],
        };
        assert!(st.submit_alice(&mv).is_err());
        assert!(st.a.is_empty());
    }

    #[test]
    fn bob_shapes() {
        let mut st = GameState::new(GameKind::G1, 0).unwrap();
        st.submit_alice(&AliceMove::default()).unwrap();
        st.submit_bob(&BobMove {
            writes: vec![],
            k_delta: vec![5],
        })
        .unwrap();
        assert!(st.k.contains(5));
        st.submit_alice(&AliceMove::default()).unwrap();
        let shrunk = InvalidationSet::new();
        assert!(matches!(
            st.announce_bob(&[], &shrunk),
            Err(ProtocolError::ShapeMismatch(_))
        ));

        let mut g0 = GameState::new(GameKind::G0, 0).unwrap();
        g0.submit_alice(&AliceMove::default()).unwrap();
        let c_write = BobMove {
            writes: vec![write(1, 0, 0, 0)],
            k_delta: vec![],
        };
        assert!(matches!(g0.submit_bob(&c_write), Err(ProtocolError::ShapeMismatch(_))));

        let mut g4 = GameState::new(GameKind::G4 { max_tables: None }, 0).unwrap();
        for _ in 0..2 {
            g4.submit_alice(&AliceMove::default()).unwrap();
            g4.submit_bob(&BobMove::default()).unwrap();
        }
        g4.submit_alice(&AliceMove::default()).unwrap();
        let b3 = BobMove {
            writes: vec![write(3, 0, 0, 0)],
            k_delta: vec![],
        };
        assert!(matches!(g4.submit_bob(&b3), Err(ProtocolError::ShapeMismatch(_))));
        let b2 = BobMove {
            writes: vec![write(2, 0, 0, 0)],
            k_delta: vec![],
        };
        g4.submit_bob(&b2).unwrap();
    }

    #[test]
    fn kind_text_roundtrip() {
        for s in [
            "g0",
            "g1",
            "g2",
            "g3",
            "g4",
            "g4:tables=4",
            "ext:canonical-odd",
            "ext:listed:0:1;1:0,2:2,3:3",
            "pp65:identity",
            "pp65:const:3",
            "pp65:pattern:0,5+4@1/2",
        ] {
            let k: GameKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("ext".parse::<GameKind>().is_err());
        assert!("ext:listed:0:1;0:1".parse::<GameKind>().is_err());
        assert!("pp65:pattern:1@0/0".parse::<GameKind>().is_err());
    }

    #[test]
    fn f_domain() {
        let f: FSpec = "pattern:0+1@3/4".parse().unwrap();
        assert_eq!(f.next_domain_col(0), 3);
        assert_eq!(f.next_domain_col(4), 7);
        assert_eq!(f.next_domain_col(7), 7);
        assert_eq!(f.value(7), Some(7));
        assert_eq!(f.value(8), None);
        assert_eq!(FSpec::identity().value(9), Some(9));
    }
}
