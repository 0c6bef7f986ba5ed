//! Alice players. Every adversary can report the declared limit of each of
//! its rows, which is what lets the referee decide limit conditions exactly.

mod limit;
mod toy;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::protocol::{AliceMove, Cell};
use crate::tables::{FiniteFun, FiniteTable};

pub use limit::{LimitDecl, Pattern};
pub use toy::{Instr, Machine, ToyProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("inconsistent script: {0}")]
    InconsistentScript(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cannot read adversary file {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Which of Alice's boards a write or declaration refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AliceTable {
    A,
    R,
}

/// Declared limits for the rows of A and R. Rows without an explicit entry
/// take the table default: the empty function for adversaries whose whole
/// play is known, `Undeclared` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarations {
    pub a: BTreeMap<u64, LimitDecl>,
    pub r: BTreeMap<u64, LimitDecl>,
    pub a_closed: bool,
    pub r_closed: bool,
}

impl Default for Declarations {
    fn default() -> Self {
        Declarations {
            a: BTreeMap::new(),
            r: BTreeMap::new(),
            a_closed: true,
            r_closed: true,
        }
    }
}

impl Declarations {
    pub fn open() -> Self {
        Declarations {
            a_closed: false,
            r_closed: false,
            ..Default::default()
        }
    }

    pub fn get(&self, table: AliceTable, row: u64) -> LimitDecl {
        let (map, closed) = match table {
            AliceTable::A => (&self.a, self.a_closed),
            AliceTable::R => (&self.r, self.r_closed),
        };
        match map.get(&row) {
            Some(l) => l.clone(),
            None if closed => LimitDecl::empty(),
            None => LimitDecl::Undeclared,
        }
    }

    pub fn a(&self, row: u64) -> LimitDecl {
        self.get(AliceTable::A, row)
    }

    pub fn r(&self, row: u64) -> LimitDecl {
        self.get(AliceTable::R, row)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedWrite {
    pub stage: u64,
    pub table: AliceTable,
    pub row: u64,
    pub col: u64,
    pub val: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub program: ToyProgram,
    pub limit: LimitDecl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomParams {
    pub rows: u64,
    pub cols: u64,
    pub vals: u64,
    pub writes: u64,
    pub r_rows: u64,
    pub r_cols: u64,
    pub r_vals: u64,
    pub r_writes: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            rows: 8,
            cols: 8,
            vals: 4,
            writes: 2,
            r_rows: 4,
            r_cols: 8,
            r_vals: 16,
            r_writes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversarySpec {
    Silent,
    Scripted {
        writes: Vec<ScriptedWrite>,
        decls: Declarations,
    },
    Enumeration {
        pool: Vec<PoolEntry>,
        cols: u64,
    },
    Random(RandomParams),
    Frozen {
        base: Box<AdversarySpec>,
        stage: u64,
    },
    /// Alice's recorded moves, as read back from a trace.
    Replay {
        moves: Vec<AliceMove>,
        decls: Declarations,
    },
}

/// A live Alice. Deterministic given its `AdversarySpec` and seed.
pub trait Alice {
    fn next_move(
        &mut self,
        stage: u64,
        a: &FiniteTable,
        r: &FiniteTable,
    ) -> Result<AliceMove, AdversaryError>;

    fn declarations(&self) -> &Declarations;
}

impl AdversarySpec {
    pub fn instantiate(&self, seed: u64) -> Result<Box<dyn Alice>, AdversaryError> {
        Ok(match self {
            AdversarySpec::Silent => Box::new(SilentAlice(Declarations::default())),
            AdversarySpec::Scripted { writes, decls } => {
                Box::new(ScriptedAlice::new(writes, decls.clone())?)
            }
            AdversarySpec::Enumeration { pool, cols } => Box::new(EnumerationAlice::new(pool, *cols)),
            AdversarySpec::Random(p) => Box::new(RandomAlice {
                params: p.clone(),
                rng: ChaCha8Rng::seed_from_u64(seed),
                decls: Declarations::open(),
            }),
            AdversarySpec::Frozen { base, stage } => {
                Box::new(FrozenAlice::new(base, *stage, seed)?)
            }
            AdversarySpec::Replay { moves, decls } => Box::new(ReplayAlice {
                moves: moves.clone(),
                decls: decls.clone(),
            }),
        })
    }

    /// Declared limit of an A-row.
    pub fn declared_limit(&self, seed: u64, row: u64) -> Result<LimitDecl, AdversaryError> {
        Ok(self.instantiate(seed)?.declarations().a(row))
    }

    /// Parses a command-line adversary description: `silent`,
    /// `scripted:PATH`, `enum:PATH`, `random[:k=v,...]` or `frozen:STAGE:INNER`.
    pub fn from_arg(arg: &str) -> Result<Self, AdversaryError> {
        let (kind, rest) = arg.split_once(':').unwrap_or((arg, ""));
        match kind {
            "silent" => Ok(AdversarySpec::Silent),
            "scripted" | "enum" => {
                let text = fs::read_to_string(Path::new(rest)).map_err(|e| AdversaryError::Io {
                    path: rest.to_string(),
                    msg: e.to_string(),
                })?;
                Self::parse(&text)
            }
            "random" => parse_random(rest).map(AdversarySpec::Random),
            "frozen" => {
                let (stage, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| AdversaryError::Parse(format!("bad frozen spec `{arg}`")))?;
                let stage = stage
                    .parse()
                    .map_err(|_| AdversaryError::Parse(format!("bad freeze stage `{stage}`")))?;
                Ok(AdversarySpec::Frozen {
                    base: Box::new(Self::from_arg(inner)?),
                    stage,
                })
            }
            other => Err(AdversaryError::Parse(format!("unknown adversary `{other}`"))),
        }
    }

    /// Parses an adversary file (`adversary scripted` or `adversary enumeration`).
    pub fn parse(text: &str) -> Result<Self, AdversaryError> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        match lines.next() {
            Some("adversary scripted") => parse_script(lines),
            Some("adversary enumeration") => parse_pool(lines),
            Some(h) => Err(AdversaryError::Parse(format!("unknown header `{h}`"))),
            None => Err(AdversaryError::Parse("empty adversary file".into())),
        }
    }
}

fn num(tok: &str) -> Result<u64, AdversaryError> {
    tok.parse()
        .map_err(|_| AdversaryError::Parse(format!("expected a natural, got `{tok}`")))
}

fn parse_table(tok: &str) -> Result<AliceTable, AdversaryError> {
    match tok {
        "A" => Ok(AliceTable::A),
        "R" => Ok(AliceTable::R),
        _ => Err(AdversaryError::Parse(format!("unknown Alice table `{tok}`"))),
    }
}

fn parse_script<'a>(lines: impl Iterator<Item = &'a str>) -> Result<AdversarySpec, AdversaryError> {
    let mut writes = Vec::new();
    let mut decls = Declarations::default();
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["W", stage, table, row, col, val] => writes.push(ScriptedWrite {
                stage: num(stage)?,
                table: parse_table(table)?,
                row: num(row)?,
                col: num(col)?,
                val: num(val)?,
            }),
            ["L", rest @ ..] if !rest.is_empty() => {
                let (table, rest) = match rest[0] {
                    "A" | "R" => (parse_table(rest[0])?, &rest[1..]),
                    _ => (AliceTable::A, rest),
                };
                let (row, lim) = rest
                    .split_first()
                    .ok_or_else(|| AdversaryError::Parse(format!("bad limit line `{line}`")))?;
                let lim: LimitDecl = lim.join(" ").parse()?;
                let map = match table {
                    AliceTable::A => &mut decls.a,
                    AliceTable::R => &mut decls.r,
                };
                map.insert(num(row)?, lim);
            }
            _ => return Err(AdversaryError::Parse(format!("bad script line `{line}`"))),
        }
    }
    Ok(AdversarySpec::Scripted { writes, decls })
}

fn parse_pool<'a>(lines: impl Iterator<Item = &'a str>) -> Result<AdversarySpec, AdversaryError> {
    let mut cols = 16;
    let mut pool: Vec<(LimitDecl, Vec<Instr>)> = Vec::new();
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["cols", n] => cols = num(n)?,
            ["program", idx, rest @ ..] => {
                if num(idx)? != pool.len() as u64 {
                    return Err(AdversaryError::Parse(format!(
                        "programs must be numbered consecutively, got `{idx}`"
                    )));
                }
                let limit = match rest {
                    [] => LimitDecl::Undeclared,
                    ["limit", l @ ..] => l.join(" ").parse()?,
                    _ => return Err(AdversaryError::Parse(format!("bad program line `{line}`"))),
                };
                pool.push((limit, Vec::new()));
            }
            _ => {
                let instr: Instr = line.parse()?;
                pool.last_mut()
                    .ok_or_else(|| AdversaryError::Parse("instruction before `program`".into()))?
                    .1
                    .push(instr);
            }
        }
    }
    let pool = pool
        .into_iter()
        .map(|(limit, instrs)| PoolEntry {
            program: ToyProgram::new(instrs),
            limit,
        })
        .collect();
    Ok(AdversarySpec::Enumeration { pool, cols })
}

fn parse_random(params: &str) -> Result<RandomParams, AdversaryError> {
    let mut p = RandomParams::default();
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| AdversaryError::Parse(format!("bad random parameter `{kv}`")))?;
        let v = num(v)?;
        let slot = match k {
            "rows" => &mut p.rows,
            "cols" => &mut p.cols,
            "vals" => &mut p.vals,
            "writes" => &mut p.writes,
            "rrows" => &mut p.r_rows,
            "rcols" => &mut p.r_cols,
            "rvals" => &mut p.r_vals,
            "rwrites" => &mut p.r_writes,
            _ => return Err(AdversaryError::Parse(format!("unknown random parameter `{k}`"))),
        };
        *slot = v;
    }
    if p.rows == 0 || p.cols == 0 || p.vals == 0 || p.r_rows == 0 || p.r_cols == 0 || p.r_vals == 0
    {
        return Err(AdversaryError::Parse("random bounds must be positive".into()));
    }
    Ok(p)
}

struct SilentAlice(Declarations);

impl Alice for SilentAlice {
    fn next_move(&mut self, _: u64, _: &FiniteTable, _: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        Ok(AliceMove::default())
    }

    fn declarations(&self) -> &Declarations {
        &self.0
    }
}

struct ScriptedAlice {
    schedule: BTreeMap<u64, Vec<(AliceTable, Cell)>>,
    scripted_cells: BTreeSet<(AliceTable, u64, u64)>,
    total_rows: Vec<(AliceTable, u64, Pattern)>,
    decls: Declarations,
}

impl ScriptedAlice {
    fn new(writes: &[ScriptedWrite], mut decls: Declarations) -> Result<Self, AdversaryError> {
        // a written row without an `L` line converges to the union of its writes
        let mut implied: BTreeMap<(AliceTable, u64), FiniteFun> = BTreeMap::new();
        for w in writes {
            let map = match w.table {
                AliceTable::A => &decls.a,
                AliceTable::R => &decls.r,
            };
            if !map.contains_key(&w.row) {
                let g = implied.entry((w.table, w.row)).or_default();
                if g.get(w.col).is_none() {
                    g.insert(w.col, w.val);
                }
            }
        }
        for ((table, row), g) in implied {
            let map = match table {
                AliceTable::A => &mut decls.a,
                AliceTable::R => &mut decls.r,
            };
            map.insert(row, LimitDecl::Finite(g));
        }
        let mut schedule: BTreeMap<u64, Vec<(AliceTable, Cell)>> = BTreeMap::new();
        let mut cells: BTreeMap<(AliceTable, u64, u64), (u64, u64)> = BTreeMap::new();
        for w in writes {
            let key = (w.table, w.row, w.col);
            match cells.get(&key) {
                Some(&(v, _)) if v != w.val => {
                    return Err(AdversaryError::InconsistentScript(format!(
                        "cell {:?} ({},{}) written with {} and {}",
                        w.table, w.row, w.col, v, w.val
                    )))
                }
                Some(&(_, s)) if s <= w.stage => continue,
                _ => {}
            }
            let lim = decls.get(w.table, w.row);
            if lim.is_known() && lim.value_at(w.col) != Some(w.val) {
                return Err(AdversaryError::InconsistentScript(format!(
                    "write {:?} ({},{})={} disagrees with declared limit `{lim}`",
                    w.table, w.row, w.col, w.val
                )));
            }
            cells.insert(key, (w.val, w.stage));
        }
        let mut total_rows = Vec::new();
        for (table, map) in [(AliceTable::A, &decls.a), (AliceTable::R, &decls.r)] {
            for (&row, lim) in map {
                match lim {
                    LimitDecl::Finite(g) => {
                        for (c, v) in g.iter() {
                            cells.entry((table, row, c)).or_insert((v, 0));
                        }
                    }
                    LimitDecl::Total(p) => total_rows.push((table, row, p.clone())),
                    LimitDecl::Undeclared => {}
                }
            }
        }
        for (&(table, row, col), &(val, stage)) in &cells {
            schedule.entry(stage).or_default().push((table, (row, col, val)));
        }
        Ok(ScriptedAlice {
            schedule,
            scripted_cells: cells.keys().copied().collect(),
            total_rows,
            decls,
        })
    }
}

impl Alice for ScriptedAlice {
    fn next_move(&mut self, stage: u64, a: &FiniteTable, r: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        let mut mv = AliceMove::default();
        let mut push = |table: AliceTable, cell: Cell| {
            let (t, out) = match table {
                AliceTable::A => (a, &mut mv.a),
                AliceTable::R => (r, &mut mv.r),
            };
            if t.get(cell.0, cell.1).is_none() {
                out.push(cell);
            }
        };
        if let Some(ws) = self.schedule.get(&stage) {
            for &(table, cell) in ws {
                push(table, cell);
            }
        }
        // total rows grow one column per stage
        for (table, row, p) in &self.total_rows {
            if !self.scripted_cells.contains(&(*table, *row, stage)) {
                push(*table, (*row, stage, p.value(stage)));
            }
        }
        Ok(mv)
    }

    fn declarations(&self) -> &Declarations {
        &self.decls
    }
}

struct EnumerationAlice {
    pool: Vec<PoolEntry>,
    cols: u64,
    machines: Vec<Vec<Machine>>,
    emitted: Vec<Vec<bool>>,
    decls: Declarations,
}

impl EnumerationAlice {
    fn new(pool: &[PoolEntry], cols: u64) -> Self {
        let mut decls = Declarations::default();
        for (i, e) in pool.iter().enumerate() {
            decls.a.insert(i as u64, e.limit.clone());
        }
        EnumerationAlice {
            machines: pool.iter().map(|_| Vec::new()).collect(),
            emitted: pool.iter().map(|_| Vec::new()).collect(),
            pool: pool.to_vec(),
            cols,
            decls,
        }
    }
}

impl Alice for EnumerationAlice {
    fn next_move(&mut self, stage: u64, _: &FiniteTable, _: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        let mut mv = AliceMove::default();
        let width = (stage + 1).min(self.cols);
        for (i, entry) in self.pool.iter().enumerate() {
            let machines = &mut self.machines[i];
            let emitted = &mut self.emitted[i];
            while (machines.len() as u64) < width {
                machines.push(entry.program.start(machines.len() as u64));
                emitted.push(false);
            }
            for x in 0..width as usize {
                if emitted[x] {
                    continue;
                }
                machines[x].advance(&entry.program, stage);
                if let Some(out) = machines[x].output() {
                    emitted[x] = true;
                    mv.a.push((i as u64, x as u64, out));
                }
            }
        }
        Ok(mv)
    }

    fn declarations(&self) -> &Declarations {
        &self.decls
    }
}

struct RandomAlice {
    params: RandomParams,
    rng: ChaCha8Rng,
    decls: Declarations,
}

impl Alice for RandomAlice {
    fn next_move(&mut self, _: u64, a: &FiniteTable, r: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        let p = &self.params;
        let mut mv = AliceMove::default();
        let mut chosen = BTreeSet::new();
        for _ in 0..p.writes {
            let (row, col) = (self.rng.random_range(0..p.rows), self.rng.random_range(0..p.cols));
            let val = self.rng.random_range(0..p.vals);
            if a.get(row, col).is_none() && chosen.insert((row, col)) {
                mv.a.push((row, col, val));
            }
        }
        chosen.clear();
        for _ in 0..p.r_writes {
            let (row, col) = (self.rng.random_range(0..p.r_rows), self.rng.random_range(0..p.r_cols));
            let val = self.rng.random_range(0..p.r_vals);
            if r.get(row, col).is_none() && chosen.insert((row, col)) {
                mv.r.push((row, col, val));
            }
        }
        Ok(mv)
    }

    fn declarations(&self) -> &Declarations {
        &self.decls
    }
}

/// Plays `base` before the freeze stage and nothing afterwards, so every row
/// is declared finite with the content written before the freeze.
struct FrozenAlice {
    base: Box<dyn Alice>,
    stage: u64,
    decls: Declarations,
}

impl FrozenAlice {
    fn new(base: &AdversarySpec, stage: u64, seed: u64) -> Result<Self, AdversaryError> {
        let mut probe = base.instantiate(seed)?;
        let (mut a, mut r) = (FiniteTable::new(), FiniteTable::new());
        for s in 0..stage {
            let mv = probe.next_move(s, &a, &r)?;
            for &(row, col, val) in &mv.a {
                a.set_cell(row, col, val)
                    .map_err(|e| AdversaryError::InconsistentScript(e.to_string()))?;
            }
            for &(row, col, val) in &mv.r {
                r.set_cell(row, col, val)
                    .map_err(|e| AdversaryError::InconsistentScript(e.to_string()))?;
            }
        }
        let mut decls = Declarations::default();
        for (row, _) in a.rows() {
            decls.a.insert(row, LimitDecl::Finite(a.row_fun(row)));
        }
        for (row, _) in r.rows() {
            decls.r.insert(row, LimitDecl::Finite(r.row_fun(row)));
        }
        Ok(FrozenAlice {
            base: base.instantiate(seed)?,
            stage,
            decls,
        })
    }
}

impl Alice for FrozenAlice {
    fn next_move(&mut self, stage: u64, a: &FiniteTable, r: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        if stage < self.stage {
            self.base.next_move(stage, a, r)
        } else {
            Ok(AliceMove::default())
        }
    }

    fn declarations(&self) -> &Declarations {
        &self.decls
    }
}

struct ReplayAlice {
    moves: Vec<AliceMove>,
    decls: Declarations,
}

impl Alice for ReplayAlice {
    fn next_move(&mut self, stage: u64, _: &FiniteTable, _: &FiniteTable) -> Result<AliceMove, AdversaryError> {
        Ok(self.moves.get(stage as usize).cloned().unwrap_or_default())
    }

    fn declarations(&self) -> &Declarations {
        &self.decls
    }
}
