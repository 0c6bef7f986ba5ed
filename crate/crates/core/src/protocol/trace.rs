//! Line-oriented trace files.
//!
//! ```text
//! numgame-trace 1
//! H <kind> <seed> <stages>
//! S <stage>
//! A <row> <col> <val>        Alice's writes, then R lines
//! B <row> <col> <val>        Bob's writes in order (C, B<k> for other tables)
//! K <row>
//! P <table> <row> <provenance>
//! N <table> <function>       next candidate of an odd enumerator
//! D A|R closed|open
//! LA|LR <row> <limit>
//! E
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::adversaries::{Declarations, LimitDecl};
use crate::referee::RowProvenance;

use super::{AliceMove, BobMove, BobWrite, GameKind, StageRecord, Transcript};

pub const MAGIC: &str = "numgame-trace 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceError {
    pub line: usize,
    pub msg: String,
}

pub fn serialize(t: &Transcript) -> String {
    let mut out = String::new();
    let kind = &t.kind;
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "H {} {} {}", kind, t.seed, t.stages).unwrap();
    for (s, rec) in t.records.iter().enumerate() {
        writeln!(out, "S {s}").unwrap();
        for (r, c, v) in &rec.alice.a {
            writeln!(out, "A {r} {c} {v}").unwrap();
        }
        for (r, c, v) in &rec.alice.r {
            writeln!(out, "R {r} {c} {v}").unwrap();
        }
        for w in &rec.bob.writes {
            writeln!(out, "{} {} {} {}", kind.table_label(w.table), w.row, w.col, w.val).unwrap();
        }
        for k in &rec.bob.k_delta {
            writeln!(out, "K {k}").unwrap();
        }
    }
    for p in &t.provenance {
        writeln!(out, "P {} {} {}", kind.table_label(p.table), p.row, p.kind).unwrap();
    }
    for (table, g) in &t.cursors {
        writeln!(out, "N {} {}", kind.table_label(*table), g).unwrap();
    }
    let closed = |c: bool| if c { "closed" } else { "open" };
    writeln!(out, "D A {}", closed(t.decls.a_closed)).unwrap();
    writeln!(out, "D R {}", closed(t.decls.r_closed)).unwrap();
    for (row, l) in &t.decls.a {
        writeln!(out, "LA {row} {l}").unwrap();
    }
    for (row, l) in &t.decls.r {
        writeln!(out, "LR {row} {l}").unwrap();
    }
    writeln!(out, "E").unwrap();
    out
}

pub fn parse(text: &str) -> Result<Transcript, TraceError> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
    let err = |line: usize, msg: String| TraceError { line, msg };
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, other)) => return Err(err(n, format!("bad magic `{other}`"))),
        None => return Err(err(0, "empty trace".into())),
    }
    let (hn, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let h: Vec<&str> = header.split(' ').collect();
    let (kind, seed, stages) = match h.as_slice() {
        ["H", kind, seed, stages] => (
            kind.parse::<GameKind>().map_err(|e| err(hn, e.to_string()))?,
            seed.parse::<u64>().map_err(|_| err(hn, "bad seed".into()))?,
            stages.parse::<u64>().map_err(|_| err(hn, "bad stage count".into()))?,
        ),
        _ => return Err(err(hn, format!("bad header `{header}`"))),
    };

    let mut t = Transcript {
        kind,
        seed,
        stages,
        records: Vec::new(),
        provenance: Vec::new(),
        cursors: Vec::new(),
        decls: Declarations::default(),
        tags: Vec::new(),
        events: Vec::new(),
    };
    let mut ended = false;
    for (n, line) in lines {
        if ended {
            return Err(err(n, "content after end marker".into()));
        }
        let toks: Vec<&str> = line.split(' ').collect();
        let num = |s: &str| s.parse::<u64>().map_err(|_| err(n, format!("bad number `{s}`")));
        let table = |s: &str| {
            t.kind
                .parse_table_label(s)
                .ok_or_else(|| err(n, format!("unknown table `{s}`")))
        };
        fn cur(t: &mut Transcript, n: usize) -> Result<&mut StageRecord, TraceError> {
            t.records.last_mut().ok_or(TraceError {
                line: n,
                msg: "write before first stage".into(),
            })
        }
        match toks.as_slice() {
            ["S", s] => {
                if num(s)? != t.records.len() as u64 {
                    return Err(err(n, format!("stage {s} out of order")));
                }
                t.records.push(StageRecord {
                    alice: AliceMove::default(),
                    bob: BobMove::default(),
                });
            }
            ["A", r, c, v] => {
                let cell = (num(r)?, num(c)?, num(v)?);
                cur(&mut t, n)?.alice.a.push(cell);
            }
            ["R", r, c, v] => {
                let cell = (num(r)?, num(c)?, num(v)?);
                cur(&mut t, n)?.alice.r.push(cell);
            }
            ["K", r] => {
                let row = num(r)?;
                cur(&mut t, n)?.bob.k_delta.push(row);
            }
            ["P", tab, r, rest @ ..] => {
                let prov = rest.join(" ").parse().map_err(|e| err(n, e))?;
                t.provenance.push(RowProvenance {
                    table: table(tab)?,
                    row: num(r)?,
                    kind: prov,
                });
            }
            ["N", tab, g] => {
                let g = g.parse().map_err(|e: crate::tables::TableError| err(n, e.to_string()))?;
                t.cursors.push((table(tab)?, g));
            }
            ["D", which, state] => {
                let closed = match *state {
                    "closed" => true,
                    "open" => false,
                    _ => return Err(err(n, format!("bad declaration state `{state}`"))),
                };
                match *which {
                    "A" => t.decls.a_closed = closed,
                    "R" => t.decls.r_closed = closed,
                    _ => return Err(err(n, format!("bad board `{which}`"))),
                }
            }
            [which @ ("LA" | "LR"), r, rest @ ..] => {
                let l: LimitDecl = rest.join(" ").parse().map_err(|e| err(n, format!("{e}")))?;
                let map = if *which == "LA" { &mut t.decls.a } else { &mut t.decls.r };
                map.insert(num(r)?, l);
            }
            ["E"] => ended = true,
            [tab, r, c, v] => {
                let w = BobWrite {
                    table: table(tab)?,
                    row: num(r)?,
                    col: num(c)?,
                    val: num(v)?,
                };
                cur(&mut t, n)?.bob.writes.push(w);
            }
            _ => return Err(err(n, format!("unrecognized line `{line}`"))),
        }
    }
    if !ended {
        return Err(err(0, "missing end marker".into()));
    }
    if t.records.len() as u64 != t.stages {
        return Err(err(0, format!("header promises {} stages, found {}", t.stages, t.records.len())));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::AdversarySpec;
    use crate::protocol::run_game;

    #[test]
    fn roundtrip_is_byte_identical() {
        let plain = AdversarySpec::from_arg("random:rows=4,cols=4,writes=2").unwrap();
        let with_r = AdversarySpec::from_arg("random:rows=4,cols=4,writes=2,rwrites=1").unwrap();
        for kind in ["g0", "g1", "g3", "g4:tables=3", "pp65:identity"] {
            let kind: GameKind = kind.parse().unwrap();
            let spec = if kind.has_r() { &with_r } else { &plain };
            let t = run_game(kind.clone(), spec, 12, 3).unwrap();
            let text = serialize(&t);
            let back = parse(&text).unwrap();
            assert_eq!(back.records, t.records);
            assert_eq!(back.provenance, t.provenance);
            assert_eq!(serialize(&back), text, "{kind}");
        }
    }

    #[test]
    fn damaged_traces_are_rejected() {
        let t = run_game("g0".parse().unwrap(), &AdversarySpec::Silent, 3, 0).unwrap();
        let text = serialize(&t);
        assert!(parse(&text.replace("S 1", "S 2")).is_err());
        assert!(parse(text.trim_end_matches("E\n")).is_err());
        assert!(parse(&text.replace("H g0", "H g9")).is_err());
    }
}
