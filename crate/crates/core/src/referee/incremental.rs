//! The indexed referee: one pass over the provenance builds hash indices,
//! each condition is then a lookup per A-row or per candidate pair.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::adversaries::LimitDecl;
use crate::protocol::{GameKind, ProtocolError, Transcript};
use crate::tables::{direct_sum_locate, pair, FiniteFun};

use super::{
    base_conditions, check_faithfulness, equal_pair_status, summarize, uncovered_status, Ctx, Provenance,
    RefereeReport, Status, Verdict, Window,
};

struct Index {
    limits: Vec<BTreeMap<u64, LimitDecl>>,
    by_limit: Vec<HashMap<LimitDecl, Vec<u64>>>,
    mirrors: Vec<HashSet<u64>>,
    consts: Vec<HashMap<u64, u64>>,
}

impl Index {
    fn build(ctx: &Ctx) -> Index {
        let n = ctx.tables();
        let mut ix = Index {
            limits: vec![BTreeMap::new(); n],
            by_limit: vec![HashMap::new(); n],
            mirrors: vec![HashSet::new(); n],
            consts: vec![HashMap::new(); n],
        };
        for t in 0..n {
            for (&row, p) in &ctx.prov[t] {
                if !ctx.is_valid(t, row) {
                    continue;
                }
                match p {
                    Provenance::Mirror(i) => {
                        ix.mirrors[t].insert(*i);
                    }
                    Provenance::Constant(m) => {
                        ix.consts[t].insert(*m, row);
                    }
                    _ => {}
                }
                let lim = ctx.prov_limit(p);
                if lim.is_known() {
                    ix.by_limit[t].entry(lim.clone()).or_default().push(row);
                }
                ix.limits[t].insert(row, lim);
            }
        }
        ix
    }

    fn limit(&self, t: usize, row: u64) -> LimitDecl {
        self.limits
            .get(t)
            .and_then(|m| m.get(&row))
            .cloned()
            .unwrap_or(LimitDecl::Undeclared)
    }
}

/// Runs every applicable condition of the transcript's game.
pub fn referee(t: &Transcript, window: Window) -> Result<RefereeReport, ProtocolError> {
    let ctx = Ctx::replay(t, window)?;
    let ix = Index::build(&ctx);
    let mut verdicts = Vec::new();
    for table in 0..ctx.tables() {
        let (cov, inj) = base_conditions(&t.kind, table);
        verdicts.push(coverage(&ctx, &ix, table, cov));
        verdicts.push(injectivity(&ctx, &ix, table, inj));
    }
    match &t.kind {
        GameKind::G2 => verdicts.extend(diag_g2(&ctx, &ix)),
        GameKind::G3 => {
            verdicts.extend(nonreduction(&ctx, &ix, "5", 1, 0));
            verdicts.extend(nonreduction(&ctx, &ix, "6", 0, 1));
        }
        GameKind::G4 { .. } => {
            for k in 0..ctx.tables() {
                verdicts.extend(nonreduction(&ctx, &ix, "3", k, usize::MAX));
            }
        }
        _ => {}
    }
    verdicts.push(check_faithfulness(&ctx));
    if let GameKind::Pp65 { f } = &t.kind {
        for reading in ["released", "all"] {
            let rows = pp65_rows(&ctx, &ix, reading);
            verdicts.push(pp65_finite_support(&rows, reading));
            verdicts.push(pp65_f_union(&ctx, f, &rows, reading));
        }
    }
    Ok(RefereeReport {
        game: t.kind.name().to_string(),
        stage: ctx.stages(),
        window,
        verdicts,
    })
}

fn coverage(ctx: &Ctx, ix: &Index, table: usize, cond: &str) -> Verdict {
    let label = ctx.label(table);
    let mut pending = Vec::new();
    let mut violated = None;
    for i in 0..ctx.window.rows {
        let lim = ctx.a_limit(i);
        if ix.by_limit[table].contains_key(&lim) {
            continue;
        }
        let excuse = ctx.coverage_excuse(table, i, &lim, |j| ix.mirrors[table].contains(&j));
        match uncovered_status(excuse) {
            Status::Violated => {
                violated = Some(format!("A-row {i} limit `{lim}` has no row in {label}"));
                break;
            }
            _ => pending.push(format!("{i}:{}", excuse.unwrap_or_default())),
        }
    }
    summarize(cond, format!("table={label}"), violated, &pending, "all window A-rows covered")
}

fn injectivity(ctx: &Ctx, ix: &Index, table: usize, cond: &str) -> Verdict {
    let label = ctx.label(table);
    let prov = &ctx.prov[table];
    let mut items: Vec<((u64, u64), Status)> = Vec::new();
    for (&row, lim) in &ix.limits[table] {
        let p = &prov[&row];
        if !ctx.in_injectivity_domain(row, p) {
            continue;
        }
        if !lim.is_known() {
            items.push(((row, row), Status::Pending));
            continue;
        }
        let group = &ix.by_limit[table][lim];
        for &other in group {
            if other <= row || !ctx.in_injectivity_domain(other, &prov[&other]) {
                continue;
            }
            items.push(((row, other), equal_pair_status(ctx, p, &prov[&other])));
        }
    }
    items.sort();
    pair_verdict(cond, &label, &items)
}

/// Shared formatting of injectivity items `((a, b), status)`, where `a == b`
/// marks a row with unknown limit.
pub(crate) fn pair_verdict(cond: &str, label: &str, items: &[((u64, u64), Status)]) -> Verdict {
    let violated = items
        .iter()
        .find(|(_, s)| *s == Status::Violated)
        .map(|((a, b), _)| format!("{label} rows {a} and {b} have equal limits"));
    let pending: Vec<String> = items
        .iter()
        .filter(|(_, s)| *s == Status::Pending)
        .map(|((a, b), _)| if a == b { format!("{a}?") } else { format!("{a}~{b}") })
        .collect();
    summarize(cond, format!("table={label}"), violated, &pending, "window limits pairwise distinct")
}

/// The A-rows or R-rows a totality-guarded condition ranges over: total
/// rows get their own verdict, the rest share one.
pub(crate) fn guarded_rows(decl: impl Fn(u64) -> LimitDecl, rows: u64) -> (Vec<u64>, Vec<u64>) {
    let mut total = Vec::new();
    let mut undeclared = Vec::new();
    for i in 0..rows {
        match decl(i) {
            LimitDecl::Total(_) => total.push(i),
            LimitDecl::Undeclared => undeclared.push(i),
            LimitDecl::Finite(_) => {}
        }
    }
    (total, undeclared)
}

pub(crate) fn rest_verdict(cond: &str, scope: String, undeclared: &[u64]) -> Verdict {
    let pending: Vec<String> = undeclared.iter().map(|i| format!("{i}:undeclared")).collect();
    summarize(cond, scope, None, &pending, "no other total row in window")
}

fn diag_g2(ctx: &Ctx, ix: &Index) -> Vec<Verdict> {
    let (total, undeclared) = guarded_rows(|i| ctx.a_limit(i), ctx.window.rows);
    let mut out = Vec::new();
    for i in total {
        let LimitDecl::Total(p) = ctx.a_limit(i) else { unreachable!() };
        let candidates = std::iter::once(i).chain((0..ctx.window.cols).filter(|&j| j != i));
        let mut witness = None;
        for j in candidates {
            let n = p.value(j);
            if let Some(c) = ix.limit(0, n).first_difference(&ctx.a_limit(j)) {
                witness = Some(format!("j={j} B-row {n} col {c}"));
                break;
            }
        }
        out.push(match witness {
            Some(w) => Verdict::new("3", format!("A-row={i}"), Status::Holds, w),
            None => Verdict::new("3", format!("A-row={i}"), Status::Pending, "no witness in window"),
        });
    }
    out.push(rest_verdict("3", "A-row=rest".into(), &undeclared));
    out
}

/// G3 (`src`, `dst` table indices) or G4 (`dst == usize::MAX`, `src` is k).
fn nonreduction(ctx: &Ctx, ix: &Index, cond: &str, src: usize, dst: usize) -> Vec<Verdict> {
    let g4 = dst == usize::MAX;
    let (total, undeclared) = guarded_rows(|i| ctx.r_limit(i), ctx.window.rows);
    let scope = |i: String| {
        if g4 {
            format!("R-row={i},k={src}")
        } else {
            format!("R-row={i}")
        }
    };
    let mut out = Vec::new();
    for i in total {
        let LimitDecl::Total(p) = ctx.r_limit(i) else { unreachable!() };
        let m = if g4 {
            pair(i, src as u64)
        } else {
            2 * i + u64::from(cond == "6")
        };
        let j0 = ix.consts[src].get(&m).copied();
        let candidates = j0.into_iter().chain((0..ctx.window.rows).filter(|&j| Some(j) != j0));
        let mut witness = None;
        for j in candidates {
            let n = p.value(j);
            let (table, row) = if g4 { direct_sum_locate(n, Some(src as u64)) } else { (dst as u64, n) };
            if table as usize >= ctx.tables() {
                continue;
            }
            let here = ix.limit(table as usize, row);
            if let Some(c) = here.first_difference(&ix.limit(src, j)) {
                witness = Some(format!(
                    "j={j} {}-row {row} col {c}",
                    ctx.label(table as usize)
                ));
                break;
            }
        }
        out.push(match witness {
            Some(w) => Verdict::new(cond, scope(i.to_string()), Status::Holds, w),
            None => Verdict::new(cond, scope(i.to_string()), Status::Pending, "no witness in window"),
        });
    }
    out.push(rest_verdict(cond, scope("rest".into()), &undeclared));
    out
}

/// Rows read as members of ℬ∖𝒜: released rows, or every non-mirror row.
fn pp65_rows(ctx: &Ctx, ix: &Index, reading: &str) -> Vec<(u64, LimitDecl)> {
    ix.limits[0]
        .iter()
        .filter(|(row, _)| {
            let p = &ctx.prov[0][row];
            match reading {
                "released" => matches!(p, Provenance::Released(_)),
                _ => !matches!(p, Provenance::Mirror(_) | Provenance::Pending),
            }
        })
        .filter(|(row, _)| **row < ctx.window.rows || matches!(ctx.prov[0][row], Provenance::Released(_)))
        .map(|(r, l)| (*r, l.clone()))
        .collect()
}

pub(crate) fn pp65_finite_support(rows: &[(u64, LimitDecl)], reading: &str) -> Verdict {
    let mut pending = Vec::new();
    for (row, lim) in rows {
        match lim {
            LimitDecl::Finite(_) => {}
            LimitDecl::Undeclared => pending.push(format!("{row}?")),
            LimitDecl::Total(_) => {
                return Verdict::new(
                    "C2",
                    format!("reading={reading}"),
                    Status::Violated,
                    format!("B-row {row} has infinite support"),
                )
            }
        }
    }
    summarize("C2", format!("reading={reading}"), None, &pending, "every row finite")
}

pub(crate) fn covered_by(g: &FiniteFun, f: &crate::protocol::FSpec, h: &LimitDecl) -> bool {
    g.iter().all(|(c, v)| h.value_at(c) == Some(v) || f.value(c) == Some(v))
}

fn pp65_f_union(ctx: &Ctx, f: &crate::protocol::FSpec, rows: &[(u64, LimitDecl)], reading: &str) -> Verdict {
    let a_limits: Vec<LimitDecl> = (0..ctx.window.rows).map(|i| ctx.a_limit(i)).collect();
    let in_a: HashSet<&LimitDecl> = a_limits.iter().collect();
    let mut pending = Vec::new();
    for (row, lim) in rows {
        let LimitDecl::Finite(g) = lim else {
            pending.push(format!("{row}?"));
            continue;
        };
        if in_a.contains(lim) {
            continue;
        }
        if !a_limits.iter().any(|h| h.is_known() && covered_by(g, f, h)) {
            pending.push(format!("{row}:no h in window"));
        }
    }
    summarize("C3", format!("reading={reading}"), None, &pending, "every row inside f with some A-limit")
}
