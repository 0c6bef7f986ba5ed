//! The oracle referee: no indices, every lookup is a scan of the
//! transcript's provenance list and every pair is visited explicitly.

use crate::adversaries::LimitDecl;
use crate::protocol::{FSpec, GameKind, ProtocolError, Transcript};
use crate::tables::{direct_sum_row_index, pair};

use super::incremental::{covered_by, guarded_rows, pair_verdict, pp65_finite_support, rest_verdict};
use super::{
    base_conditions, check_faithfulness, equal_pair_status, summarize, uncovered_status, Ctx, Provenance,
    RefereeReport, Status, Verdict, Window,
};

struct Entry<'a> {
    table: usize,
    row: u64,
    kind: &'a Provenance,
    limit: LimitDecl,
}

fn entries<'a>(ctx: &Ctx, t: &'a Transcript) -> Vec<Entry<'a>> {
    t.provenance
        .iter()
        .filter(|p| ctx.is_valid(p.table, p.row))
        .map(|p| Entry {
            table: p.table,
            row: p.row,
            kind: &p.kind,
            limit: ctx.prov_limit(&p.kind),
        })
        .collect()
}

fn lookup(es: &[Entry], table: usize, row: u64) -> LimitDecl {
    es.iter()
        .find(|e| e.table == table && e.row == row)
        .map_or(LimitDecl::Undeclared, |e| e.limit.clone())
}

pub fn brute_force_referee(t: &Transcript, window: Window) -> Result<RefereeReport, ProtocolError> {
    let ctx = Ctx::replay(t, window)?;
    let es = entries(&ctx, t);
    let mut verdicts = Vec::new();
    for table in 0..ctx.tables() {
        let (cov, inj) = base_conditions(&t.kind, table);
        verdicts.push(coverage(&ctx, &es, table, cov));
        verdicts.push(injectivity(&ctx, &es, table, inj));
    }
    match &t.kind {
        GameKind::G2 => verdicts.extend(diag_g2(&ctx, &es)),
        GameKind::G3 => {
            verdicts.extend(nonreduction_g3(&ctx, &es, "5", 1, 0));
            verdicts.extend(nonreduction_g3(&ctx, &es, "6", 0, 1));
        }
        GameKind::G4 { .. } => {
            for k in 0..ctx.tables() {
                verdicts.extend(nonreduction_g4(&ctx, &es, k));
            }
        }
        _ => {}
    }
    verdicts.push(check_faithfulness(&ctx));
    if let GameKind::Pp65 { f } = &t.kind {
        for reading in ["released", "all"] {
            let rows: Vec<(u64, LimitDecl)> = es
                .iter()
                .filter(|e| e.table == 0)
                .filter(|e| match reading {
                    "released" => matches!(e.kind, Provenance::Released(_)),
                    _ => !matches!(e.kind, Provenance::Mirror(_) | Provenance::Pending),
                })
                .filter(|e| e.row < window.rows || matches!(e.kind, Provenance::Released(_)))
                .map(|e| (e.row, e.limit.clone()))
                .collect();
            let mut rows = rows;
            rows.sort_by_key(|(r, _)| *r);
            verdicts.push(pp65_finite_support(&rows, reading));
            verdicts.push(f_union(&ctx, f, &rows, reading));
        }
    }
    Ok(RefereeReport {
        game: t.kind.name().to_string(),
        stage: ctx.stages(),
        window,
        verdicts,
    })
}

fn coverage(ctx: &Ctx, es: &[Entry], table: usize, cond: &str) -> Verdict {
    let label = ctx.label(table);
    let mut pending = Vec::new();
    let mut violated = None;
    for i in 0..ctx.window.rows {
        let lim = ctx.a_limit(i);
        let mut covered = false;
        for e in es {
            if e.table == table && e.limit.is_known() && e.limit == lim {
                covered = true;
            }
        }
        if covered {
            continue;
        }
        let has_mirror = |j: u64| {
            es.iter()
                .any(|e| e.table == table && *e.kind == Provenance::Mirror(j))
        };
        let excuse = ctx.coverage_excuse(table, i, &lim, has_mirror);
        if uncovered_status(excuse) == Status::Violated {
            violated = Some(format!("A-row {i} limit `{lim}` has no row in {label}"));
            break;
        }
        pending.push(format!("{i}:{}", excuse.unwrap_or_default()));
    }
    summarize(cond, format!("table={label}"), violated, &pending, "all window A-rows covered")
}

fn injectivity(ctx: &Ctx, es: &[Entry], table: usize, cond: &str) -> Verdict {
    let label = ctx.label(table);
    let dom: Vec<&Entry> = es
        .iter()
        .filter(|e| e.table == table && ctx.in_injectivity_domain(e.row, e.kind))
        .collect();
    let mut items = Vec::new();
    for x in &dom {
        if !x.limit.is_known() {
            items.push(((x.row, x.row), Status::Pending));
            continue;
        }
        for y in &dom {
            if y.row > x.row && y.limit.is_known() && x.limit == y.limit {
                items.push(((x.row, y.row), equal_pair_status(ctx, x.kind, y.kind)));
            }
        }
    }
    items.sort();
    pair_verdict(cond, &label, &items)
}

fn diag_g2(ctx: &Ctx, es: &[Entry]) -> Vec<Verdict> {
    let (total, undeclared) = guarded_rows(|i| ctx.a_limit(i), ctx.window.rows);
    let mut out = Vec::new();
    for i in total {
        let row_i = ctx.a_limit(i);
        let mut order = vec![i];
        order.extend((0..ctx.window.cols).filter(|&j| j != i));
        let mut found = None;
        for j in order {
            let n = row_i.value_at(j).expect("total row");
            let b = lookup(es, 0, n);
            let a = ctx.a_limit(j);
            if !b.is_known() || !a.is_known() || b == a {
                continue;
            }
            let c = first_diff_naive(&b, &a);
            found = Some(format!("j={j} B-row {n} col {c}"));
            break;
        }
        let status = if found.is_some() { Status::Holds } else { Status::Pending };
        out.push(Verdict::new(
            "3",
            format!("A-row={i}"),
            status,
            found.unwrap_or_else(|| "no witness in window".into()),
        ));
    }
    out.push(rest_verdict("3", "A-row=rest".into(), &undeclared));
    out
}

/// Least differing column of two known, unequal limits, by stepping
/// columns until one is found.
fn first_diff_naive(x: &LimitDecl, y: &LimitDecl) -> u64 {
    (0..).find(|&c| x.value_at(c) != y.value_at(c)).unwrap()
}

fn const_row(es: &[Entry], table: usize, m: u64) -> Option<u64> {
    es.iter()
        .find(|e| e.table == table && *e.kind == Provenance::Constant(m))
        .map(|e| e.row)
}

fn nonreduction_g3(ctx: &Ctx, es: &[Entry], cond: &str, src: usize, dst: usize) -> Vec<Verdict> {
    let (total, undeclared) = guarded_rows(|i| ctx.r_limit(i), ctx.window.rows);
    let mut out = Vec::new();
    for i in total {
        let r = ctx.r_limit(i);
        let m = if cond == "5" { 2 * i } else { 2 * i + 1 };
        let j0 = const_row(es, src, m);
        let mut order: Vec<u64> = j0.into_iter().collect();
        order.extend((0..ctx.window.rows).filter(|&j| Some(j) != j0));
        let mut found = None;
        for j in order {
            let n = r.value_at(j).expect("total row");
            let x = lookup(es, dst, n);
            let y = lookup(es, src, j);
            if x.is_known() && y.is_known() && x != y {
                found = Some(format!("j={j} {}-row {n} col {}", ctx.label(dst), first_diff_naive(&x, &y)));
                break;
            }
        }
        out.push(witness_verdict(cond, format!("R-row={i}"), found));
    }
    out.push(rest_verdict(cond, "R-row=rest".into(), &undeclared));
    out
}

fn nonreduction_g4(ctx: &Ctx, es: &[Entry], k: usize) -> Vec<Verdict> {
    let (total, undeclared) = guarded_rows(|i| ctx.r_limit(i), ctx.window.rows);
    let mut out = Vec::new();
    for i in total {
        let r = ctx.r_limit(i);
        let j0 = const_row(es, k, pair(i, k as u64));
        let mut order: Vec<u64> = j0.into_iter().collect();
        order.extend((0..ctx.window.rows).filter(|&j| Some(j) != j0));
        let mut found = None;
        'cand: for j in order {
            let n = r.value_at(j).expect("total row");
            for l in 0..=n + 1 {
                for m in 0..=n {
                    if direct_sum_row_index(l, m, Some(k as u64)) != Ok(n) {
                        continue;
                    }
                    if l as usize >= ctx.tables() {
                        continue 'cand;
                    }
                    let x = lookup(es, l as usize, m);
                    let y = lookup(es, k, j);
                    if x.is_known() && y.is_known() && x != y {
                        found = Some(format!(
                            "j={j} {}-row {m} col {}",
                            ctx.label(l as usize),
                            first_diff_naive(&x, &y)
                        ));
                        break 'cand;
                    }
                    continue 'cand;
                }
            }
        }
        out.push(witness_verdict("3", format!("R-row={i},k={k}"), found));
    }
    out.push(rest_verdict("3", format!("R-row=rest,k={k}"), &undeclared));
    out
}

fn witness_verdict(cond: &str, scope: String, found: Option<String>) -> Verdict {
    match found {
        Some(w) => Verdict::new(cond, scope, Status::Holds, w),
        None => Verdict::new(cond, scope, Status::Pending, "no witness in window"),
    }
}

fn f_union(ctx: &Ctx, f: &FSpec, rows: &[(u64, LimitDecl)], reading: &str) -> Verdict {
    let mut pending = Vec::new();
    for (row, lim) in rows {
        let LimitDecl::Finite(g) = lim else {
            pending.push(format!("{row}?"));
            continue;
        };
        let mut in_a = false;
        let mut witnessed = false;
        for i in 0..ctx.window.rows {
            let h = ctx.a_limit(i);
            if h == *lim {
                in_a = true;
            }
            if h.is_known() && covered_by(g, f, &h) {
                witnessed = true;
            }
        }
        if !in_a && !witnessed {
            pending.push(format!("{row}:no h in window"));
        }
    }
    summarize("C3", format!("reading={reading}"), None, &pending, "every row inside f with some A-limit")
}
