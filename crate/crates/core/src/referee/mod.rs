//! Winner-condition checking on a finished transcript.
//!
//! Limit conditions are decided symbolically from declared A/R limits and
//! the strategy's provenance records, then cross-checked against the
//! concrete tables by the faithfulness condition. [`referee`] works from
//! hash indices built while replaying; [`brute_force_referee`] recomputes
//! everything with nested loops and must agree with it verdict for verdict.

mod brute;
mod context;
mod incremental;
mod provenance;

use std::collections::BTreeSet;
use std::fmt;

use crate::adversaries::LimitDecl;
use crate::protocol::{GameKind, ProtocolError, Transcript};
use crate::tables::FiniteFun;

pub use brute::brute_force_referee;
pub use context::{Ctx, Window};
pub use incremental::referee;
pub use provenance::{Provenance, RowProvenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Holds,
    Violated,
    Pending,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "HOLDS",
            Status::Violated => "VIOLATED",
            Status::Pending => "PENDING",
        })
    }
}

/// One condition instance. A violated verdict always names a witness.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Verdict {
    pub cond: String,
    pub scope: String,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    pub fn new(cond: &str, scope: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Verdict {
            cond: cond.to_string(),
            scope: scope.into(),
            status,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefereeReport {
    pub game: String,
    pub stage: u64,
    pub window: Window,
    pub verdicts: Vec<Verdict>,
}

impl RefereeReport {
    pub fn lines(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .map(|v| format!("COND {} {} {} {} {}", self.game, v.cond, v.status, v.scope, v.detail))
            .collect()
    }

    pub fn has_violation(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Violated)
    }

    pub fn verdict_set(&self) -> BTreeSet<Verdict> {
        self.verdicts.iter().cloned().collect()
    }

    pub fn find(&self, cond: &str, scope: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.cond == cond && v.scope == scope)
    }
}

impl fmt::Display for RefereeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# symbolic limits at stage {} window {}", self.stage, self.window)?;
        for line in self.lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Condition labels `(coverage, injectivity)` for output table `t`.
pub(crate) fn base_conditions(kind: &GameKind, t: usize) -> (&'static str, &'static str) {
    match kind {
        GameKind::G3 if t == 1 => ("2", "4"),
        GameKind::G3 => ("1", "3"),
        _ => ("1", "2"),
    }
}

/// Winner conditions of each game, for the catalog.
pub fn catalog() -> Vec<(&'static str, Vec<&'static str>, &'static str)> {
    vec![
        ("g0", vec!["every A-row appears in B", "B is injective"], "none"),
        (
            "g1",
            vec!["every A-row appears in B outside K", "B is injective outside K"],
            "none",
        ),
        (
            "g2",
            vec![
                "every A-row appears in B",
                "B is injective",
                "A(i,.) total => B(A(i,j),.) != A(j,.) for some j",
            ],
            "none",
        ),
        (
            "g3",
            vec![
                "every A-row appears in B",
                "every A-row appears in C",
                "B is injective",
                "C is injective",
                "R(i,.) total => B(R(i,j),.) != C(j,.) for some j",
                "R(i,.) total => C(R(i,j),.) != B(j,.) for some j",
            ],
            "none",
        ),
        (
            "g4",
            vec![
                "every A-row appears in each B^k",
                "each B^k is injective",
                "R(i,.) total => (+)_{l!=k} B^l(R(i,j),.) != B^k(j,.) for some j",
            ],
            "optional table cap (g4:tables=N)",
        ),
        (
            "ext",
            vec!["every A-row appears in B", "B is injective"],
            "class B numbering (canonical-odd | listed:f1;f2;...)",
        ),
        (
            "pp65",
            vec!["every A-row appears in B", "B is injective"],
            "f with infinite domain (identity | const:m | pattern:P@off/stride)",
        ),
    ]
}

/// Verdict for an A-row limit that no provenance row matches.
pub(crate) fn uncovered_status(excuse: Option<&'static str>) -> Status {
    if excuse.is_some() {
        Status::Pending
    } else {
        Status::Violated
    }
}

/// How a pair of distinct rows with equal limits is judged.
pub(crate) fn equal_pair_status(ctx: &Ctx, pa: &Provenance, pb: &Provenance) -> Status {
    match (pa, pb) {
        (Provenance::Mirror(i), Provenance::Mirror(j)) => {
            let view = ctx.view();
            if view.row_fun(*i) == view.row_fun(*j) {
                Status::Violated
            } else {
                Status::Pending
            }
        }
        (Provenance::Mirror(_), Provenance::Constant(_)) | (Provenance::Constant(_), Provenance::Mirror(_)) => {
            Status::Pending
        }
        _ => Status::Violated,
    }
}

pub(crate) fn fmt_list(items: &[String]) -> String {
    const SHOW: usize = 8;
    let mut s = items.iter().take(SHOW).cloned().collect::<Vec<_>>().join(",");
    if items.len() > SHOW {
        s.push_str(&format!(",+{}", items.len() - SHOW));
    }
    s
}

/// Summarizes per-item statuses into one verdict: any violation wins, then
/// pending obligations, else holds.
pub(crate) fn summarize(
    cond: &str,
    scope: String,
    violated: Option<String>,
    pending: &[String],
    holds: &str,
) -> Verdict {
    match violated {
        Some(w) => Verdict::new(cond, scope, Status::Violated, w),
        None if !pending.is_empty() => Verdict::new(cond, scope, Status::Pending, fmt_list(pending)),
        None => Verdict::new(cond, scope, Status::Holds, holds),
    }
}

/// Every concrete cell agrees with its limit object; every written B-row is
/// attributed. `row_prov(t, row)` looks up provenance.
pub fn check_faithfulness(ctx: &Ctx) -> Verdict {
    let fail = |d: String| Verdict::new("F", "all", Status::Violated, d);
    for (name, table, is_a) in [("A", &ctx.a, true), ("R", &ctx.r, false)] {
        for (row, cells) in table.rows() {
            let lim = if is_a { ctx.a_limit(row) } else { ctx.r_limit(row) };
            if let Some(c) = lim.first_inconsistent_cell(cells) {
                return fail(format!("{name} row {row} col {c} disagrees with `{lim}`"));
            }
        }
    }
    let view = ctx.view();
    for t in 0..ctx.tables() {
        let label = ctx.label(t);
        for (row, cells) in ctx.out[t].rows() {
            let Some(p) = ctx.prov[t].get(&row) else {
                return fail(format!("{label} row {row} has no provenance"));
            };
            let exact = |g: &FiniteFun| cells == g.as_map();
            let ok = match p {
                Provenance::Mirror(i) => {
                    let src = view.row_fun(*i);
                    let lim = ctx.mirror_limit(*i);
                    cells.iter().all(|(&c, &v)| src.get(c) == Some(v))
                        && lim.first_inconsistent_cell(cells).is_none()
                }
                Provenance::Constant(m) => cells.values().all(|v| v == m),
                Provenance::Odd(g) | Provenance::Released(g) => exact(g),
                Provenance::Beta(idx) => ctx.beta_member(*idx).is_some_and(exact),
                Provenance::Pending => true,
            };
            if !ok {
                return fail(format!("{label} row {row} does not match `{p}`"));
            }
        }
    }
    Verdict::new("F", "all", Status::Holds, "all rows agree with their limits")
}

/// Desk-scale proxy for "every finite subfunction of a member of 𝒜 has
/// infinitely many extensions in ℬ": at least `n` extensions among `beta`
/// (the first M members).
pub fn check_extension_hypothesis(class_a: &[FiniteFun], beta: &[FiniteFun], n: usize) -> Verdict {
    for (ai, member) in class_a.iter().enumerate() {
        let cells: Vec<(u64, u64)> = member.iter().collect();
        assert!(cells.len() < 20, "member {ai} too large for subset enumeration");
        for mask in 0u32..(1 << cells.len()) {
            let sub: FiniteFun = cells
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &cv)| cv)
                .collect();
            let count = beta.iter().filter(|g| sub.is_subfunction_of(g)).count();
            if count < n {
                return Verdict::new(
                    "H",
                    "extension",
                    Status::Violated,
                    format!("member {ai} subfunction `{sub}` has {count} < {n} extensions in {} members", beta.len()),
                );
            }
        }
    }
    Verdict::new(
        "H",
        "extension",
        Status::Holds,
        format!("proxy N={n} M={} over {} members", beta.len(), class_a.len()),
    )
}

/// Checks `ν(i) = μ(f(i))` as limit objects for `i < rows`.
pub fn check_reducibility_witness(nu: &[LimitDecl], mu: &[LimitDecl], f: &FiniteFun, rows: u64) -> Verdict {
    let mut pending = Vec::new();
    for i in 0..rows.min(nu.len() as u64) {
        let Some(fi) = f.get(i) else {
            return Verdict::new("RED", "f", Status::Violated, format!("f undefined at {i}"));
        };
        let Some(target) = mu.get(fi as usize) else {
            pending.push(format!("{i}->{fi}"));
            continue;
        };
        let src = &nu[i as usize];
        if !src.is_known() || !target.is_known() {
            pending.push(i.to_string());
            continue;
        }
        if let Some(c) = src.first_difference(target) {
            return Verdict::new(
                "RED",
                "f",
                Status::Violated,
                format!("nu({i}) != mu({fi}) at col {c}"),
            );
        }
    }
    summarize("RED", "f".into(), None, &pending, "nu = mu o f on the window")
}

/// Both referees; errors only if the transcript does not replay.
pub fn referee_pair(t: &Transcript, window: Window) -> Result<(RefereeReport, RefereeReport), ProtocolError> {
    Ok((referee(t, window)?, brute_force_referee(t, window)?))
}

#[cfg(test)]
mod tests;
