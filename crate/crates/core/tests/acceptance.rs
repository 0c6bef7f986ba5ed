//! Acceptance gate: prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::process::Command;
use std::time::Instant;

use numgame::adversaries::LimitDecl;
use numgame::cli::{check_ext_config, play, HYPOTHESIS_M, HYPOTHESIS_N};
use numgame::protocol::{trace, Transcript};
use numgame::referee::{check_extension_hypothesis, referee, referee_pair, Ctx, Provenance, RefereeReport};
use numgame::strategies::{Actor, Event, Instruction, OddEnumeration, Purpose};
use numgame::{run_game_with, AdversarySpec, FiniteFun, FiniteTable, GameKind, ProtocolError, Status, Window};

/// A scenario run: everything needed to re-run and verify it.
struct Run {
    name: &'static str,
    game: &'static str,
    adversary: String,
    stages: u64,
    seed: u64,
    window: Window,
    t: Transcript,
    report: RefereeReport,
}

type Outcome = Result<String, String>;

fn scenario(name: &str) -> String {
    format!("{}/tests/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(name: &'static str, game: &'static str, adversary: String, stages: u64, window: Window) -> Result<Run, String> {
    let kind: GameKind = game.parse().map_err(|e| format!("{e}"))?;
    let spec = AdversarySpec::from_arg(&adversary).map_err(|e| format!("{e}"))?;
    let seed = 1;
    check_ext_config(&kind, &spec, seed)?;
    let t = play(kind, &spec, stages, seed).map_err(|e| format!("{name}: {e}"))?;
    let report = referee(&t, window).map_err(|e| e.to_string())?;
    Ok(Run {
        report,
        name,
        game,
        adversary,
        stages,
        seed,
        window,
        t,
    })
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Every verdict of `cond` holds (all scopes).
fn all_hold(r: &Run, conds: &[&str]) -> Result<(), String> {
    for v in &r.report.verdicts {
        if conds.contains(&v.cond.as_str()) && v.status != Status::Holds {
            return Err(format!("{}: cond {} {} is {} ({})", r.name, v.cond, v.scope, v.status, v.detail));
        }
    }
    Ok(())
}

fn verdict_status(r: &Run, cond: &str, scope: &str) -> Result<(Status, String), String> {
    let v = r
        .report
        .find(cond, scope)
        .ok_or_else(|| format!("{}: no verdict {cond} {scope}", r.name))?;
    Ok((v.status, v.detail.clone()))
}

/// Valid provenance rows of `table` with their limits.
fn limits(r: &Run, table: usize) -> Result<Vec<(u64, Provenance, LimitDecl)>, String> {
    let ctx = Ctx::replay(&r.t, r.window).map_err(|e| e.to_string())?;
    Ok(r.t
        .provenance
        .iter()
        .filter(|p| p.table == table && ctx.is_valid(table, p.row))
        .map(|p| (p.row, p.kind.clone(), ctx.prov_limit(&p.kind)))
        .collect())
}

fn criterion_1(runs: &mut Vec<Run>) -> Outcome {
    let r = run(
        "dup",
        "g0",
        format!("frozen:5:scripted:{}", scenario("dup.adv")),
        200,
        Window { rows: 64, cols: 16 },
    )?;
    all_hold(&r, &["1", "2", "F"])?;
    let rows = limits(&r, 0)?;
    let seven = LimitDecl::Finite("0:7".parse().unwrap());
    let n_seven = rows.iter().filter(|(_, _, l)| *l == seven).count();
    let n_empty_mirror = rows
        .iter()
        .filter(|(_, p, l)| matches!(p, Provenance::Mirror(_)) && *l == LimitDecl::empty())
        .count();
    ensure(n_seven == 1, || format!("{n_seven} rows limit to {{0:7}}"))?;
    ensure(n_empty_mirror == 1, || format!("{n_empty_mirror} mirrors of the empty function"))?;
    runs.push(r);
    Ok("one {0:7} row, one empty mirror, conditions 1, 2, F hold".into())
}

fn criterion_2(runs: &mut Vec<Run>) -> Outcome {
    let r = run(
        "pool",
        "g0",
        format!("enum:{}", scenario("pool.adv")),
        500,
        Window::default(),
    )?;
    let (fast, brute) = referee_pair(&r.t, r.window).map_err(|e| e.to_string())?;
    ensure(fast.verdict_set() == brute.verdict_set(), || "referees disagree".into())?;
    all_hold(&r, &["2"])?;
    // programs 0 and 4 compute the identity
    let mirrors: Vec<u64> = limits(&r, 0)?
        .iter()
        .filter_map(|(_, p, _)| match p {
            Provenance::Mirror(i) if *i == 0 || *i == 4 => Some(*i),
            _ => None,
        })
        .collect();
    ensure(mirrors.len() == 1, || format!("mirrors of rows 0/4: {mirrors:?}"))?;
    let loser = if mirrors[0] == 0 { 4 } else { 0 };
    let stages: BTreeSet<u64> = r
        .t
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Oddified {
                stage,
                actor: Actor::Main { table: 0, index },
                ..
            } if *index == loser => Some(*stage),
            _ => None,
        })
        .collect();
    let missing: Vec<u64> = (400..500).filter(|s| !stages.contains(s)).collect();
    ensure(missing.is_empty(), || format!("assistant {loser} idle at stages {missing:?}"))?;
    runs.push(r);
    Ok(format!("referees agree, mirror of row {}, assistant {loser} odd-ifies every final stage", mirrors[0]))
}

fn diag_witness(r: &Run) -> Result<String, String> {
    let (status, detail) = verdict_status(r, "3", "A-row=3")?;
    ensure(status == Status::Holds, || format!("{}: condition 3 for A-row 3 is {status}: {detail}", r.name))?;
    // re-derive the witness from the tables
    let j: u64 = detail
        .strip_prefix("j=")
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("unparsable witness `{detail}`"))?;
    let ctx = Ctx::replay(&r.t, r.window).map_err(|e| e.to_string())?;
    let n = ctx.a.get(3, j).ok_or_else(|| format!("A(3,{j}) unfilled"))?;
    let b_lim = ctx
        .prov[0]
        .get(&n)
        .map(|p| ctx.prov_limit(p))
        .ok_or_else(|| format!("B-row {n} has no provenance"))?;
    let a_lim = ctx.a_limit(j);
    ensure(b_lim.is_known() && a_lim.is_known() && b_lim != a_lim, || {
        format!("B-row {n} `{b_lim}` vs A-row {j} `{a_lim}`")
    })?;
    Ok(detail)
}

fn diag_fired(r: &Run) -> usize {
    r.t.events
        .iter()
        .filter(|e| matches!(e, Event::Fired { instruction: Instruction::Diagonal(3), .. }))
        .count()
}

fn criterion_3(runs: &mut Vec<Run>) -> Outcome {
    // constant 4 as stated; constant 13 makes A(3,3) hit assistant 3's reserved row
    let lit = run("diag4", "g2", format!("scripted:{}", scenario("diag4.adv")), 300, Window::default())?;
    let lit_detail = diag_witness(&lit)?;
    let lit_fired = diag_fired(&lit);
    ensure(lit_fired <= 1, || format!("diag4: diagonal for 3 fired {lit_fired} times"))?;
    let r = run("diag", "g2", format!("scripted:{}", scenario("diag.adv")), 300, Window::default())?;
    let detail = diag_witness(&r)?;
    let fired = diag_fired(&r);
    ensure(fired == 1, || format!("diag: diagonal for 3 fired {fired} times"))?;
    runs.push(lit);
    runs.push(r);
    Ok(format!(
        "const 4: witness {lit_detail}, fired {lit_fired}; const 13: witness {detail}, fired once"
    ))
}

fn criterion_4(runs: &mut Vec<Run>) -> Outcome {
    let r = run("cross", "g3", format!("scripted:{}", scenario("cross.adv")), 300, Window::default())?;
    all_hold(&r, &["1", "2", "3", "4"])?;
    let mut details = Vec::new();
    let (b, c) = (limits(&r, 0)?, limits(&r, 1)?);
    let const_row = |rows: &[(u64, Provenance, LimitDecl)], m: u64| {
        rows.iter()
            .filter(|(_, p, _)| *p == Provenance::Constant(m))
            .map(|(row, _, _)| *row)
            .collect::<Vec<_>>()
    };
    for m in 0..=10 {
        for (label, rows) in [("B", &b), ("C", &c)] {
            let n = const_row(rows, m).len();
            ensure(n == 1, || format!("constant {m} appears {n} times in {label}"))?;
        }
    }
    let ctx = Ctx::replay(&r.t, r.window).map_err(|e| e.to_string())?;
    // R-row 0 total: the dst row at R(0, c) is not the constant of the src row c
    for (cond, src, dst, m) in [("5", &c, &b, 0), ("6", &b, &c, 1)] {
        let (status, detail) = verdict_status(&r, cond, "R-row=0")?;
        ensure(status == Status::Holds, || format!("condition {cond} is {status}: {detail}"))?;
        let col = const_row(src, m)[0];
        let n = ctx.r_limit(0).value_at(col).ok_or("R-row 0 not total")?;
        let dst_lim = dst
            .iter()
            .find(|(row, _, _)| *row == n)
            .map(|(_, _, l)| l.clone())
            .unwrap_or(LimitDecl::Undeclared);
        ensure(dst_lim.is_known() && dst_lim != LimitDecl::constant(m), || {
            format!("condition {cond}: dst row {n} is `{dst_lim}`")
        })?;
        details.push(format!("{cond}: {detail}"));
    }
    runs.push(r);
    Ok(format!("conditions 1-4 hold, {}, constants 0..=10 once per table", details.join("; ")))
}

fn criterion_5(runs: &mut Vec<Run>) -> Outcome {
    let kind: GameKind = "g4:tables=4".parse().map_err(|e| format!("{e}"))?;
    let adversary = format!("scripted:{}", scenario("sum.adv"));
    let spec = AdversarySpec::from_arg(&adversary).map_err(|e| format!("{e}"))?;
    let t = run_game_with(kind, &spec, 400, 1, |runner| {
        let s = runner.state().stage() - 1;
        let want = (s as usize + 1).min(4);
        let bob = runner.bob();
        if bob.table(want - 1).is_none() || bob.table(want).is_some() {
            return Err(ProtocolError::BadParameters(format!("stage {s}: want {want} tables")));
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let report = referee(&t, Window::default()).map_err(|e| e.to_string())?;
    let r = Run {
        report,
        name: "sum",
        game: "g4:tables=4",
        adversary,
        stages: 400,
        seed: 1,
        window: Window::default(),
        t,
    };
    all_hold(&r, &["1", "2"])?;
    let mut n = 0;
    for i in 0..2 {
        for k in 0..4 {
            let (status, detail) = verdict_status(&r, "3", &format!("R-row={i},k={k}"))?;
            ensure(status == Status::Holds, || format!("condition 3 (i={i},k={k}) is {status}: {detail}"))?;
            n += 1;
        }
    }
    runs.push(r);
    Ok(format!("{n} (i,k) witnesses, conditions 1-2 hold on 4 tables, shape s+1 capped at 4"))
}

fn criterion_6(runs: &mut Vec<Run>) -> Outcome {
    let r = run("even", "ext:canonical-odd", format!("scripted:{}", scenario("even.adv")), 300, Window::default())?;
    let class_a: Vec<FiniteFun> = r
        .t
        .decls
        .a
        .values()
        .filter_map(|l| match l {
            LimitDecl::Finite(g) => Some(g.clone()),
            _ => None,
        })
        .collect();
    ensure(class_a.len() == 6 && class_a.iter().all(|g| !g.is_odd()), || {
        format!("class A is {class_a:?}")
    })?;
    let mut e = OddEnumeration::new();
    let beta: Vec<FiniteFun> = (0..HYPOTHESIS_M).map(|i| e.get(i).clone()).collect();
    let h = check_extension_hypothesis(&class_a, &beta, HYPOTHESIS_N);
    ensure(h.status == Status::Holds, || h.detail.clone())?;
    all_hold(&r, &["1", "2", "F"])?;
    let mut uses: BTreeMap<u64, usize> = BTreeMap::new();
    for (_, p, _) in limits(&r, 0)? {
        if let Provenance::Beta(idx) = p {
            *uses.entry(idx).or_default() += 1;
        }
    }
    let placed: BTreeSet<u64> = r
        .t
        .events
        .iter()
        .filter_map(|e| match e {
            Event::BetaFilled { index, .. } => Some(*index),
            _ => None,
        })
        .collect();
    ensure(!uses.is_empty(), || "no class B member placed".into())?;
    ensure(uses.values().all(|&n| n == 1), || format!("member uses {uses:?}"))?;
    ensure(placed.iter().all(|i| uses.contains_key(i)), || "a placed member has no row".into())?;
    runs.push(r);
    Ok(format!("hypothesis N={HYPOTHESIS_N} M={HYPOTHESIS_M} holds, {} members each used once", uses.len()))
}

fn criterion_7(runs: &mut Vec<Run>) -> Outcome {
    let r = run("pp65", "pp65:identity", format!("scripted:{}", scenario("pp65.adv")), 300, Window::default())?;
    let mut odd_cells = 0;
    for (s, (rec, tags)) in r.t.records.iter().zip(&r.t.tags).enumerate() {
        ensure(rec.bob.writes.len() == tags.len(), || format!("stage {s}: tags misaligned"))?;
        for (w, tag) in rec.bob.writes.iter().zip(tags) {
            if tag.purpose == Purpose::Oddify {
                odd_cells += 1;
                ensure(w.val == w.col, || format!("stage {s}: odd-making cell {w:?}"))?;
            }
        }
    }
    ensure(odd_cells > 0, || "no odd-making cells".into())?;
    all_hold(&r, &["1", "2", "F", "C2"])?;
    let rows = limits(&r, 0)?;
    for (row, p, l) in &rows {
        if !matches!(p, Provenance::Mirror(_)) {
            ensure(matches!(l, LimitDecl::Finite(_)), || format!("row {row} ({p}) limit `{l}`"))?;
        }
    }
    let mut released: HashMap<FiniteFun, usize> = HashMap::new();
    for (_, p, _) in &rows {
        if let Provenance::Released(g) = p {
            *released.entry(g.clone()).or_default() += 1;
        }
    }
    // every odd state an A-row passed through, in stage order
    let mut a = FiniteTable::new();
    let mut odd_states: BTreeSet<String> = BTreeSet::new();
    for rec in &r.t.records {
        for &(row, col, val) in &rec.alice.a {
            a.set_cell(row, col, val).map_err(|e| e.to_string())?;
        }
        for (_, cells) in a.rows() {
            if cells.len() % 2 == 1 {
                odd_states.insert(FiniteFun::from(cells.clone()).to_string());
            }
        }
    }
    ensure(!released.is_empty(), || "nothing released".into())?;
    for (g, n) in &released {
        ensure(*n == 1, || format!("`{g}` released {n} times"))?;
        ensure(odd_states.contains(&g.to_string()), || format!("released `{g}` was never an odd A-row"))?;
    }
    runs.push(r);
    Ok(format!("{odd_cells} odd-making cells hold their column, {} releases once each", released.len()))
}

const FUZZ: [(&str, u64, &str); 7] = [
    ("g0", 200, "random:rows=8,cols=8,vals=4,writes=2"),
    ("g1", 200, "random:rows=8,cols=8,vals=4,writes=2"),
    ("g2", 200, "random:rows=8,cols=8,vals=8,writes=2"),
    ("g3", 150, "random:rows=6,cols=6,vals=4,writes=2,rrows=3,rcols=6,rvals=16,rwrites=1"),
    ("g4", 60, "random:rows=6,cols=6,vals=4,writes=2,rrows=3,rcols=6,rvals=16,rwrites=1"),
    ("ext:canonical-odd", 100, "random:rows=4,cols=4,vals=2,writes=1"),
    ("pp65:identity", 90, "random:rows=8,cols=8,vals=8,writes=2"),
];

/// Instruction firings seen so far in one run.
#[derive(Default)]
struct Fired {
    seen: usize,
    counts: HashMap<Instruction, usize>,
}

/// Independent per-stage checks, written against the public accessors.
fn stage_faults(runner: &numgame::protocol::Runner, view: bool, fired: &mut Fired) -> Vec<String> {
    let mut faults = Vec::new();
    let bob = runner.bob();
    let st = runner.state();
    let s = st.stage() - 1;
    if let Err(e) = bob.check_invariants(&st.a) {
        faults.push(format!("stage {s}: {e}"));
    }
    for b in 0..st.out.len() {
        let mut owned = BTreeSet::new();
        let mains = (0..=s).filter_map(|i| bob.main_reservation(b, i));
        let consts = (0..=s).filter_map(|m| bob.constant_rows(m).get(b).copied().flatten());
        for row in mains.chain(consts) {
            if !owned.insert(row) {
                faults.push(format!("stage {s}: table {b} row {row} reserved twice"));
            }
        }
        if let Some(reg) = bob.registry(b) {
            let all: Vec<&FiniteFun> = reg.iter().collect();
            if all.iter().any(|g| !g.is_odd()) {
                faults.push(format!("stage {s}: registry {b} holds an even function"));
            }
            let distinct: HashSet<&FiniteFun> = all.iter().copied().collect();
            if distinct.len() != all.len() {
                faults.push(format!("stage {s}: registry {b} repeats a function"));
            }
        }
    }
    if view {
        for (row, cells) in st.a.rows() {
            let held = bob.held().get(row).is_some() as usize;
            if (cells.len() - held) % 2 == 1 {
                faults.push(format!("stage {s}: view row {row} is odd"));
            }
        }
    }
    for e in &bob.events()[fired.seen..] {
        if let Event::Fired { instruction, .. } = e {
            *fired.counts.entry(*instruction).or_default() += 1;
        }
    }
    fired.seen = bob.events().len();
    if let Some((i, n)) = fired.counts.iter().find(|(_, &n)| n > 1) {
        faults.push(format!("stage {s}: {i:?} fired {n} times"));
    }
    faults
}

fn criterion_8(fuzz: &mut Vec<Transcript>) -> Outcome {
    let mut moves = 0;
    let mut faults = Vec::new();
    for seed in 0..10 {
        for (game, stages, adv) in FUZZ {
            let kind: GameKind = game.parse().unwrap();
            let view = !matches!(kind, GameKind::G1 | GameKind::Ext { .. });
            let spec = AdversarySpec::from_arg(adv).unwrap();
            let mut fired = Fired::default();
            let res = run_game_with(kind, &spec, stages, seed, |runner| {
                faults.extend(stage_faults(runner, view, &mut fired).into_iter().map(|f| format!("{game} seed {seed} {f}")));
                Ok(())
            });
            match res {
                Ok(t) => {
                    moves += t.records.len();
                    fuzz.push(t);
                }
                Err(e) => faults.push(format!("{game} seed {seed}: {e}")),
            }
        }
    }
    ensure(moves == 10_000, || format!("{moves} adversary moves, want 10000"))?;
    ensure(faults.is_empty(), || format!("{} faults, first: {}", faults.len(), faults[0]))?;
    Ok(format!("{moves} random moves over 7 kinds, seeds 0-9, no faults"))
}

fn criterion_9(runs: &[Run], fuzz: &[Transcript]) -> Outcome {
    let traces = runs.iter().map(|r| (&r.t, r.window)).chain(fuzz.iter().map(|t| (t, Window::default())));
    let mut n = 0;
    for (t, w) in traces {
        let (fast, brute) = referee_pair(t, w).map_err(|e| e.to_string())?;
        ensure(fast.verdict_set() == brute.verdict_set(), || {
            format!("{} seed {}: verdict sets differ", t.kind.name(), t.seed)
        })?;
        n += 1;
    }
    ensure(n == runs.len() + fuzz.len() && !runs.is_empty(), || "missing traces".into())?;
    Ok(format!("verdict sets equal on {n} traces"))
}

fn criterion_10(runs: &[Run]) -> Outcome {
    ensure(runs.len() == 8, || format!("only {} scenarios ran", runs.len()))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for r in runs {
        let kind: GameKind = r.game.parse().map_err(|e| format!("{e}"))?;
        let spec = AdversarySpec::from_arg(&r.adversary).map_err(|e| format!("{e}"))?;
        let again = play(kind, &spec, r.stages, r.seed).map_err(|e| e.to_string())?;
        let text = trace::serialize(&r.t);
        ensure(trace::serialize(&again) == text, || format!("{}: re-run trace differs", r.name))?;
        let path = dir.path().join(format!("{}.trace", r.name));
        std::fs::write(&path, &text).map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_numgame"))
            .arg("verify")
            .arg(&path)
            .arg("--window")
            .arg(r.window.to_string())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), || {
            format!("{}: verify exit {:?}: {}", r.name, out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
    }
    Ok(format!("{} scenarios re-run byte-identical, verify exits 0", runs.len()))
}

fn timed(n: u32, f: impl FnOnce() -> Outcome) -> (u32, Outcome, f64) {
    let t0 = Instant::now();
    let res = f();
    (n, res, t0.elapsed().as_secs_f64())
}

fn main() {
    let mut runs = Vec::new();
    let mut fuzz = Vec::new();
    let mut results = vec![
        timed(1, || criterion_1(&mut runs)),
        timed(2, || criterion_2(&mut runs)),
        timed(3, || criterion_3(&mut runs)),
        timed(4, || criterion_4(&mut runs)),
        timed(5, || criterion_5(&mut runs)),
        timed(6, || criterion_6(&mut runs)),
        timed(7, || criterion_7(&mut runs)),
        timed(8, || criterion_8(&mut fuzz)),
    ];
    results.push(timed(9, || criterion_9(&runs, &fuzz)));
    results.push(timed(10, || criterion_10(&runs)));
    let mut failed = 0;
    for (n, res, secs) in &results {
        match res {
            Ok(msg) => println!("PASS criterion {n} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {n} ({secs:.1}s): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
