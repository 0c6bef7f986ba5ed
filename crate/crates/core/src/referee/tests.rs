use super::*;
use crate::adversaries::{AdversarySpec, LimitDecl};
use crate::protocol::{run_game, BetaSpec, GameKind, Transcript};
use crate::referee::RowProvenance;
use crate::strategies::OddEnumeration;
use crate::tables::FiniteFun;

const W: Window = Window { rows: 64, cols: 16 };

fn script(body: &str) -> AdversarySpec {
    AdversarySpec::parse(&format!("adversary scripted\n{body}")).unwrap()
}

fn f(s: &str) -> FiniteFun {
    s.parse().unwrap()
}

fn lim(s: &str) -> LimitDecl {
    s.parse().unwrap()
}

/// Both referees, asserting they agree line for line.
fn judge(t: &Transcript) -> RefereeReport {
    let (fast, slow) = referee_pair(t, W).unwrap();
    assert_eq!(fast.lines(), slow.lines());
    fast
}

fn status(r: &RefereeReport, cond: &str, scope: &str) -> Status {
    r.find(cond, scope)
        .unwrap_or_else(|| panic!("no verdict {cond} {scope} in\n{r}"))
        .status
}

fn set_prov(t: &mut Transcript, table: usize, pred: impl Fn(&Provenance) -> bool, to: Provenance) -> u64 {
    let p = t
        .provenance
        .iter_mut()
        .find(|p| p.table == table && pred(&p.kind))
        .expect("provenance row to tamper with");
    p.kind = to;
    p.row
}

fn dup_pair() -> AdversarySpec {
    script("W 0 A 0 0 7\nW 1 A 1 0 7\nL 0 finite 0:7\nL 1 finite 0:7")
}

#[test]
fn empty_transcript_holds_or_pends() {
    let t = crate::cli::play(GameKind::G0, &AdversarySpec::Silent, 0, 0).unwrap();
    let r = judge(&t);
    assert!(!r.has_violation(), "{r}");
    assert_eq!(status(&r, "F", "all"), Status::Holds);
}

#[test]
fn unresolved_obligations_are_pending_not_violated() {
    let t = run_game(GameKind::G0, &dup_pair(), 3, 0).unwrap();
    let r = judge(&t);
    assert_eq!(status(&r, "1", "table=B"), Status::Pending);
    assert!(!r.has_violation());
}

#[test]
fn settled_run_holds() {
    let t = run_game(GameKind::G0, &dup_pair(), 200, 0).unwrap();
    let r = judge(&t);
    for v in &r.verdicts {
        assert_eq!(v.status, Status::Holds, "{r}");
    }
}

#[test]
fn missing_constant_row_violates_coverage() {
    let spec = script("L 0 const 4\nL R 0 const 0");
    let mut t = run_game(GameKind::G3, &spec, 40, 0).unwrap();
    assert_eq!(status(&judge(&t), "1", "table=B"), Status::Holds);
    set_prov(&mut t, 0, |p| *p == Provenance::Constant(4), Provenance::Pending);
    let r = judge(&t);
    assert_eq!(status(&r, "1", "table=B"), Status::Violated);
    assert!(r.find("1", "table=B").unwrap().detail.contains("A-row 0"));
    assert_eq!(status(&r, "2", "table=C"), Status::Holds);
}

#[test]
fn passed_odd_function_without_row_violates_coverage() {
    let mut t = run_game(GameKind::G0, &dup_pair(), 200, 0).unwrap();
    set_prov(&mut t, 0, |p| *p == Provenance::Odd(f("0:7")), Provenance::Pending);
    let r = judge(&t);
    assert_eq!(status(&r, "1", "table=B"), Status::Violated, "{r}");
}

#[test]
fn undeclared_a_row_is_pending() {
    let spec = script("W 0 A 0 0 7");
    let mut t = run_game(GameKind::G0, &spec, 50, 0).unwrap();
    t.decls = crate::adversaries::Declarations::open();
    let r = judge(&t);
    assert_eq!(status(&r, "1", "table=B"), Status::Pending);
    assert!(!r.has_violation(), "{r}");
}

#[test]
fn injected_duplicate_mirror_violates_injectivity() {
    let mut t = run_game(GameKind::G0, &dup_pair(), 200, 0).unwrap();
    assert_eq!(status(&judge(&t), "2", "table=B"), Status::Holds);
    let fresh = t.provenance.iter().map(|p| p.row).max().unwrap() + 1;
    let src = t
        .provenance
        .iter()
        .find(|p| matches!(p.kind, Provenance::Mirror(_)))
        .unwrap()
        .kind
        .clone();
    t.provenance.push(RowProvenance {
        table: 0,
        row: fresh,
        kind: src,
    });
    let r = judge(&t);
    let v = r.find("2", "table=B").unwrap();
    assert_eq!(v.status, Status::Violated, "{r}");
    assert!(v.detail.contains(&fresh.to_string()));
}

#[test]
fn invalidated_rows_are_outside_injectivity() {
    let mut t = run_game(GameKind::G1, &dup_pair(), 120, 0).unwrap();
    let st = t.replay().unwrap();
    let k_rows: Vec<u64> = t
        .provenance
        .iter()
        .filter(|p| st.k.contains(p.row))
        .map(|p| p.row)
        .take(2)
        .collect();
    assert_eq!(k_rows.len(), 2);
    for p in t.provenance.iter_mut().filter(|p| k_rows.contains(&p.row)) {
        p.kind = Provenance::Odd(f("0:1"));
    }
    let r = judge(&t);
    assert_eq!(status(&r, "2", "table=B"), Status::Holds, "{r}");
}

#[test]
fn diagonal_is_vacuous_on_non_total_rows() {
    let t = run_game(GameKind::G2, &dup_pair(), 60, 0).unwrap();
    let r = judge(&t);
    assert!(r.find("3", "A-row=0").is_none());
    assert_eq!(status(&r, "3", "A-row=rest"), Status::Holds);
}

#[test]
fn diagonal_witness_and_pending_without_one() {
    let spec = script("L 3 const 13");
    let mut t = run_game(GameKind::G2, &spec, 200, 0).unwrap();
    let r = judge(&t);
    let v = r.find("3", "A-row=3").unwrap();
    assert_eq!(v.status, Status::Holds);
    assert_eq!(v.detail, "j=3 B-row 13 col 4");
    // an unknown B-row 13 leaves nothing to compare
    for p in t.provenance.iter_mut().filter(|p| p.row == 13) {
        p.kind = Provenance::Pending;
    }
    let r = judge(&t);
    assert_eq!(status(&r, "3", "A-row=3"), Status::Pending);
}

#[test]
fn nonreduction_vacuous_for_finite_r_rows() {
    let spec = script("W 0 R 0 0 1\nL R 0 finite 0:1");
    let t = run_game(GameKind::G3, &spec, 40, 0).unwrap();
    let r = judge(&t);
    assert!(r.find("5", "R-row=0").is_none());
    assert_eq!(status(&r, "5", "R-row=rest"), Status::Holds);
    assert_eq!(status(&r, "6", "R-row=rest"), Status::Holds);
}

#[test]
fn faithfulness_examples() {
    let spec = script("L 0 const 3\nL R 0 const 0");
    let mut t = run_game(GameKind::G3, &spec, 30, 0).unwrap();
    assert_eq!(status(&judge(&t), "F", "all"), Status::Holds);
    let row = set_prov(&mut t, 0, |p| *p == Provenance::Constant(3), Provenance::Constant(4));
    let v = check_faithfulness(&Ctx::replay(&t, W).unwrap());
    assert_eq!(v.status, Status::Violated);
    assert!(v.detail.contains(&format!("B row {row}")));

    let mut t = run_game(GameKind::G0, &dup_pair(), 100, 0).unwrap();
    set_prov(&mut t, 0, |p| matches!(p, Provenance::Odd(_)), Provenance::Odd(f("0:99")));
    assert_eq!(status(&judge(&t), "F", "all"), Status::Violated);
}

#[test]
fn unattributed_row_is_unfaithful() {
    let mut t = run_game(GameKind::G0, &dup_pair(), 20, 0).unwrap();
    let st = t.replay().unwrap();
    let row = t.provenance.iter().find(|p| st.out[0].row_len(p.row) > 0).unwrap().row;
    t.provenance.retain(|p| p.row != row);
    let v = check_faithfulness(&Ctx::replay(&t, W).unwrap());
    assert_eq!(v.status, Status::Violated);
    assert!(v.detail.contains("no provenance"));
}

fn even_support_class() -> Vec<FiniteFun> {
    ["", "0:0", "0:1", "0:0,1:0", "0:1,1:1", "0:1,1:0"].iter().map(|s| f(s)).collect()
}

#[test]
fn extension_hypothesis_examples() {
    let mut e = OddEnumeration::new();
    let beta: Vec<FiniteFun> = (0..100).map(|i| e.get(i).clone()).collect();
    let v = check_extension_hypothesis(&even_support_class(), &beta, 3);
    assert_eq!(v.status, Status::Holds, "{}", v.detail);

    let v = check_extension_hypothesis(&even_support_class(), &[f("0:0")], 2);
    assert_eq!(v.status, Status::Violated);

    let v = check_extension_hypothesis(&[], &[], 5);
    assert_eq!(v.status, Status::Holds);
}

#[test]
fn reducibility_examples() {
    let mu: Vec<LimitDecl> = ["const 0", "finite 0:7", "pattern 0+1", "finite "]
        .iter()
        .map(|s| lim(s))
        .collect();
    let id: FiniteFun = (0..4).map(|i| (i, i)).collect();
    assert_eq!(check_reducibility_witness(&mu, &mu, &id, 4).status, Status::Holds);

    let swap: FiniteFun = [(0, 1), (1, 0), (2, 2), (3, 3)].into_iter().collect();
    let v = check_reducibility_witness(&mu, &mu, &swap, 4);
    assert_eq!(v.status, Status::Violated);
    assert_eq!(v.detail, "nu(0) != mu(1) at col 0");

    // even-indexed part of mu reduces to mu by doubling
    let evens: Vec<LimitDecl> = mu.iter().step_by(2).cloned().collect();
    let double: FiniteFun = (0..2).map(|i| (i, 2 * i)).collect();
    assert_eq!(check_reducibility_witness(&evens, &mu, &double, 2).status, Status::Holds);

    let unknown = vec![LimitDecl::Undeclared];
    let v = check_reducibility_witness(&unknown, &mu, &f("0:0"), 1);
    assert_eq!(v.status, Status::Pending);
}

#[test]
fn ext_listed_class_referees_beta_rows() {
    let beta = BetaSpec::Listed(vec![f("0:1"), f("0:3"), f("0:5"), f("0:7"), f("0:9")]);
    let t = run_game(GameKind::Ext { beta }, &AdversarySpec::Silent, 3, 0).unwrap();
    let r = judge(&t);
    assert_eq!(status(&r, "F", "all"), Status::Holds);
    assert!(!r.has_violation(), "{r}");
}

#[test]
fn report_display_has_header_and_one_line_per_verdict() {
    let t = run_game(GameKind::G0, &dup_pair(), 10, 0).unwrap();
    let r = judge(&t);
    let text = r.to_string();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# symbolic limits at stage 10 window 64x16");
    assert_eq!(lines.count(), r.verdicts.len());
    assert!(text.lines().skip(1).all(|l| l.starts_with("COND g0 ")));
}

#[test]
fn catalog_condition_counts() {
    let counts: Vec<usize> = catalog().iter().map(|(_, c, _)| c.len()).collect();
    assert_eq!(counts, [2, 2, 3, 6, 3, 2, 2]);
}
