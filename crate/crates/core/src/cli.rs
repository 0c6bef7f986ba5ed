//! Command-line harness: run, verify, catalog and batch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::adversaries::{AdversarySpec, LimitDecl};
use crate::protocol::{trace, BetaSpec, GameKind, ProtocolError, Runner, Transcript};
use crate::referee::{self, check_extension_hypothesis, RefereeReport, Status, Window};
use crate::strategies::OddEnumeration;
use crate::tables::FiniteTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DUTY: i32 = 3;

/// Extension-hypothesis proxy bounds checked before an `ext` run.
pub const HYPOTHESIS_N: usize = 3;
pub const HYPOTHESIS_M: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "numgame", version, about = "Simulate and referee the numbering games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play one game and referee the result.
    Run(RunArgs),
    /// Replay a trace, re-derive Bob's moves and run both referees.
    Verify {
        trace: PathBuf,
        #[arg(long, default_value = "64x32")]
        window: Window,
    },
    /// List the games and their winner conditions.
    Catalog,
    /// Run several TOML run configs.
    Batch {
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub game: String,
    #[arg(long, default_value = "silent")]
    pub adversary: String,
    #[arg(long)]
    pub stages: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "64x32")]
    pub window: Window,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print Alice's and Bob's tables restricted to the window.
    #[arg(long)]
    pub dump_window: bool,
}

/// One entry of a batch: the `run` flags as a TOML table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: String,
    #[serde(default = "default_adversary")]
    pub adversary: String,
    pub stages: u64,
    #[serde(default)]
    pub seed: u64,
    pub window: Option<String>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn default_adversary() -> String {
    "silent".into()
}

impl RunConfig {
    pub fn into_args(self) -> Result<RunArgs, String> {
        let window = match self.window {
            Some(w) => w.parse()?,
            None => Window::default(),
        };
        Ok(RunArgs {
            game: self.game,
            adversary: self.adversary,
            stages: self.stages,
            seed: self.seed,
            window,
            trace: self.trace,
            report: self.report,
            dump_window: false,
        })
    }
}

/// Output of a command: text for stdout, text for stderr and an exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: msg.into(),
            code,
        }
    }
}

pub fn error_code(e: &ProtocolError) -> i32 {
    match e {
        ProtocolError::BadParameters(_) | ProtocolError::Adversary(_) => EXIT_CONFIG,
        _ => EXIT_DUTY,
    }
}

/// Runs `stages` stages; unlike `run_game` this accepts zero.
pub fn play(kind: GameKind, spec: &AdversarySpec, stages: u64, seed: u64) -> Result<Transcript, ProtocolError> {
    let mut runner = Runner::new(kind, spec, seed)?;
    for _ in 0..stages {
        runner.step()?;
    }
    Ok(runner.finish())
}

/// The EXT pre-run check: declared finite A-limits against the first
/// `HYPOTHESIS_M` members of ℬ.
pub fn check_ext_config(kind: &GameKind, spec: &AdversarySpec, seed: u64) -> Result<(), String> {
    let GameKind::Ext { beta } = kind else {
        return Ok(());
    };
    let alice = spec.instantiate(seed).map_err(|e| e.to_string())?;
    let class_a: Vec<_> = alice
        .declarations()
        .a
        .values()
        .filter_map(|l| match l {
            LimitDecl::Finite(g) => Some(g.clone()),
            _ => None,
        })
        .collect();
    let members = match beta {
        BetaSpec::Listed(list) => list.iter().take(HYPOTHESIS_M).cloned().collect(),
        BetaSpec::CanonicalOdd => {
            let mut e = OddEnumeration::new();
            (0..HYPOTHESIS_M).map(|i| e.get(i).clone()).collect::<Vec<_>>()
        }
    };
    let v = check_extension_hypothesis(&class_a, &members, HYPOTHESIS_N);
    match v.status {
        Status::Violated => Err(format!("extension hypothesis fails: {}", v.detail)),
        _ => Ok(()),
    }
}

pub fn cmd_run(args: &RunArgs) -> Outcome {
    let kind: GameKind = match args.game.parse() {
        Ok(k) => k,
        Err(e) => return Outcome::fail(EXIT_CONFIG, format!("{e}")),
    };
    let spec = match AdversarySpec::from_arg(&args.adversary) {
        Ok(s) => s,
        Err(e) => return Outcome::fail(EXIT_CONFIG, format!("{e}")),
    };
    if let Err(e) = check_ext_config(&kind, &spec, args.seed) {
        return Outcome::fail(EXIT_CONFIG, e);
    }
    let t = match play(kind, &spec, args.stages, args.seed) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(error_code(&e), format!("{e}")),
    };
    if let Some(path) = &args.trace {
        if let Err(e) = fs::write(path, trace::serialize(&t)) {
            return Outcome::fail(EXIT_CONFIG, format!("cannot write {}: {e}", path.display()));
        }
    }
    let report = match referee::referee(&t, args.window) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(error_code(&e), format!("{e}")),
    };
    let mut out = report.to_string();
    if args.dump_window {
        out.push_str(&dump_window(&t, args.window));
    }
    if let Some(path) = &args.report {
        if let Err(e) = fs::write(path, report.to_string()) {
            return Outcome::fail(EXIT_CONFIG, format!("cannot write {}: {e}", path.display()));
        }
    }
    Outcome {
        stdout: out,
        stderr: String::new(),
        code: if report.has_violation() { EXIT_VIOLATED } else { EXIT_OK },
    }
}

/// Re-runs a fresh Bob against the trace's Alice moves and compares every
/// record, then runs both referees.
pub fn verify_text(text: &str, window: Window) -> Outcome {
    let t = match trace::parse(text) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_DUTY, format!("{e}")),
    };
    let spec = AdversarySpec::Replay {
        moves: t.alice_moves(),
        decls: t.decls.clone(),
    };
    let again = match play(t.kind.clone(), &spec, t.stages, t.seed) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(EXIT_DUTY, format!("replay failed: {e}")),
    };
    if let Some(s) = (0..t.records.len()).find(|&s| again.records[s] != t.records[s]) {
        return Outcome::fail(EXIT_DUTY, format!("replay mismatch: Bob's move at stage {s} differs"));
    }
    if again.provenance != t.provenance || again.cursors != t.cursors {
        return Outcome::fail(EXIT_DUTY, "replay mismatch: provenance differs");
    }
    if trace::serialize(&again) != text {
        return Outcome::fail(EXIT_DUTY, "replay mismatch: trace text differs");
    }
    let (fast, brute) = match referee::referee_pair(&t, window) {
        Ok(p) => p,
        Err(e) => return Outcome::fail(error_code(&e), format!("{e}")),
    };
    let mut out = fast.to_string();
    if fast.verdicts != brute.verdicts {
        out.push_str(&disagreement(&fast, &brute));
        return Outcome {
            stdout: out,
            stderr: "referees disagree".into(),
            code: EXIT_VIOLATED,
        };
    }
    writeln!(out, "# brute-force referee agrees on {} verdicts", fast.verdicts.len()).unwrap();
    Outcome {
        code: if fast.has_violation() { EXIT_VIOLATED } else { EXIT_OK },
        stdout: out,
        stderr: String::new(),
    }
}

fn disagreement(fast: &RefereeReport, brute: &RefereeReport) -> String {
    let mut s = String::new();
    let (a, b) = (fast.lines(), brute.lines());
    for l in a.iter().filter(|l| !b.contains(l)) {
        writeln!(s, "# only indexed: {l}").unwrap();
    }
    for l in b.iter().filter(|l| !a.contains(l)) {
        writeln!(s, "# only brute-force: {l}").unwrap();
    }
    s
}

pub fn cmd_verify(path: &Path, window: Window) -> Outcome {
    match fs::read_to_string(path) {
        Ok(text) => verify_text(&text, window),
        Err(e) => Outcome::fail(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())),
    }
}

pub fn cmd_catalog() -> Outcome {
    let mut out = String::new();
    for (name, conds, params) in referee::catalog() {
        writeln!(out, "{name} conditions={} params: {params}", conds.len()).unwrap();
        for (i, c) in conds.iter().enumerate() {
            writeln!(out, "  {} {c}", i + 1).unwrap();
        }
    }
    writeln!(out, "all games also report F (provenance faithfulness); pp65 adds C2, C3").unwrap();
    Outcome {
        stdout: out,
        ..Default::default()
    }
}

pub fn cmd_batch(configs: &[PathBuf], jobs: usize) -> Outcome {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Outcome>>> = Mutex::new(configs.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = configs.get(i) else { break };
                let r = batch_one(path);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut out = Outcome::default();
    for (path, r) in configs.iter().zip(results.into_inner().unwrap()) {
        let r = r.expect("every config ran");
        writeln!(out.stdout, "== {} exit {}", path.display(), r.code).unwrap();
        out.stdout.push_str(&r.stdout);
        out.stderr.push_str(&r.stderr);
        out.code = out.code.max(r.code);
    }
    out
}

fn batch_one(path: &Path) -> Outcome {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())),
    };
    let cfg: RunConfig = match toml::from_str(&text) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(EXIT_CONFIG, format!("{}: {e}", path.display())),
    };
    match cfg.into_args() {
        Ok(args) => cmd_run(&args),
        Err(e) => Outcome::fail(EXIT_CONFIG, e),
    }
}

fn dump_table(out: &mut String, name: &str, t: &FiniteTable, w: Window) {
    writeln!(out, "# {name}").unwrap();
    for row in 0..w.rows {
        let cells: Vec<String> = (0..w.cols)
            .map(|c| t.get(row, c).map_or(".".to_string(), |v| v.to_string()))
            .collect();
        if cells.iter().any(|c| c != ".") {
            writeln!(out, "# {row:>4} | {}", cells.join(" ")).unwrap();
        }
    }
}

pub fn dump_window(t: &Transcript, w: Window) -> String {
    let mut out = String::new();
    let Ok(st) = t.replay() else {
        return out;
    };
    dump_table(&mut out, "A", &st.a, w);
    if t.kind.has_r() {
        dump_table(&mut out, "R", &st.r, w);
    }
    for (i, b) in st.out.iter().enumerate() {
        dump_table(&mut out, &t.kind.table_label(i), b, w);
    }
    out
}

pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { trace, window } => cmd_verify(trace, *window),
        Command::Catalog => cmd_catalog(),
        Command::Batch { configs, jobs } => cmd_batch(configs, *jobs),
    }
}
