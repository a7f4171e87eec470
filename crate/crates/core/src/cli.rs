//! Command-line front end.
//!
//! Exit status: 0 on success or when an equivalence holds, 1 when it fails,
//! 2 when a budget ran out first, 3 on usage, input or parse errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::bigstep::{close, eval};
use crate::corpus::{default_probes, gen_corpus};
use crate::equiv::{strong_bisim_g, strong_bisim_with, weak_bisim, StmtEquiv, Verdict};
use crate::giantstep::{close_g, eval_g};
use crate::lang::{parse, parse_state, parse_states, ParseError, SchedMode, State, Stmt};
use crate::resumption::{prefix, prefix_g, yield_free, yield_free_g, FiniteTree, GRes, Res};
use crate::smallstep::{gmmred, mmred};
use crate::tracesem::{gtrace_prefix, trace_eval, trace_eval_g, trace_prefix, ResumeOracle, Schedule, ScheduleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "concsem",
    version,
    about = "Resumption semantics for a shared-variable concurrent language"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a program and print a prefix of its resumption or trace.
    Eval(EvalArgs),
    /// Compare two semantics of one program.
    Compare(CompareArgs),
    /// Compare two programs under one semantics.
    Bisim(BisimArgs),
    /// Generate a random corpus and run the differential suite on it.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Sem {
    /// Big-step evaluation.
    Big,
    /// Giant-step evaluation.
    Giant,
    /// Maximal small-step reduction.
    Small,
    /// Maximal small-step reduction under yields.
    SmallGiant,
    /// Big-step trace under `--schedule`.
    Trace,
    /// Giant-step trace under `--schedule` and `--resume`.
    TraceGiant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Preempt,
    Coop,
}

impl From<Mode> for SchedMode {
    fn from(m: Mode) -> SchedMode {
        match m {
            Mode::Preempt => SchedMode::Preemptive,
            Mode::Coop => SchedMode::Cooperative,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Equiv {
    Strong,
    Weak,
}

#[derive(Args, Debug)]
struct Common {
    /// Scheduling discipline.
    #[arg(long, value_enum, default_value = "preempt")]
    mode: Mode,
    /// Initial state, e.g. `{x=0, y=1}`.
    #[arg(long, default_value = "{}")]
    init: String,
    /// Probe states for giant-step continuations, `;`-separated. Defaults to
    /// all small states over the program's variables.
    #[arg(long)]
    probes: Option<String>,
    /// Print nothing; report through the exit status only.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Program text.
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
    /// File holding the program.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum, default_value = "big")]
    sem: Sem,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: Source,
    /// Number of layers to print.
    #[arg(long, default_value_t = 20)]
    depth: usize,
    /// Scheduling choices for traces, e.g. `LRL` or `LR*`.
    #[arg(long, default_value = "")]
    schedule: String,
    /// Resume states for giant-step traces, `;`-separated.
    #[arg(long, default_value = "")]
    resume: String,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_enum)]
    left: Sem,
    #[arg(long, value_enum)]
    right: Sem,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "strong")]
    equiv: Equiv,
    #[arg(long, default_value_t = 60)]
    depth: usize,
    /// Delays that may be removed when searching for convergence.
    #[arg(long, default_value_t = 1000)]
    fuel: usize,
}

#[derive(Args, Debug)]
struct BisimArgs {
    /// First program.
    left: String,
    /// Second program.
    right: String,
    #[arg(long, value_enum, default_value = "big")]
    sem: Sem,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 12)]
    max_size: usize,
    #[arg(long, default_value_t = 60)]
    depth: usize,
    #[arg(long, value_enum, default_value = "preempt")]
    mode: Mode,
    /// Only print the generated programs and initial states.
    #[arg(long)]
    list: bool,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Schedule(#[from] ScheduleError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

/// Parses `std::env::args` and runs; returns the exit status.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(&args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with explicit arguments (the first one is the program name) and
/// output streams.
pub fn run_with(args: &[String], out: &mut impl Write, err: &mut impl Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Compare(a) => cmd_compare(a, out, err),
        Command::Bisim(a) => cmd_bisim(a, out, err),
        Command::Corpus(a) => cmd_corpus(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(source: &Source) -> Result<Stmt, CliError> {
    let text = match (&source.expr, &source.file) {
        (Some(e), _) => e.clone(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        (None, None) => return Err(CliError::Usage("no program given; use -e or --file".into())),
    };
    Ok(parse(&text)?)
}

/// Warns about variables that are read but neither initialized nor
/// assigned; they read as 0.
fn warn_uninitialized(s: &Stmt, init: &State, err: &mut impl Write) {
    let assigned = s.assigned_vars();
    for v in s.read_vars() {
        if !init.contains(&v) && !assigned.contains(&v) {
            let _ = writeln!(
                err,
                "warning: `{v}` is read but never initialized or assigned; it reads as 0"
            );
        }
    }
}

fn probes_for(common: &Common, s: &Stmt, init: &State) -> Result<Vec<State>, CliError> {
    match &common.probes {
        Some(p) => Ok(parse_states(p)?),
        None => Ok(default_probes(s, init)),
    }
}

fn emit(tree: &FiniteTree, format: Format, out: &mut impl Write) {
    let _ = match format {
        Format::Text => writeln!(out, "{}", tree.render()),
        Format::Structured => {
            let json = serde_json::to_string_pretty(&tree.to_record()).expect("records serialize");
            writeln!(out, "{json}")
        }
    };
}

fn cmd_eval(a: EvalArgs, out: &mut impl Write, err: &mut impl Write) -> Result<i32, CliError> {
    let s = load(&a.source)?;
    let init = parse_state(&a.common.init)?;
    let mode = a.common.mode.into();
    warn_uninitialized(&s, &init, err);
    let tree = match a.sem {
        Sem::Big => prefix(&eval(&s, &init, mode), a.depth),
        Sem::Small => prefix(&mmred(&s, &init, mode), a.depth),
        Sem::Giant => prefix_g(&eval_g(&s, &init, mode), a.depth, &probes_for(&a.common, &s, &init)?),
        Sem::SmallGiant => prefix_g(&gmmred(&s, &init, mode), a.depth, &probes_for(&a.common, &s, &init)?),
        Sem::Trace => {
            let sched: Schedule = a.schedule.parse()?;
            trace_prefix(&trace_eval(&s, &init, &sched, mode), a.depth)
        }
        Sem::TraceGiant => {
            let sched: Schedule = a.schedule.parse()?;
            let resume = ResumeOracle::parse(&a.resume)?;
            gtrace_prefix(&trace_eval_g(&s, &init, &sched, &resume, mode), a.depth)
        }
    };
    if !a.common.quiet {
        emit(&tree, a.format, out);
    }
    Ok(EXIT_OK)
}

/// A resumption of either kind, as produced by one of the semantics.
enum Tree {
    Big(Res),
    Giant(GRes),
}

fn build(sem: Sem, s: &Stmt, init: &State, mode: SchedMode) -> Result<Tree, CliError> {
    Ok(match sem {
        Sem::Big => Tree::Big(eval(s, init, mode)),
        Sem::Small => Tree::Big(mmred(s, init, mode)),
        Sem::Giant => Tree::Giant(eval_g(s, init, mode)),
        Sem::SmallGiant => Tree::Giant(gmmred(s, init, mode)),
        Sem::Trace | Sem::TraceGiant => {
            return Err(CliError::Usage(
                "traces are compared with `eval --sem trace`, not here".into(),
            ))
        }
    })
}

fn check(left: Tree, right: Tree, c: &CheckArgs, mode: SchedMode, probes: &[State]) -> Result<Verdict, CliError> {
    // small-step residuals keep `skip;` prefixes that big-step evaluation
    // drops under cooperative scheduling
    let eq = match mode {
        SchedMode::Preemptive => StmtEquiv::Syntactic,
        SchedMode::Cooperative => StmtEquiv::SkipPrefix,
    };
    match (left, right, c.equiv) {
        (Tree::Big(a), Tree::Big(b), Equiv::Strong) => Ok(strong_bisim_with(&a, &b, c.depth, eq)),
        (Tree::Big(a), Tree::Big(b), Equiv::Weak) => Ok(weak_bisim(&a, &b, c.depth, c.fuel)),
        (Tree::Giant(a), Tree::Giant(b), Equiv::Strong) => Ok(strong_bisim_g(&a, &b, c.depth, probes)),
        (Tree::Giant(_), Tree::Giant(_), Equiv::Weak) => Err(CliError::Usage(
            "weak bisimilarity is only available for big and small".into(),
        )),
        _ => Err(CliError::Usage(
            "cannot compare a big-step tree (big, small) with a giant-step tree (giant, small-giant)".into(),
        )),
    }
}

fn report(v: &Verdict, quiet: bool, out: &mut impl Write) -> i32 {
    if !quiet {
        let _ = writeln!(out, "{v}");
    }
    match v {
        Verdict::Holds { .. } => EXIT_OK,
        Verdict::Fails { .. } => EXIT_FAILS,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn cmd_compare(a: CompareArgs, out: &mut impl Write, err: &mut impl Write) -> Result<i32, CliError> {
    let s = load(&a.source)?;
    let init = parse_state(&a.common.init)?;
    let mode = a.common.mode.into();
    warn_uninitialized(&s, &init, err);
    let probes = probes_for(&a.common, &s, &init)?;
    let v = check(
        build(a.left, &s, &init, mode)?,
        build(a.right, &s, &init, mode)?,
        &a.check,
        mode,
        &probes,
    )?;
    Ok(report(&v, a.common.quiet, out))
}

fn cmd_bisim(a: BisimArgs, out: &mut impl Write, err: &mut impl Write) -> Result<i32, CliError> {
    let (p, q) = (parse(&a.left)?, parse(&a.right)?);
    let init = parse_state(&a.common.init)?;
    let mode = a.common.mode.into();
    warn_uninitialized(&p, &init, err);
    warn_uninitialized(&q, &init, err);
    let mut probes = probes_for(&a.common, &p, &init)?;
    if a.common.probes.is_none() {
        for st in default_probes(&q, &init) {
            if !probes.contains(&st) {
                probes.push(st);
            }
        }
    }
    let v = check(
        build(a.sem, &p, &init, mode)?,
        build(a.sem, &q, &init, mode)?,
        &a.check,
        mode,
        &probes,
    )?;
    Ok(report(&v, a.common.quiet, out))
}

#[derive(Default)]
struct Tally {
    holds: usize,
    fails: usize,
    unknown: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn add(&mut self, v: &Verdict, case: impl FnOnce() -> String) {
        match v {
            Verdict::Holds { .. } => self.holds += 1,
            Verdict::Fails { .. } => {
                self.fails += 1;
                if self.first_failure.is_none() {
                    self.first_failure = Some(format!("{}: {v}", case()));
                }
            }
            Verdict::Unknown { .. } => self.unknown += 1,
        }
    }

    fn line(&self, name: &str) -> String {
        let mut s = format!(
            "{name:<24} holds {:>4}  fails {:>4}  unknown {:>4}",
            self.holds, self.fails, self.unknown
        );
        if let Some(f) = &self.first_failure {
            s.push_str(&format!("\n    first failure: {f}"));
        }
        s
    }
}

struct CaseResult {
    big_small: Verdict,
    giant_small: Verdict,
    closed: bool,
}

fn cmd_corpus(a: CorpusArgs, out: &mut impl Write) -> Result<i32, CliError> {
    if a.count == 0 || a.max_size == 0 {
        return Err(CliError::Usage("--count and --max-size must be positive".into()));
    }
    let corpus = gen_corpus(a.seed, a.count, a.max_size);
    if a.list {
        for (s, st) in &corpus {
            let _ = writeln!(out, "{st}\t{s}");
        }
        return Ok(EXIT_OK);
    }
    let mode: SchedMode = a.mode.into();
    let eq = match mode {
        SchedMode::Preemptive => StmtEquiv::Syntactic,
        SchedMode::Cooperative => StmtEquiv::SkipPrefix,
    };
    let giant_depth = a.depth.min(40);
    let results: Vec<CaseResult> = corpus
        .par_iter()
        .map(|(s, st)| {
            let probes = default_probes(s, st);
            CaseResult {
                big_small: strong_bisim_with(&eval(s, st, mode), &mmred(s, st, mode), a.depth, eq),
                giant_small: strong_bisim_g(&eval_g(s, st, mode), &gmmred(s, st, mode), giant_depth, &probes),
                closed: yield_free(&close(&eval(s, st, mode), mode), a.depth)
                    && yield_free_g(&close_g(&eval_g(s, st, mode)), a.depth),
            }
        })
        .collect();
    let (mut bs, mut gs) = (Tally::default(), Tally::default());
    let mut open = Vec::new();
    for ((s, st), r) in corpus.iter().zip(&results) {
        bs.add(&r.big_small, || format!("`{s}` from {st}"));
        gs.add(&r.giant_small, || format!("`{s}` from {st}"));
        if !r.closed {
            open.push(format!("`{s}` from {st}"));
        }
    }
    if !a.quiet {
        let _ = writeln!(
            out,
            "corpus seed={} count={} max-size={} mode={:?}",
            a.seed, a.count, a.max_size, a.mode
        );
        let _ = writeln!(out, "{}", bs.line(&format!("big = small (d={})", a.depth)));
        let _ = writeln!(out, "{}", gs.line(&format!("giant = small (d={giant_depth})")));
        let _ = writeln!(
            out,
            "closing removes yields   {} of {}",
            corpus.len() - open.len(),
            corpus.len()
        );
        if let Some(first) = open.first() {
            let _ = writeln!(out, "    first failure: {first}");
        }
    }
    Ok(if bs.fails + gs.fails > 0 || !open.is_empty() {
        EXIT_FAILS
    } else if bs.unknown + gs.unknown > 0 {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    })
}
