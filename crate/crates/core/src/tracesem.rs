//! Trace semantics: linear resumptions obtained by resolving every
//! scheduling choice in advance.
//!
//! Nondeterminism is made explicit. A [`Schedule`] decides, for each
//! parallel composition reached, which component moves first, and a
//! [`ResumeOracle`] decides the state a suspended giant-step computation is
//! resumed in. Evaluation is then an ordinary lazy function of its oracles.
//! Choices are consumed in the order the trace is forced, which for a linear
//! trace is simply top to bottom.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::lang::{eval_expr, parse_states, sat, ParseError, SchedMode, State, Stmt};
use crate::resumption::{FiniteTree, GNode, GRes, Node, Res, Slot, Thunk};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    /// The left component moves first.
    L,
    /// The right component moves first.
    R,
}

#[derive(Debug)]
struct Cursor<T> {
    items: Vec<T>,
    cyclic: bool,
    pos: usize,
}

impl<T: Clone> Cursor<T> {
    /// Reads the next item; `None` once a finite sequence is exhausted.
    /// Every read counts towards `pos`.
    fn next(&mut self) -> Option<T> {
        let i = self.pos;
        self.pos += 1;
        if self.cyclic && !self.items.is_empty() {
            return Some(self.items[i % self.items.len()].clone());
        }
        self.items.get(i).cloned()
    }
}

/// A sequence of scheduling choices with a read cursor. Clones share the
/// cursor. A finite schedule answers [`Choice::L`] once exhausted.
#[derive(Clone, Debug)]
pub struct Schedule(Arc<Mutex<Cursor<Choice>>>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("schedule literal: unexpected `{ch}` at position {pos} (expected L, R or a final *)")]
    BadChar { pos: usize, ch: char },
    #[error("schedule literal: `*` needs at least one choice to repeat")]
    EmptyCycle,
}

impl Schedule {
    pub fn new(choices: Vec<Choice>) -> Schedule {
        Schedule::build(choices, false)
    }

    /// Repeats `choices` forever.
    pub fn cyclic(choices: Vec<Choice>) -> Schedule {
        Schedule::build(choices, true)
    }

    fn build(items: Vec<Choice>, cyclic: bool) -> Schedule {
        Schedule(Arc::new(Mutex::new(Cursor { items, cyclic, pos: 0 })))
    }

    /// The schedule that always picks the left component.
    pub fn left() -> Schedule {
        Schedule::new(Vec::new())
    }

    pub fn next(&self) -> Choice {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .next()
            .unwrap_or(Choice::L)
    }

    /// How many choices have been read so far.
    pub fn consumed(&self) -> usize {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).pos
    }
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    /// Parses literals such as `LRR` or `LR*` (the `*` repeats the whole
    /// literal forever).
    fn from_str(src: &str) -> Result<Schedule, ScheduleError> {
        let src = src.trim();
        let (body, cyclic) = match src.strip_suffix('*') {
            Some(b) => (b, true),
            None => (src, false),
        };
        let choices = body
            .chars()
            .enumerate()
            .map(|(pos, ch)| match ch {
                'L' | 'l' => Ok(Choice::L),
                'R' | 'r' => Ok(Choice::R),
                _ => Err(ScheduleError::BadChar { pos, ch }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if cyclic && choices.is_empty() {
            return Err(ScheduleError::EmptyCycle);
        }
        Ok(Schedule::build(choices, cyclic))
    }
}

/// States that suspended giant-step computations are resumed in, consumed
/// in order. Once exhausted, a computation resumes in the state it released
/// control in, as it would in a closed system.
#[derive(Clone, Debug)]
pub struct ResumeOracle(Arc<Mutex<Cursor<State>>>);

impl ResumeOracle {
    pub fn new(states: Vec<State>) -> ResumeOracle {
        ResumeOracle(Arc::new(Mutex::new(Cursor {
            items: states,
            cyclic: false,
            pos: 0,
        })))
    }

    /// Parses `;`-separated state literals, e.g. `{x=0}; {x=1, y=2}`.
    pub fn parse(src: &str) -> Result<ResumeOracle, ParseError> {
        Ok(ResumeOracle::new(parse_states(src)?))
    }

    pub fn next_or(&self, release: &State) -> State {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .next()
            .unwrap_or_else(|| release.clone())
    }

    pub fn consumed(&self) -> usize {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).pos
    }
}

/// A layer of a big-step trace.
pub enum TNode {
    Ret(State),
    Delay(Trace),
    Yield(Stmt, State),
}

pub type Trace = Thunk<TNode>;

/// A layer of a giant-step trace.
pub enum GTNode {
    Ret(State),
    Delay(GTrace),
    /// Suspended in `state`; control came back in `resume`, after which the
    /// computation went on as `then`.
    Yield {
        resume: State,
        then: GTrace,
        state: State,
    },
}

pub type GTrace = Thunk<GTNode>;

fn t_ret(st: State) -> Trace {
    Thunk::ready(None, TNode::Ret(st))
}

/// Big-step trace evaluation under a schedule. Each parallel composition
/// reached reads one choice: `L` runs the left component first and extends
/// its trace by the right one, `R` the other way round.
pub fn trace_eval(s: &Stmt, st: &State, sched: &Schedule, mode: SchedMode) -> Trace {
    let (s, st, sched) = (s.clone(), st.clone(), sched.clone());
    Thunk::lazy(None, move || trace_layer(&s, &st, &sched, mode))
}

fn trace_layer(s: &Stmt, st: &State, sched: &Schedule, mode: SchedMode) -> Slot<TNode> {
    use SchedMode::*;
    match s {
        Stmt::Assign(x, e) => Slot::Node(TNode::Delay(t_ret(st.update(x, eval_expr(e, st))))),
        Stmt::Skip => Slot::Node(TNode::Ret(st.clone())),
        Stmt::Seq(s0, s1) => Slot::Alias(extend(
            Ext::Seq,
            s1.clone(),
            trace_eval(s0, st, sched, mode),
            sched,
            mode,
        )),
        Stmt::If(e, t, f) => {
            let branch = if sat(e, st) { t } else { f };
            let next = match mode {
                Preemptive => Thunk::ready(None, TNode::Yield((**branch).clone(), st.clone())),
                Cooperative => trace_eval(branch, st, sched, mode),
            };
            Slot::Node(TNode::Delay(next))
        }
        Stmt::While(e, body) => {
            if !sat(e, st) {
                return Slot::Node(TNode::Delay(t_ret(st.clone())));
            }
            let next = match mode {
                Preemptive => Thunk::ready(
                    None,
                    TNode::Yield(Stmt::Seq(body.clone(), Arc::new(s.clone())), st.clone()),
                ),
                Cooperative => extend(
                    Ext::Seq,
                    Arc::new(s.clone()),
                    trace_eval(body, st, sched, mode),
                    sched,
                    mode,
                ),
            };
            Slot::Node(TNode::Delay(next))
        }
        Stmt::Par(s0, s1) => Slot::Alias(match sched.next() {
            Choice::L => extend(Ext::ParR, s1.clone(), trace_eval(s0, st, sched, mode), sched, mode),
            Choice::R => extend(Ext::ParL, s0.clone(), trace_eval(s1, st, sched, mode), sched, mode),
        }),
        Stmt::Atomic(body) => Slot::Alias(close_trace(&trace_eval(body, st, sched, mode), sched, mode)),
        Stmt::Await(e, body) => {
            let next = if sat(e, st) {
                close_trace(&trace_eval(body, st, sched, mode), sched, mode)
            } else {
                Thunk::ready(None, TNode::Yield(s.clone(), st.clone()))
            };
            Slot::Node(TNode::Delay(next))
        }
        Stmt::ParL(..) | Stmt::ParR(..) | Stmt::Suspend => {
            panic!("trace evaluation of auxiliary statement `{s}`")
        }
    }
}

#[derive(Clone, Copy)]
enum Ext {
    Seq,
    ParR,
    ParL,
}

fn extend(ext: Ext, s: Arc<Stmt>, t: Trace, sched: &Schedule, mode: SchedMode) -> Trace {
    let sched = sched.clone();
    Thunk::lazy(None, move || match t.force() {
        TNode::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(TNode::Yield((*s).clone(), st.clone())),
            SchedMode::Cooperative => Slot::Alias(trace_eval(&s, st, &sched, mode)),
        },
        TNode::Delay(next) => Slot::Node(TNode::Delay(extend(ext, s.clone(), next.clone(), &sched, mode))),
        TNode::Yield(s0, st) => {
            let s0 = Arc::new(s0.clone());
            let grown = match ext {
                Ext::Seq => Stmt::Seq(s0, s.clone()),
                Ext::ParR => Stmt::Par(s0, s.clone()),
                Ext::ParL => Stmt::Par(s.clone(), s0),
            };
            Slot::Node(TNode::Yield(grown, st.clone()))
        }
    })
}

/// Closing a trace: each yield is replaced by a unit delay and the closed
/// trace of its residual, evaluated under the same schedule.
pub fn close_trace(t: &Trace, sched: &Schedule, mode: SchedMode) -> Trace {
    let (t, sched) = (t.clone(), sched.clone());
    Thunk::lazy(None, move || {
        Slot::Node(match t.force() {
            TNode::Ret(st) => TNode::Ret(st.clone()),
            TNode::Delay(next) => TNode::Delay(close_trace(next, &sched, mode)),
            TNode::Yield(s, st) => TNode::Delay(close_trace(&trace_eval(s, st, &sched, mode), &sched, mode)),
        })
    })
}

/// Materializes a trace down to `depth` layers.
pub fn trace_prefix(t: &Trace, depth: usize) -> FiniteTree {
    let mut layers = Vec::new();
    let mut cur = t.clone();
    let leaf = loop {
        if layers.len() == depth {
            break FiniteTree::Pruned;
        }
        let next = match cur.force() {
            TNode::Ret(st) => break FiniteTree::Ret(st.clone()),
            TNode::Yield(s, st) => break FiniteTree::Yield(s.clone(), st.clone()),
            TNode::Delay(next) => next.clone(),
        };
        layers.push(());
        cur = next;
    };
    layers.iter().fold(leaf, |acc, _| FiniteTree::Delay(Box::new(acc)))
}

/// Whether, to `depth` layers of `r`, the trace `t` is one of the paths
/// through `r`: choices in `r` may be resolved either way, every other
/// layer must match exactly.
pub fn is_path_of(t: &Trace, r: &Res, depth: usize) -> bool {
    path_of(t, r, depth, &mut HashSet::new())
}

fn path_of(t: &Trace, r: &Res, depth: usize, refuted: &mut HashSet<(usize, usize, usize)>) -> bool {
    if depth == 0 {
        return true;
    }
    match (t.force(), r.force()) {
        (_, Node::Plus(a, b)) => {
            let id = (t.addr(), r.addr(), depth);
            if refuted.contains(&id) {
                return false;
            }
            let ok = path_of(t, a, depth - 1, refuted) || path_of(t, b, depth - 1, refuted);
            if !ok {
                refuted.insert(id);
            }
            ok
        }
        (TNode::Ret(s), Node::Ret(st)) => s == st,
        (TNode::Yield(s, st), Node::Yield(s2, st2)) => s == s2 && st == st2,
        (TNode::Delay(t1), Node::Delay(r1)) => path_of(t1, r1, depth - 1, refuted),
        _ => false,
    }
}

// Giant-step traces are built in two stages. A pre-trace is linear in
// scheduling choices but its yields still carry continuations, because
// merging a yield into the other parallel component needs the continuation
// before the resume state is known. Resolution then fixes resume states.

enum PNode {
    Ret(State),
    Delay(Pre),
    Yield(TK, State),
}

type Pre = Thunk<PNode>;

#[derive(Clone)]
struct TK(Arc<dyn Fn(&State) -> Pre + Send + Sync>);

impl TK {
    fn new(f: impl Fn(&State) -> Pre + Send + Sync + 'static) -> TK {
        TK(Arc::new(f))
    }

    fn apply(&self, st: &State) -> Pre {
        (self.0)(st)
    }
}

fn p_ret(st: State) -> Pre {
    Thunk::ready(None, PNode::Ret(st))
}

fn p_yield(k: TK, st: State) -> Pre {
    Thunk::ready(None, PNode::Yield(k, st))
}

fn pre_eval(s: &Stmt, st: &State, sched: &Schedule, mode: SchedMode) -> Pre {
    let (s, st, sched) = (s.clone(), st.clone(), sched.clone());
    Thunk::lazy(None, move || pre_layer(&s, &st, &sched, mode))
}

fn pre_k(s: &Stmt, sched: &Schedule, mode: SchedMode) -> TK {
    let (s, sched) = (s.clone(), sched.clone());
    TK::new(move |st| pre_eval(&s, st, &sched, mode))
}

fn pre_layer(s: &Stmt, st: &State, sched: &Schedule, mode: SchedMode) -> Slot<PNode> {
    use SchedMode::*;
    match s {
        Stmt::Assign(x, e) => Slot::Node(PNode::Delay(p_ret(st.update(x, eval_expr(e, st))))),
        Stmt::Skip => Slot::Node(PNode::Ret(st.clone())),
        Stmt::Seq(s0, s1) => Slot::Alias(pre_seq(s1, pre_eval(s0, st, sched, mode), sched, mode)),
        Stmt::If(e, t, f) => {
            let branch = if sat(e, st) { t } else { f };
            let next = match mode {
                Preemptive => p_yield(pre_k(branch, sched, mode), st.clone()),
                Cooperative => pre_eval(branch, st, sched, mode),
            };
            Slot::Node(PNode::Delay(next))
        }
        Stmt::While(e, body) => {
            if !sat(e, st) {
                return Slot::Node(PNode::Delay(p_ret(st.clone())));
            }
            let w = Arc::new(s.clone());
            let next = match mode {
                Preemptive => {
                    let (body, sched2) = (body.clone(), sched.clone());
                    let k = TK::new(move |st| pre_seq(&w, pre_eval(&body, st, &sched2, mode), &sched2, mode));
                    p_yield(k, st.clone())
                }
                Cooperative => pre_seq(&w, pre_eval(body, st, sched, mode), sched, mode),
            };
            Slot::Node(PNode::Delay(next))
        }
        Stmt::Par(s0, s1) => Slot::Alias(match sched.next() {
            Choice::L => merge(
                Side::Right,
                pre_k(s1, sched, mode),
                pre_eval(s0, st, sched, mode),
                sched,
                mode,
            ),
            Choice::R => merge(
                Side::Left,
                pre_k(s0, sched, mode),
                pre_eval(s1, st, sched, mode),
                sched,
                mode,
            ),
        }),
        Stmt::Atomic(body) => Slot::Alias(pre_close(pre_eval(body, st, sched, mode))),
        Stmt::Await(e, body) => {
            let next = if sat(e, st) {
                pre_close(pre_eval(body, st, sched, mode))
            } else {
                p_yield(pre_k(s, sched, mode), st.clone())
            };
            Slot::Node(PNode::Delay(next))
        }
        Stmt::ParL(..) | Stmt::ParR(..) | Stmt::Suspend => {
            panic!("trace evaluation of auxiliary statement `{s}`")
        }
    }
}

fn pre_seq(s: &Arc<Stmt>, t: Pre, sched: &Schedule, mode: SchedMode) -> Pre {
    let (s, sched) = (s.clone(), sched.clone());
    Thunk::lazy(None, move || match t.force() {
        PNode::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(PNode::Yield(pre_k(&s, &sched, mode), st.clone())),
            SchedMode::Cooperative => Slot::Alias(pre_eval(&s, st, &sched, mode)),
        },
        PNode::Delay(next) => Slot::Node(PNode::Delay(pre_seq(&s, next.clone(), &sched, mode))),
        PNode::Yield(k, st) => {
            let (k, s2, sched2) = (k.clone(), s.clone(), sched.clone());
            let k = TK::new(move |st| pre_seq(&s2, k.apply(st), &sched2, mode));
            Slot::Node(PNode::Yield(k, st.clone()))
        }
    })
}

#[derive(Clone, Copy)]
enum Side {
    Right,
    Left,
}

/// Resuming two suspended components from `σ′`: one more choice decides
/// which of them moves first.
fn interleave(a: TK, b: TK, sched: &Schedule, mode: SchedMode) -> TK {
    let sched = sched.clone();
    TK::new(move |st| {
        let (a, b, sched, st) = (a.clone(), b.clone(), sched.clone(), st.clone());
        Thunk::lazy(None, move || {
            Slot::Alias(match sched.next() {
                Choice::L => merge(Side::Right, b.clone(), a.apply(&st), &sched, mode),
                Choice::R => merge(Side::Left, a.clone(), b.apply(&st), &sched, mode),
            })
        })
    })
}

fn merge(side: Side, k: TK, t: Pre, sched: &Schedule, mode: SchedMode) -> Pre {
    let sched = sched.clone();
    Thunk::lazy(None, move || match t.force() {
        PNode::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(PNode::Yield(k.clone(), st.clone())),
            SchedMode::Cooperative => Slot::Alias(k.apply(st)),
        },
        PNode::Delay(next) => Slot::Node(PNode::Delay(merge(side, k.clone(), next.clone(), &sched, mode))),
        PNode::Yield(k2, st) => {
            let both = match side {
                Side::Right => interleave(k2.clone(), k.clone(), &sched, mode),
                Side::Left => interleave(k.clone(), k2.clone(), &sched, mode),
            };
            Slot::Node(PNode::Yield(both, st.clone()))
        }
    })
}

/// Closing inside `atomic` and `await`: the suspended computation is
/// resumed at once in its release state. No resume state is consumed.
fn pre_close(t: Pre) -> Pre {
    Thunk::lazy(None, move || {
        Slot::Node(match t.force() {
            PNode::Ret(st) => PNode::Ret(st.clone()),
            PNode::Delay(next) => PNode::Delay(pre_close(next.clone())),
            PNode::Yield(k, st) => PNode::Delay(pre_close(k.apply(st))),
        })
    })
}

fn resolve(t: Pre, resume: ResumeOracle) -> GTrace {
    Thunk::lazy(None, move || {
        Slot::Node(match t.force() {
            PNode::Ret(st) => GTNode::Ret(st.clone()),
            PNode::Delay(next) => GTNode::Delay(resolve(next.clone(), resume.clone())),
            PNode::Yield(k, st) => {
                let back = resume.next_or(st);
                GTNode::Yield {
                    then: resolve(k.apply(&back), resume.clone()),
                    resume: back,
                    state: st.clone(),
                }
            }
        })
    })
}

/// Giant-step trace evaluation. The schedule resolves parallel compositions
/// and the interleaving of suspended components; each yield reads the state
/// control comes back in from `resume`.
pub fn trace_eval_g(s: &Stmt, st: &State, sched: &Schedule, resume: &ResumeOracle, mode: SchedMode) -> GTrace {
    resolve(pre_eval(s, st, sched, mode), resume.clone())
}

/// Materializes a giant-step trace; a yield is shown with its single
/// resume state.
pub fn gtrace_prefix(t: &GTrace, depth: usize) -> FiniteTree {
    if depth == 0 {
        return FiniteTree::Pruned;
    }
    match t.force() {
        GTNode::Ret(st) => FiniteTree::Ret(st.clone()),
        GTNode::Delay(next) => FiniteTree::Delay(Box::new(gtrace_prefix(next, depth - 1))),
        GTNode::Yield { resume, then, state } => FiniteTree::YieldK {
            state: state.clone(),
            branches: vec![(resume.clone(), gtrace_prefix(then, depth - 1))],
        },
    }
}

/// Giant-step counterpart of [`is_path_of`]: at a yield, the release
/// states must agree and the trace continues as the resumption's
/// continuation applied at the recorded resume state.
pub fn is_path_of_g(t: &GTrace, r: &GRes, depth: usize) -> bool {
    path_of_g(t, r, depth, &mut HashSet::new())
}

fn path_of_g(t: &GTrace, r: &GRes, depth: usize, refuted: &mut HashSet<(usize, usize, usize)>) -> bool {
    if depth == 0 {
        return true;
    }
    match (t.force(), r.force()) {
        (_, GNode::Plus(a, b)) => {
            let id = (t.addr(), r.addr(), depth);
            if refuted.contains(&id) {
                return false;
            }
            let ok = path_of_g(t, a, depth - 1, refuted) || path_of_g(t, b, depth - 1, refuted);
            if !ok {
                refuted.insert(id);
            }
            ok
        }
        (GTNode::Ret(s), GNode::Ret(st)) => s == st,
        (GTNode::Delay(t1), GNode::Delay(r1)) => path_of_g(t1, r1, depth - 1, refuted),
        (GTNode::Yield { resume, then, state }, GNode::Yield(k, st)) => {
            state == st && path_of_g(then, &k.apply(resume), depth - 1, refuted)
        }
        _ => false,
    }
}

/// Closing a giant-step trace needs every resume state to equal its release
/// state; anything else is not a closed-system run.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot close trace at layer {layer}: released in {release} but resumed in {resume}")]
pub struct StuckClosing {
    pub layer: usize,
    pub release: State,
    pub resume: State,
}

/// Closes a giant-step trace down to `depth` layers of the result.
pub fn close_gtrace(t: &GTrace, depth: usize) -> Result<FiniteTree, StuckClosing> {
    let mut delays = 0;
    let mut cur = t.clone();
    let leaf = loop {
        if delays == depth {
            break FiniteTree::Pruned;
        }
        let next = match cur.force() {
            GTNode::Ret(st) => break FiniteTree::Ret(st.clone()),
            GTNode::Delay(next) => next.clone(),
            GTNode::Yield { resume, then, state } => {
                if resume != state {
                    return Err(StuckClosing {
                        layer: delays,
                        release: state.clone(),
                        resume: resume.clone(),
                    });
                }
                then.clone()
            }
        };
        delays += 1;
        cur = next;
    };
    Ok((0..delays).fold(leaf, |acc, _| FiniteTree::Delay(Box::new(acc))))
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::L => "L",
            Choice::R => "R",
        })
    }
}
