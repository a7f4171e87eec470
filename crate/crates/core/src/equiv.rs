//! Bounded equivalence checking of resumptions: strong bisimilarity (for
//! both kinds of resumption), convergence, divergence and
//! termination-sensitive weak bisimilarity.
//!
//! The coinductive relations are checked to a finite depth; convergence,
//! which is inductive, is searched with a finite amount of fuel. Results are
//! three-valued: a refutation carries the path to the mismatch, and running
//! out of fuel is reported separately from holding.

use std::collections::HashMap;
use std::fmt;

use crate::lang::{State, Stmt};
use crate::resumption::{GNode, GRes, Key, Node, Res};

/// One move from a node to a child, as recorded in counterexample paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Into the child of a delay on both sides.
    Delay,
    PlusLeft,
    PlusRight,
    /// Into the continuations of a giant-step yield, applied at a probe.
    Probe(State),
    /// Remove this many initial delays from the left resumption only.
    StripLeft(usize),
    /// Remove this many initial delays from the right resumption only.
    StripRight(usize),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Delay => f.write_str("δ"),
            Step::PlusLeft => f.write_str("+L"),
            Step::PlusRight => f.write_str("+R"),
            Step::Probe(st) => write!(f, "@{st}"),
            Step::StripLeft(n) => write!(f, "↓L{n}"),
            Step::StripRight(n) => write!(f, "↓R{n}"),
        }
    }
}

fn show_path(path: &[Step]) -> String {
    if path.is_empty() {
        return "ε".to_string();
    }
    path.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Fuel,
    Depth,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No difference within the first `depth` layers.
    Holds { depth: usize },
    /// A difference, reached by following `path` from both roots.
    Fails { path: Vec<Step>, reason: String },
    /// Neither established nor refuted before a budget ran out.
    Unknown { budget: Budget, at: Vec<Step> },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { depth } => write!(f, "HOLDS(depth={depth})"),
            Verdict::Fails { path, reason } => {
                write!(f, "FAILS(path={}, reason={reason})", show_path(path))
            }
            Verdict::Unknown { budget, at } => {
                let b = match budget {
                    Budget::Fuel => "fuel",
                    Budget::Depth => "depth",
                };
                write!(f, "UNKNOWN(budget={b}, at={})", show_path(at))
            }
        }
    }
}

/// How residual statements in yields are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StmtEquiv {
    /// Structural equality.
    #[default]
    Syntactic,
    /// Structural equality after removing `skip;` prefixes. Under
    /// cooperative scheduling `skip; s` and `s` behave identically from
    /// every state, and the small-step semantics leaves such prefixes in
    /// residuals where big-step evaluation does not.
    SkipPrefix,
}

impl StmtEquiv {
    fn eq(self, a: &Stmt, b: &Stmt) -> bool {
        match self {
            StmtEquiv::Syntactic => a == b,
            StmtEquiv::SkipPrefix => a == b || a.strip_skip_prefixes() == b.strip_skip_prefixes(),
        }
    }
}

enum Outcome {
    Holds,
    Fails(Vec<Step>, String),
    Unknown(Budget, Vec<Step>),
}

impl Outcome {
    /// Combines the outcomes of two independent obligations. A refutation
    /// wins over an exhausted budget.
    fn and_then(self, next: impl FnOnce() -> Outcome) -> Outcome {
        match self {
            Outcome::Fails(..) => self,
            Outcome::Holds => next(),
            Outcome::Unknown(..) => match next() {
                f @ Outcome::Fails(..) => f,
                _ => self,
            },
        }
    }

    fn into_verdict(self, depth: usize) -> Verdict {
        match self {
            Outcome::Holds => Verdict::Holds { depth },
            Outcome::Fails(path, reason) => Verdict::Fails { path, reason },
            Outcome::Unknown(budget, at) => Verdict::Unknown { budget, at },
        }
    }
}

fn describe(n: &Node) -> String {
    match n {
        Node::Ret(st) => format!("ret {st}"),
        Node::Delay(_) => "δ".to_string(),
        Node::Plus(..) => "+".to_string(),
        Node::Yield(s, st) => format!("yield ⟨{s}⟩ {st}"),
    }
}

fn describe_g(n: &GNode) -> String {
    match n {
        GNode::Ret(st) => format!("ret {st}"),
        GNode::Delay(_) => "δ".to_string(),
        GNode::Plus(..) => "+".to_string(),
        GNode::Yield(_, st) => format!("yield {st}"),
    }
}

/// Remembers, for pairs of keyed cells, the largest depth to which they are
/// known to be related.
#[derive(Default)]
struct Memo(HashMap<(Key, Key), usize>);

impl Memo {
    fn pair<N>(a: &crate::resumption::Thunk<N>, b: &crate::resumption::Thunk<N>) -> Option<(Key, Key)> {
        Some((a.find_key()?.clone(), b.find_key()?.clone()))
    }

    fn known(&self, pair: &Option<(Key, Key)>, depth: usize) -> bool {
        pair.as_ref().and_then(|p| self.0.get(p)).is_some_and(|&d| d >= depth)
    }

    fn record(&mut self, pair: Option<(Key, Key)>, depth: usize) {
        if let Some(p) = pair {
            let e = self.0.entry(p).or_insert(0);
            *e = (*e).max(depth);
        }
    }
}

/// Strong bisimilarity to `depth` layers, comparing yield statements
/// structurally. Holds exactly when `prefix(a, depth) == prefix(b, depth)`.
pub fn strong_bisim(a: &Res, b: &Res, depth: usize) -> Verdict {
    strong_bisim_with(a, b, depth, StmtEquiv::Syntactic)
}

/// [`strong_bisim`] with a chosen comparison of yield statements.
pub fn strong_bisim_with(a: &Res, b: &Res, depth: usize, eq: StmtEquiv) -> Verdict {
    let mut memo = Memo::default();
    let mut path = Vec::new();
    strong(a, b, depth, eq, &mut path, &mut memo).into_verdict(depth)
}

fn strong(a: &Res, b: &Res, depth: usize, eq: StmtEquiv, path: &mut Vec<Step>, memo: &mut Memo) -> Outcome {
    if depth == 0 {
        return Outcome::Holds;
    }
    let pair = Memo::pair(a, b);
    if memo.known(&pair, depth) {
        return Outcome::Holds;
    }
    let out = match (a.force(), b.force()) {
        (Node::Ret(s), Node::Ret(t)) if s == t => Outcome::Holds,
        (Node::Yield(s, st), Node::Yield(t, tt)) if st == tt && eq.eq(s, t) => Outcome::Holds,
        (Node::Delay(x), Node::Delay(y)) => descend(path, Step::Delay, |p| strong(x, y, depth - 1, eq, p, memo)),
        (Node::Plus(a0, a1), Node::Plus(b0, b1)) => {
            descend(path, Step::PlusLeft, |p| strong(a0, b0, depth - 1, eq, p, memo))
                .and_then(|| descend(path, Step::PlusRight, |p| strong(a1, b1, depth - 1, eq, p, memo)))
        }
        (x, y) => Outcome::Fails(path.clone(), format!("{} vs {}", describe(x), describe(y))),
    };
    if matches!(out, Outcome::Holds) {
        memo.record(pair, depth);
    }
    out
}

fn descend(path: &mut Vec<Step>, step: Step, f: impl FnOnce(&mut Vec<Step>) -> Outcome) -> Outcome {
    path.push(step);
    let out = f(path);
    path.pop();
    out
}

/// Strong bisimilarity of giant-step resumptions to `depth` layers, where
/// the continuations of two yields in the same state must be related at
/// every probe state.
pub fn strong_bisim_g(a: &GRes, b: &GRes, depth: usize, probes: &[State]) -> Verdict {
    let mut memo = Memo::default();
    let mut path = Vec::new();
    strong_g(a, b, depth, probes, &mut path, &mut memo).into_verdict(depth)
}

fn strong_g(a: &GRes, b: &GRes, depth: usize, probes: &[State], path: &mut Vec<Step>, memo: &mut Memo) -> Outcome {
    if depth == 0 {
        return Outcome::Holds;
    }
    let pair = Memo::pair(a, b);
    if memo.known(&pair, depth) {
        return Outcome::Holds;
    }
    let out = match (a.force(), b.force()) {
        (GNode::Ret(s), GNode::Ret(t)) if s == t => Outcome::Holds,
        (GNode::Delay(x), GNode::Delay(y)) => {
            descend(path, Step::Delay, |p| strong_g(x, y, depth - 1, probes, p, memo))
        }
        (GNode::Plus(a0, a1), GNode::Plus(b0, b1)) => {
            descend(path, Step::PlusLeft, |p| strong_g(a0, b0, depth - 1, probes, p, memo))
                .and_then(|| descend(path, Step::PlusRight, |p| strong_g(a1, b1, depth - 1, probes, p, memo)))
        }
        (GNode::Yield(k, st), GNode::Yield(k2, st2)) if st == st2 => {
            let mut out = Outcome::Holds;
            for probe in probes {
                out = out.and_then(|| {
                    descend(path, Step::Probe(probe.clone()), |p| {
                        strong_g(&k.apply(probe), &k2.apply(probe), depth - 1, probes, p, memo)
                    })
                });
                if matches!(out, Outcome::Fails(..)) {
                    break;
                }
            }
            out
        }
        (x, y) => Outcome::Fails(path.clone(), format!("{} vs {}", describe_g(x), describe_g(y))),
    };
    if matches!(out, Outcome::Holds) {
        memo.record(pair, depth);
    }
    out
}

/// Result of searching for convergence.
#[derive(Clone)]
pub enum Convergence {
    /// `r ↓ to`, stripping `delays` delays in total.
    Converged { to: Res, delays: usize },
    /// The fuel ran out while still stripping delays at `at`.
    Unknown { at: Vec<Step> },
}

impl Convergence {
    pub fn converged(&self) -> Option<&Res> {
        match self {
            Convergence::Converged { to, .. } => Some(to),
            Convergence::Unknown { .. } => None,
        }
    }
}

/// Convergence `r ↓ r′`: initial delays are removed until a `ret`, `yield`
/// or choice is reached, and under a choice both alternatives must
/// converge in turn. At most `fuel` delays are removed in total.
pub fn converges(r: &Res, fuel: usize) -> Convergence {
    let mut left = fuel;
    let mut path = Vec::new();
    match converge_in(r, &mut left, &mut path) {
        Ok(to) => Convergence::Converged {
            to,
            delays: fuel - left,
        },
        Err(at) => Convergence::Unknown { at },
    }
}

fn converge_in(r: &Res, fuel: &mut usize, path: &mut Vec<Step>) -> Result<Res, Vec<Step>> {
    let mut cur = r.clone();
    loop {
        let next = match cur.force() {
            Node::Ret(_) | Node::Yield(..) => return Ok(cur),
            Node::Plus(a, b) => {
                path.push(Step::PlusLeft);
                let a = converge_in(a, fuel, path)?;
                path.pop();
                path.push(Step::PlusRight);
                let b = converge_in(b, fuel, path)?;
                path.pop();
                return Ok(Res::plus(a, b));
            }
            Node::Delay(next) => {
                if *fuel == 0 {
                    return Err(path.clone());
                }
                *fuel -= 1;
                path.push(Step::Delay);
                next.clone()
            }
        };
        cur = next;
    }
}

/// Bounded witness of divergence: the first `fuel` layers are all delays.
pub fn diverges(r: &Res, fuel: usize) -> bool {
    let mut cur = r.clone();
    for _ in 0..fuel {
        let next = match cur.force() {
            Node::Delay(next) => next.clone(),
            _ => return false,
        };
        cur = next;
    }
    true
}

/// Removes initial delays only, stopping at the first non-delay layer.
fn strip_delays(r: &Res, fuel: usize) -> Option<(Res, usize)> {
    let mut cur = r.clone();
    for n in 0..=fuel {
        let next = match cur.force() {
            Node::Delay(next) => next.clone(),
            _ => return Some((cur, n)),
        };
        cur = next;
    }
    None
}

/// Termination-sensitive weak bisimilarity: finite runs of delays may differ
/// in length, but a converging resumption is never related to a diverging
/// one.
///
/// Two delays are matched with each other; a delay against a non-delay is
/// resolved by removing the initial delays of the delayed side (at most
/// `fuel` of them) and comparing heads. A choice is a head in its own right
/// and its alternatives are related recursively, so a choice with one
/// diverging alternative is still related to itself. `depth` bounds the
/// number of delay pairs and choices descended through.
pub fn weak_bisim(a: &Res, b: &Res, depth: usize, fuel: usize) -> Verdict {
    let mut memo = Memo::default();
    let mut path = Vec::new();
    weak(a, b, depth, fuel, &mut path, &mut memo).into_verdict(depth)
}

fn weak(a: &Res, b: &Res, depth: usize, fuel: usize, path: &mut Vec<Step>, memo: &mut Memo) -> Outcome {
    if depth == 0 {
        return Outcome::Holds;
    }
    let pair = Memo::pair(a, b);
    if memo.known(&pair, depth) {
        return Outcome::Holds;
    }
    let out = match (a.force(), b.force()) {
        (Node::Delay(x), Node::Delay(y)) => descend(path, Step::Delay, |p| weak(x, y, depth - 1, fuel, p, memo)),
        (Node::Delay(_), _) => match strip_delays(a, fuel) {
            None => Outcome::Unknown(Budget::Fuel, path.clone()),
            Some((head, n)) => descend(path, Step::StripLeft(n), |p| weak_head(&head, b, depth, fuel, p, memo)),
        },
        (_, Node::Delay(_)) => match strip_delays(b, fuel) {
            None => Outcome::Unknown(Budget::Fuel, path.clone()),
            Some((head, n)) => descend(path, Step::StripRight(n), |p| weak_head(a, &head, depth, fuel, p, memo)),
        },
        _ => weak_head(a, b, depth, fuel, path, memo),
    };
    if matches!(out, Outcome::Holds) {
        memo.record(pair, depth);
    }
    out
}

/// The head relation on converged layers.
fn weak_head(a: &Res, b: &Res, depth: usize, fuel: usize, path: &mut Vec<Step>, memo: &mut Memo) -> Outcome {
    match (a.force(), b.force()) {
        (Node::Ret(s), Node::Ret(t)) if s == t => Outcome::Holds,
        (Node::Yield(s, st), Node::Yield(t, tt)) if s == t && st == tt => Outcome::Holds,
        (Node::Plus(a0, a1), Node::Plus(b0, b1)) => {
            descend(path, Step::PlusLeft, |p| weak(a0, b0, depth - 1, fuel, p, memo))
                .and_then(|| descend(path, Step::PlusRight, |p| weak(a1, b1, depth - 1, fuel, p, memo)))
        }
        (x, y) => Outcome::Fails(path.clone(), format!("{} vs {}", describe(x), describe(y))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Follows a counterexample path from one of the two compared roots and
/// returns the node reached, or `None` if the path does not fit.
pub fn replay(r: &Res, path: &[Step], side: Side) -> Option<Res> {
    let mut cur = r.clone();
    for step in path {
        let next = match (step, cur.force()) {
            (Step::Delay, Node::Delay(n)) => n.clone(),
            (Step::PlusLeft, Node::Plus(a, _)) => a.clone(),
            (Step::PlusRight, Node::Plus(_, b)) => b.clone(),
            (Step::StripLeft(n), _) if side == Side::Left => strip_exactly(&cur, *n)?,
            (Step::StripRight(n), _) if side == Side::Right => strip_exactly(&cur, *n)?,
            (Step::StripLeft(_) | Step::StripRight(_), _) => cur.clone(),
            _ => return None,
        };
        cur = next;
    }
    Some(cur)
}

fn strip_exactly(r: &Res, n: usize) -> Option<Res> {
    let mut cur = r.clone();
    for _ in 0..n {
        let next = match cur.force() {
            Node::Delay(next) => next.clone(),
            _ => return None,
        };
        cur = next;
    }
    Some(cur)
}

/// [`replay`] for giant-step resumptions.
pub fn replay_g(r: &GRes, path: &[Step]) -> Option<GRes> {
    let mut cur = r.clone();
    for step in path {
        let next = match (step, cur.force()) {
            (Step::Delay, GNode::Delay(n)) => n.clone(),
            (Step::PlusLeft, GNode::Plus(a, _)) => a.clone(),
            (Step::PlusRight, GNode::Plus(_, b)) => b.clone(),
            (Step::Probe(st), GNode::Yield(k, _)) => k.apply(st),
            _ => return None,
        };
        cur = next;
    }
    Some(cur)
}

/// Whether two top layers disagree: different constructors, or different
/// payloads in `ret` or `yield`.
pub fn heads_differ(a: &Res, b: &Res) -> bool {
    match (a.force(), b.force()) {
        (Node::Ret(s), Node::Ret(t)) => s != t,
        (Node::Yield(s, st), Node::Yield(t, tt)) => s != t || st != tt,
        (Node::Delay(_), Node::Delay(_)) | (Node::Plus(..), Node::Plus(..)) => false,
        _ => true,
    }
}

/// [`heads_differ`] for giant-step resumptions; yields are compared by
/// state only.
pub fn heads_differ_g(a: &GRes, b: &GRes) -> bool {
    match (a.force(), b.force()) {
        (GNode::Ret(s), GNode::Ret(t)) => s != t,
        (GNode::Yield(_, s), GNode::Yield(_, t)) => s != t,
        (GNode::Delay(_), GNode::Delay(_)) | (GNode::Plus(..), GNode::Plus(..)) => false,
        _ => true,
    }
}
