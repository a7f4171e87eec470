//! Lazy, possibly infinite resumption trees.
//!
//! A resumption is a handle to a memoizing cell. The first [`Thunk::force`]
//! runs the cell's producer, which builds exactly one layer (a [`Node`])
//! whose children are again unforced cells; later forcings return the cached
//! layer. A producer may also answer "this cell is the same tree as that
//! one" ([`Slot::Alias`]), which `force` follows iteratively.
//!
//! Cells built by the evaluators carry a [`Key`] naming the computation
//! that produced them (for example "big-step evaluation of `s` from `σ`").
//! Two cells with equal keys denote the same tree. The equivalence checkers
//! use keys only to avoid re-checking pairs they have already checked.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::lang::{SchedMode, State, Stmt};

/// Names the function that produced a cell, applied at [`Key::state`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Recipe {
    /// Big-step evaluation of a statement.
    Eval(SchedMode, Stmt),
    /// Closing of the tree named by the inner recipe.
    Close(Arc<Recipe>),
    /// Maximal multi-step reduction.
    Mmred(SchedMode, Stmt),
    /// Giant-step evaluation.
    EvalG(SchedMode, Stmt),
    /// Maximal multi-step reduction under yields.
    Gmmred(SchedMode, Stmt),
    /// Giant-step sequential extension by a statement of the tree named by
    /// the inner recipe.
    SeqG(SchedMode, Stmt, Arc<Recipe>),
    /// `λσ. mergeR k₁ (k₀ σ) + mergeL k₀ (k₁ σ)` for continuations `k₀`, `k₁`.
    Interleave(SchedMode, Arc<Recipe>, Arc<Recipe>),
    /// Conversion of a giant-step tree to a big-step tree.
    Flatten(Arc<Recipe>),
    /// `ret σ`.
    Ret,
    /// Sequential or parallel extension by a statement of the tree named by
    /// the inner recipe.
    Extend(Attach, SchedMode, Stmt, Arc<Recipe>),
    /// Giant-step merge of a continuation (first recipe) into a tree
    /// (second recipe).
    Merge(Attach, SchedMode, Arc<Recipe>, Arc<Recipe>),
    /// `δ∞`; the state is irrelevant.
    Diverge,
    /// A continuation built from an arbitrary closure. Each one is distinct.
    Opaque(u64),
}

/// How a statement or continuation is attached to a running computation:
/// after it (`;`), or as the right or left component of `∥`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attach {
    Seq,
    ParR,
    ParL,
}

impl Recipe {
    pub fn opaque() -> Recipe {
        static NEXT: AtomicU64 = AtomicU64::new(0);
        Recipe::Opaque(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Key {
    pub recipe: Arc<Recipe>,
    pub state: State,
}

impl Key {
    pub fn new(recipe: Recipe, state: State) -> Key {
        Key {
            recipe: Arc::new(recipe),
            state,
        }
    }
}

/// What a producer returns: the layer itself, or another cell denoting the
/// same tree.
pub enum Slot<N> {
    Node(N),
    Alias(Thunk<N>),
}

type Producer<N> = Box<dyn FnOnce() -> Slot<N> + Send>;

struct Cell<N> {
    key: Option<Key>,
    slot: OnceLock<Slot<N>>,
    producer: Mutex<Option<Producer<N>>>,
}

/// Shared handle to a lazily computed tree layer. Safe to force from
/// several threads; the producer runs at most once.
pub struct Thunk<N>(Arc<Cell<N>>);

impl<N> Clone for Thunk<N> {
    fn clone(&self) -> Self {
        Thunk(self.0.clone())
    }
}

impl<N> Thunk<N> {
    pub fn lazy(key: Option<Key>, producer: impl FnOnce() -> Slot<N> + Send + 'static) -> Self {
        Thunk(Arc::new(Cell {
            key,
            slot: OnceLock::new(),
            producer: Mutex::new(Some(Box::new(producer))),
        }))
    }

    /// An already forced cell.
    pub fn ready(key: Option<Key>, node: N) -> Self {
        Thunk(Arc::new(Cell {
            key,
            slot: OnceLock::from(Slot::Node(node)),
            producer: Mutex::new(None),
        }))
    }

    fn slot(&self) -> &Slot<N> {
        self.0.slot.get_or_init(|| {
            let producer = self
                .0
                .producer
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .take()
                .expect("producer of an unforced cell is present");
            producer()
        })
    }

    /// The top layer. Follows aliases without recursion.
    pub fn force(&self) -> &N {
        let mut cur = self;
        loop {
            match cur.slot() {
                Slot::Node(n) => return n,
                Slot::Alias(next) => cur = next,
            }
        }
    }

    pub fn key(&self) -> Option<&Key> {
        self.0.key.as_ref()
    }

    /// The first key along the alias chain starting at this cell. Forces
    /// unkeyed cells to find their alias targets.
    pub fn find_key(&self) -> Option<&Key> {
        let mut cur = self;
        loop {
            if let Some(k) = cur.key() {
                return Some(k);
            }
            match cur.slot() {
                Slot::Node(_) => return None,
                Slot::Alias(next) => cur = next,
            }
        }
    }

    /// Key of a tree derived from this one by `wrap`, when this cell has a
    /// key. Never forces.
    pub fn derived_key(&self, wrap: impl FnOnce(Arc<Recipe>) -> Recipe) -> Option<Key> {
        self.key().map(|k| Key {
            recipe: Arc::new(wrap(k.recipe.clone())),
            state: k.state.clone(),
        })
    }

    /// Whether the cell has been forced already.
    pub fn is_forced(&self) -> bool {
        self.0.slot.get().is_some()
    }

    /// Identity of the underlying cell.
    pub fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Identity of the cell, stable while any handle to it is alive.
    pub fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as *const () as usize
    }
}

/// One layer of a big-step resumption.
#[derive(Clone)]
pub enum Node {
    Ret(State),
    Delay(Res),
    Plus(Res, Res),
    Yield(Stmt, State),
}

pub type Res = Thunk<Node>;

impl Res {
    pub fn ret(st: State) -> Res {
        Thunk::ready(Some(ret_key(st.clone())), Node::Ret(st))
    }

    pub fn delay(r: Res) -> Res {
        Thunk::ready(None, Node::Delay(r))
    }

    pub fn plus(l: Res, r: Res) -> Res {
        Thunk::ready(None, Node::Plus(l, r))
    }

    pub fn yield_(s: Stmt, st: State) -> Res {
        Thunk::ready(None, Node::Yield(s, st))
    }

    /// `δⁿ r`.
    pub fn delays(n: usize, r: Res) -> Res {
        (0..n).fold(r, |acc, _| Res::delay(acc))
    }
}

fn ret_key(st: State) -> Key {
    static RET: OnceLock<Arc<Recipe>> = OnceLock::new();
    Key {
        recipe: RET.get_or_init(|| Arc::new(Recipe::Ret)).clone(),
        state: st,
    }
}

/// `δ∞ = δ δ∞`. Every layer is produced on demand.
pub fn delta_inf() -> Res {
    Thunk::lazy(Some(Key::new(Recipe::Diverge, State::new())), || {
        Slot::Node(Node::Delay(delta_inf()))
    })
}

/// A function from states to giant-step resumptions. Results are cached per
/// state, so applying a continuation twice at the same state gives the same
/// cell.
#[derive(Clone)]
pub struct Continuation {
    recipe: Arc<Recipe>,
    f: Arc<dyn Fn(&State) -> GRes + Send + Sync>,
    cache: Arc<Mutex<HashMap<State, GRes>>>,
}

impl Continuation {
    /// A continuation from an arbitrary closure.
    pub fn new(f: impl Fn(&State) -> GRes + Send + Sync + 'static) -> Continuation {
        Continuation::with_recipe(Arc::new(Recipe::opaque()), f)
    }

    /// A continuation known to compute `recipe` at its argument. Results
    /// carry the key `recipe @ σ`.
    pub fn with_recipe(recipe: Arc<Recipe>, f: impl Fn(&State) -> GRes + Send + Sync + 'static) -> Continuation {
        Continuation {
            recipe,
            f: Arc::new(f),
            cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn apply(&self, st: &State) -> GRes {
        if let Some(r) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(st) {
            return r.clone();
        }
        let key = Key {
            recipe: self.recipe.clone(),
            state: st.clone(),
        };
        let mut r = (self.f)(st);
        if r.key() != Some(&key) {
            let inner = r;
            r = Thunk::lazy(Some(key), move || Slot::Alias(inner));
        }
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(st.clone())
            .or_insert(r)
            .clone()
    }

    pub fn recipe(&self) -> &Arc<Recipe> {
        &self.recipe
    }
}

impl fmt::Debug for Continuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Continuation({:?})", self.recipe)
    }
}

/// One layer of a giant-step resumption.
#[derive(Clone)]
pub enum GNode {
    Ret(State),
    Delay(GRes),
    Plus(GRes, GRes),
    Yield(Continuation, State),
}

pub type GRes = Thunk<GNode>;

impl GRes {
    pub fn ret(st: State) -> GRes {
        Thunk::ready(Some(ret_key(st.clone())), GNode::Ret(st))
    }

    pub fn delay(r: GRes) -> GRes {
        Thunk::ready(None, GNode::Delay(r))
    }

    pub fn plus(l: GRes, r: GRes) -> GRes {
        Thunk::ready(None, GNode::Plus(l, r))
    }

    pub fn yield_(k: Continuation, st: State) -> GRes {
        Thunk::ready(None, GNode::Yield(k, st))
    }

    pub fn delays(n: usize, r: GRes) -> GRes {
        (0..n).fold(r, |acc, _| GRes::delay(acc))
    }
}

/// A fully materialized prefix of a resumption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiniteTree {
    Ret(State),
    Delay(Box<FiniteTree>),
    Plus(Box<FiniteTree>, Box<FiniteTree>),
    /// Big-step yield with its residual statement.
    Yield(Stmt, State),
    /// Giant-step yield, with the continuation opened at each probe state.
    YieldK {
        state: State,
        branches: Vec<(State, FiniteTree)>,
    },
    /// The depth bound was reached here.
    Pruned,
}

/// Materializes `r` down to `depth` layers; layers at distance `depth` from
/// the root become [`FiniteTree::Pruned`].
pub fn prefix(r: &Res, depth: usize) -> FiniteTree {
    if depth == 0 {
        return FiniteTree::Pruned;
    }
    match r.force() {
        Node::Ret(st) => FiniteTree::Ret(st.clone()),
        Node::Yield(s, st) => FiniteTree::Yield(s.clone(), st.clone()),
        Node::Delay(next) => FiniteTree::Delay(Box::new(prefix(next, depth - 1))),
        Node::Plus(l, rr) => FiniteTree::Plus(Box::new(prefix(l, depth - 1)), Box::new(prefix(rr, depth - 1))),
    }
}

/// Like [`prefix`]; each continuation is applied at every probe state.
pub fn prefix_g(r: &GRes, depth: usize, probes: &[State]) -> FiniteTree {
    if depth == 0 {
        return FiniteTree::Pruned;
    }
    match r.force() {
        GNode::Ret(st) => FiniteTree::Ret(st.clone()),
        GNode::Delay(next) => FiniteTree::Delay(Box::new(prefix_g(next, depth - 1, probes))),
        GNode::Plus(l, rr) => FiniteTree::Plus(
            Box::new(prefix_g(l, depth - 1, probes)),
            Box::new(prefix_g(rr, depth - 1, probes)),
        ),
        GNode::Yield(k, st) => FiniteTree::YieldK {
            state: st.clone(),
            branches: probes
                .iter()
                .map(|p| (p.clone(), prefix_g(&k.apply(p), depth - 1, probes)))
                .collect(),
        },
    }
}

impl FiniteTree {
    /// Cuts the tree at `depth`, as if it had been materialized with that
    /// bound.
    pub fn truncate(&self, depth: usize) -> FiniteTree {
        if depth == 0 {
            return FiniteTree::Pruned;
        }
        match self {
            FiniteTree::Delay(c) => FiniteTree::Delay(Box::new(c.truncate(depth - 1))),
            FiniteTree::Plus(l, r) => {
                FiniteTree::Plus(Box::new(l.truncate(depth - 1)), Box::new(r.truncate(depth - 1)))
            }
            FiniteTree::YieldK { state, branches } => FiniteTree::YieldK {
                state: state.clone(),
                branches: branches
                    .iter()
                    .map(|(p, c)| (p.clone(), c.truncate(depth - 1)))
                    .collect(),
            },
            leaf => leaf.clone(),
        }
    }

    /// Number of yield nodes of either kind.
    pub fn count_yields(&self) -> usize {
        match self {
            FiniteTree::Ret(_) | FiniteTree::Pruned => 0,
            FiniteTree::Yield(..) => 1,
            FiniteTree::Delay(c) => c.count_yields(),
            FiniteTree::Plus(l, r) => l.count_yields() + r.count_yields(),
            FiniteTree::YieldK { branches, .. } => 1 + branches.iter().map(|(_, c)| c.count_yields()).sum::<usize>(),
        }
    }

    /// Whether the tree is complete, i.e. has no pruned leaf.
    pub fn is_complete(&self) -> bool {
        match self {
            FiniteTree::Pruned => false,
            FiniteTree::Ret(_) | FiniteTree::Yield(..) => true,
            FiniteTree::Delay(c) => c.is_complete(),
            FiniteTree::Plus(l, r) => l.is_complete() && r.is_complete(),
            FiniteTree::YieldK { branches, .. } => branches.iter().all(|(_, c)| c.is_complete()),
        }
    }

    /// Text rendering, e.g. `(δ^2 ret {x=1} + δ yield ⟨skip⟩ {x=0})`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            FiniteTree::Ret(st) => {
                out.push_str("ret ");
                out.push_str(&st.to_string());
            }
            FiniteTree::Delay(_) => {
                let mut n = 0;
                let mut cur = self;
                while let FiniteTree::Delay(c) = cur {
                    n += 1;
                    cur = c;
                }
                if n == 1 {
                    out.push_str("δ ");
                } else {
                    out.push_str(&format!("δ^{n} "));
                }
                cur.render_into(out);
            }
            FiniteTree::Plus(l, r) => {
                out.push('(');
                l.render_into(out);
                out.push_str(" + ");
                r.render_into(out);
                out.push(')');
            }
            FiniteTree::Yield(s, st) => {
                out.push_str(&format!("yield ⟨{s}⟩ {st}"));
            }
            FiniteTree::YieldK { state, branches } => {
                out.push_str(&format!("yield {state} ["));
                for (i, (p, c)) in branches.iter().enumerate() {
                    if i > 0 {
                        out.push_str("; ");
                    }
                    out.push_str(&format!("σ′={p} ↦ "));
                    c.render_into(out);
                }
                out.push(']');
            }
            FiniteTree::Pruned => out.push('…'),
        }
    }

    /// Structured form for machine consumption.
    pub fn to_record(&self) -> Record {
        self.record(None)
    }

    fn record(&self, probe: Option<&State>) -> Record {
        let probe = probe.map(|p| p.to_string());
        let mut rec = Record {
            kind: "",
            state: None,
            stmt: None,
            probe,
            children: Vec::new(),
        };
        match self {
            FiniteTree::Ret(st) => {
                rec.kind = "ret";
                rec.state = Some(st.to_string());
            }
            FiniteTree::Delay(c) => {
                rec.kind = "delay";
                rec.children.push(c.record(None));
            }
            FiniteTree::Plus(l, r) => {
                rec.kind = "plus";
                rec.children.push(l.record(None));
                rec.children.push(r.record(None));
            }
            FiniteTree::Yield(s, st) => {
                rec.kind = "yield";
                rec.state = Some(st.to_string());
                rec.stmt = Some(s.to_string());
            }
            FiniteTree::YieldK { state, branches } => {
                rec.kind = "yield";
                rec.state = Some(state.to_string());
                rec.children = branches.iter().map(|(p, c)| c.record(Some(p))).collect();
            }
            FiniteTree::Pruned => rec.kind = "pruned",
        }
        rec
    }
}

impl fmt::Display for FiniteTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Serializable mirror of [`FiniteTree`]. A child of a giant-step yield
/// records the probe state its continuation was applied at.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stmt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Record>,
}

/// Whether the first `depth` layers of `r` are free of yields. Equivalent
/// to `prefix(r, depth).count_yields() == 0` but shares work between
/// subtrees with equal keys, so it stays cheap on trees whose prefix is
/// exponentially large.
pub fn yield_free(r: &Res, depth: usize) -> bool {
    let mut seen: HashMap<Key, usize> = HashMap::new();
    yield_free_in(r, depth, &mut seen)
}

fn yield_free_in(r: &Res, depth: usize, seen: &mut HashMap<Key, usize>) -> bool {
    if depth == 0 {
        return true;
    }
    if let Some(k) = r.find_key() {
        if seen.get(k).is_some_and(|&d| d >= depth) {
            return true;
        }
    }
    let ok = match r.force() {
        Node::Ret(_) => true,
        Node::Yield(..) => false,
        Node::Delay(next) => yield_free_in(next, depth - 1, seen),
        Node::Plus(l, rr) => yield_free_in(l, depth - 1, seen) && yield_free_in(rr, depth - 1, seen),
    };
    if ok {
        if let Some(k) = r.find_key() {
            let e = seen.entry(k.clone()).or_insert(0);
            *e = (*e).max(depth);
        }
    }
    ok
}

/// Giant-step analogue of [`yield_free`]. Continuations never need opening:
/// any yield already fails.
pub fn yield_free_g(r: &GRes, depth: usize) -> bool {
    let mut seen: HashMap<Key, usize> = HashMap::new();
    yield_free_g_in(r, depth, &mut seen)
}

fn yield_free_g_in(r: &GRes, depth: usize, seen: &mut HashMap<Key, usize>) -> bool {
    if depth == 0 {
        return true;
    }
    if let Some(k) = r.find_key() {
        if seen.get(k).is_some_and(|&d| d >= depth) {
            return true;
        }
    }
    let ok = match r.force() {
        GNode::Ret(_) => true,
        GNode::Yield(..) => false,
        GNode::Delay(next) => yield_free_g_in(next, depth - 1, seen),
        GNode::Plus(l, rr) => yield_free_g_in(l, depth - 1, seen) && yield_free_g_in(rr, depth - 1, seen),
    };
    if ok {
        if let Some(k) = r.find_key() {
            let e = seen.entry(k.clone()).or_insert(0);
            *e = (*e).max(depth);
        }
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn x(v: i64) -> State {
        State::from_pairs(&[("x", v)])
    }

    #[test]
    fn force_ret() {
        assert!(matches!(Res::ret(x(5)).force(), Node::Ret(s) if *s == x(5)));
    }

    #[test]
    fn delta_inf_unfolds_to_delays() {
        assert!(matches!(delta_inf().force(), Node::Delay(_)));
        let p = prefix(&delta_inf(), 3);
        let want = FiniteTree::Delay(Box::new(FiniteTree::Delay(Box::new(FiniteTree::Delay(Box::new(
            FiniteTree::Pruned,
        ))))));
        assert_eq!(p, want);
    }

    #[test]
    fn peeling_one_delay() {
        let r = Res::delays(3, Res::ret(x(1)));
        match r.force() {
            Node::Delay(inner) => assert_eq!(prefix(inner, 10), prefix(&Res::delays(2, Res::ret(x(1))), 10)),
            _ => panic!("expected a delay"),
        }
    }

    #[test]
    fn prefix_bounds() {
        assert_eq!(prefix(&Res::ret(x(1)), 0), FiniteTree::Pruned);
        assert_eq!(
            prefix(&Res::delay(Res::ret(x(1))), 2),
            FiniteTree::Delay(Box::new(FiniteTree::Ret(x(1))))
        );
    }

    #[test]
    fn producer_runs_once() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let r: Res = Thunk::lazy(None, move || {
            c.fetch_add(1, Ordering::SeqCst);
            Slot::Node(Node::Ret(State::new()))
        });
        let r2 = r.clone();
        let h = std::thread::spawn(move || {
            r2.force();
        });
        r.force();
        h.join().unwrap();
        r.force();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn aliases_are_transparent() {
        let target = Res::delay(Res::ret(x(2)));
        let t = target.clone();
        let r: Res = Thunk::lazy(None, move || Slot::Alias(t));
        assert_eq!(prefix(&r, 5), prefix(&target, 5));
        match (r.force(), target.force()) {
            (Node::Delay(a), Node::Delay(b)) => assert!(a.ptr_eq(b)),
            _ => panic!("expected delays"),
        }
    }

    #[test]
    fn rendering() {
        let r = Res::plus(
            Res::delays(5, Res::ret(x(5))),
            Res::delays(
                2,
                Res::plus(Res::delays(3, Res::ret(x(3))), Res::delays(3, Res::ret(x(1)))),
            ),
        );
        assert_eq!(
            prefix(&r, 20).render(),
            "(δ^5 ret {x=5} + δ^2 (δ^3 ret {x=3} + δ^3 ret {x=1}))"
        );
        assert_eq!(prefix(&delta_inf(), 2).render(), "δ^2 …");
        let y = Res::delay(Res::yield_(Stmt::Skip, x(0)));
        assert_eq!(prefix(&y, 4).render(), "δ yield ⟨skip⟩ {x=0}");
    }

    #[test]
    fn giant_prefix_opens_continuations_at_probes() {
        let k = Continuation::new(|st| GRes::delay(GRes::ret(st.clone())));
        let r = GRes::delay(GRes::yield_(k, x(1)));
        assert_eq!(
            prefix_g(&r, 1, &[x(7)]),
            FiniteTree::Delay(Box::new(FiniteTree::Pruned))
        );
        assert_eq!(
            prefix_g(&r, 10, &[x(7)]).render(),
            "δ yield {x=1} [σ′={x=7} ↦ δ ret {x=7}]"
        );
        assert_eq!(prefix_g(&GRes::ret(x(0)), 5, &[x(3)]), FiniteTree::Ret(x(0)));
    }

    #[test]
    fn structured_records() {
        let t = FiniteTree::Plus(
            Box::new(FiniteTree::Ret(x(1))),
            Box::new(FiniteTree::Yield(Stmt::Skip, x(2))),
        );
        let json = serde_json::to_value(t.to_record()).unwrap();
        assert_eq!(json["kind"], "plus");
        assert_eq!(json["children"][0]["state"], "{x=1}");
        assert_eq!(json["children"][1]["stmt"], "skip");
    }

    #[test]
    fn truncation_matches_smaller_prefix() {
        let r = Res::plus(Res::delays(4, Res::ret(x(1))), delta_inf());
        for d in 0..8 {
            assert_eq!(prefix(&r, d + 1).truncate(d), prefix(&r, d));
        }
    }
}
