//! Big-step evaluation: a statement and a state evaluate to a resumption
//! that runs the statement up to its nearest control release points.
//!
//! Every function here returns immediately with an unforced cell; the work
//! of one layer happens when that layer is forced. Each recursive call sits
//! under a constructor or behind an alias to a cell whose own layer is
//! produced in finitely many steps, so forcing always terminates.

use std::sync::Arc;

use crate::lang::{eval_expr, sat, State, Stmt};
use crate::resumption::{Attach, Key, Node, Recipe, Res, Slot, Thunk};

pub use crate::lang::SchedMode;

/// `eval s σ`.
///
/// # Panics
///
/// Forcing the result panics if `s` contains `⌊`, `⌋` or `suspend`; those
/// forms only exist inside the small-step semantics.
pub fn eval(s: &Stmt, st: &State, mode: SchedMode) -> Res {
    let key = Key::new(Recipe::Eval(mode, s.clone()), st.clone());
    let (s, st) = (s.clone(), st.clone());
    Thunk::lazy(Some(key), move || eval_layer(&s, &st, mode))
}

fn eval_layer(s: &Stmt, st: &State, mode: SchedMode) -> Slot<Node> {
    use SchedMode::*;
    match s {
        Stmt::Assign(x, e) => Slot::Node(Node::Delay(Res::ret(st.update(x, eval_expr(e, st))))),
        Stmt::Skip => Slot::Node(Node::Ret(st.clone())),
        Stmt::Seq(s0, s1) => Slot::Alias(evalseq(s1, &eval(s0, st, mode), mode)),
        Stmt::If(e, t, f) => {
            let branch = if sat(e, st) { t } else { f };
            let next = match mode {
                Preemptive => Res::yield_((**branch).clone(), st.clone()),
                Cooperative => eval(branch, st, mode),
            };
            Slot::Node(Node::Delay(next))
        }
        Stmt::While(e, body) => {
            if !sat(e, st) {
                return Slot::Node(Node::Delay(Res::ret(st.clone())));
            }
            let next = match mode {
                Preemptive => Res::yield_(Stmt::Seq(body.clone(), Arc::new(s.clone())), st.clone()),
                Cooperative => evalseq(s, &eval(body, st, mode), mode),
            };
            Slot::Node(Node::Delay(next))
        }
        Stmt::Par(s0, s1) => Slot::Node(Node::Plus(
            evalpar_r(s1, &eval(s0, st, mode), mode),
            evalpar_l(s0, &eval(s1, st, mode), mode),
        )),
        Stmt::Atomic(body) => Slot::Alias(close(&eval(body, st, mode), mode)),
        Stmt::Await(e, body) => {
            let next = if sat(e, st) {
                close(&eval(body, st, mode), mode)
            } else {
                Res::yield_(s.clone(), st.clone())
            };
            Slot::Node(Node::Delay(next))
        }
        Stmt::ParL(..) | Stmt::ParR(..) | Stmt::Suspend => {
            panic!("big-step evaluation of auxiliary statement `{s}`")
        }
    }
}

/// Residual statement after a pre-resumption released control with
/// residual `s0`.
fn grow(how: Attach, s0: &Stmt, s: &Arc<Stmt>) -> Stmt {
    let s0 = Arc::new(s0.clone());
    match how {
        Attach::Seq => Stmt::Seq(s0, s.clone()),
        Attach::ParR => Stmt::Par(s0, s.clone()),
        Attach::ParL => Stmt::Par(s.clone(), s0),
    }
}

fn extend(how: Attach, s: Arc<Stmt>, r: Res, mode: SchedMode) -> Res {
    let key = r.derived_key(|rc| Recipe::Extend(how, mode, (*s).clone(), rc));
    Thunk::lazy(key, move || match r.force() {
        Node::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(Node::Yield((*s).clone(), st.clone())),
            SchedMode::Cooperative => Slot::Alias(eval(&s, st, mode)),
        },
        Node::Delay(next) => Slot::Node(Node::Delay(extend(how, s.clone(), next.clone(), mode))),
        Node::Plus(a, b) => Slot::Node(Node::Plus(
            extend(how, s.clone(), a.clone(), mode),
            extend(how, s.clone(), b.clone(), mode),
        )),
        Node::Yield(s0, st) => Slot::Node(Node::Yield(grow(how, s0, &s), st.clone())),
    })
}

/// Sequential extension: runs `s` after `r` terminates.
pub fn evalseq(s: &Stmt, r: &Res, mode: SchedMode) -> Res {
    extend(Attach::Seq, Arc::new(s.clone()), r.clone(), mode)
}

/// Parallel extension on the right: `r` stems from the left component of
/// `· ∥ s`, and `s` may start once `r` terminates or releases control.
pub fn evalpar_r(s: &Stmt, r: &Res, mode: SchedMode) -> Res {
    extend(Attach::ParR, Arc::new(s.clone()), r.clone(), mode)
}

/// Parallel extension on the left: `r` stems from the right component of
/// `s ∥ ·`.
pub fn evalpar_l(s: &Stmt, r: &Res, mode: SchedMode) -> Res {
    extend(Attach::ParL, Arc::new(s.clone()), r.clone(), mode)
}

/// Closing: every yield is replaced by a unit delay followed by the closed
/// evaluation of its residual statement, so the result never releases
/// control.
pub fn close(r: &Res, mode: SchedMode) -> Res {
    let key = r.derived_key(Recipe::Close);
    let r = r.clone();
    Thunk::lazy(key, move || match r.force() {
        Node::Ret(st) => Slot::Node(Node::Ret(st.clone())),
        Node::Delay(next) => Slot::Node(Node::Delay(close(next, mode))),
        Node::Plus(a, b) => Slot::Node(Node::Plus(close(a, mode), close(b, mode))),
        Node::Yield(s, st) => Slot::Node(Node::Delay(close(&eval(s, st, mode), mode))),
    })
}

/// Whether a residual statement stems from a blocked `await`: the `await`
/// itself, grown by sequential and parallel extension.
pub fn is_await_residual(s: &Stmt) -> bool {
    match s {
        Stmt::Await(..) => true,
        Stmt::Seq(s0, _) => is_await_residual(s0),
        Stmt::Par(s0, s1) => is_await_residual(s0) || is_await_residual(s1),
        _ => false,
    }
}
