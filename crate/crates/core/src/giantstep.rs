//! Giant-step evaluation: like big-step evaluation, but a yield carries a
//! continuation that runs the rest of the computation from whatever state
//! control is returned in.

use std::sync::Arc;

use crate::lang::{eval_expr, sat, SchedMode, State, Stmt};
use crate::resumption::{Attach, Continuation, GNode, GRes, Key, Node, Recipe, Res, Slot, Thunk};

/// `eval_g s σ`.
///
/// # Panics
///
/// Forcing the result panics if `s` contains auxiliary small-step forms.
pub fn eval_g(s: &Stmt, st: &State, mode: SchedMode) -> GRes {
    let key = Key::new(Recipe::EvalG(mode, s.clone()), st.clone());
    let (s, st) = (s.clone(), st.clone());
    Thunk::lazy(Some(key), move || eval_g_layer(&s, &st, mode))
}

/// The continuation `λσ. eval_g s σ`.
pub fn eval_g_k(s: &Stmt, mode: SchedMode) -> Continuation {
    let s = s.clone();
    Continuation::with_recipe(Arc::new(Recipe::EvalG(mode, s.clone())), move |st| eval_g(&s, st, mode))
}

fn eval_g_layer(s: &Stmt, st: &State, mode: SchedMode) -> Slot<GNode> {
    use SchedMode::*;
    match s {
        Stmt::Assign(x, e) => Slot::Node(GNode::Delay(GRes::ret(st.update(x, eval_expr(e, st))))),
        Stmt::Skip => Slot::Node(GNode::Ret(st.clone())),
        Stmt::Seq(s0, s1) => Slot::Alias(evalseq_g(s1, &eval_g(s0, st, mode), mode)),
        Stmt::If(e, t, f) => {
            let branch = if sat(e, st) { t } else { f };
            let next = match mode {
                Preemptive => GRes::yield_(eval_g_k(branch, mode), st.clone()),
                Cooperative => eval_g(branch, st, mode),
            };
            Slot::Node(GNode::Delay(next))
        }
        Stmt::While(e, body) => {
            if !sat(e, st) {
                return Slot::Node(GNode::Delay(GRes::ret(st.clone())));
            }
            let next = match mode {
                Preemptive => GRes::yield_(seq_k(s, &eval_g_k(body, mode), mode), st.clone()),
                Cooperative => evalseq_g(s, &eval_g(body, st, mode), mode),
            };
            Slot::Node(GNode::Delay(next))
        }
        Stmt::Par(s0, s1) => Slot::Node(GNode::Plus(
            merge_r_g(&eval_g_k(s1, mode), &eval_g(s0, st, mode), mode),
            merge_l_g(&eval_g_k(s0, mode), &eval_g(s1, st, mode), mode),
        )),
        Stmt::Atomic(body) => Slot::Alias(close_g(&eval_g(body, st, mode))),
        Stmt::Await(e, body) => {
            let next = if sat(e, st) {
                close_g(&eval_g(body, st, mode))
            } else {
                GRes::yield_(eval_g_k(s, mode), st.clone())
            };
            Slot::Node(GNode::Delay(next))
        }
        Stmt::ParL(..) | Stmt::ParR(..) | Stmt::Suspend => {
            panic!("giant-step evaluation of auxiliary statement `{s}`")
        }
    }
}

/// `evalseq_g s ∘ k`.
fn seq_k(s: &Stmt, k: &Continuation, mode: SchedMode) -> Continuation {
    let recipe = Arc::new(Recipe::SeqG(mode, s.clone(), k.recipe().clone()));
    let (s, k) = (s.clone(), k.clone());
    Continuation::with_recipe(recipe, move |st| evalseq_g(&s, &k.apply(st), mode))
}

/// Sequential extension: `s` starts (after a control release under
/// preemptive scheduling) when `r` terminates.
pub fn evalseq_g(s: &Stmt, r: &GRes, mode: SchedMode) -> GRes {
    let key = r.derived_key(|rc| Recipe::SeqG(mode, s.clone(), rc));
    let (s, r) = (s.clone(), r.clone());
    Thunk::lazy(key, move || match r.force() {
        GNode::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(GNode::Yield(eval_g_k(&s, mode), st.clone())),
            SchedMode::Cooperative => Slot::Alias(eval_g(&s, st, mode)),
        },
        GNode::Delay(next) => Slot::Node(GNode::Delay(evalseq_g(&s, next, mode))),
        GNode::Plus(a, b) => Slot::Node(GNode::Plus(evalseq_g(&s, a, mode), evalseq_g(&s, b, mode))),
        GNode::Yield(k, st) => Slot::Node(GNode::Yield(seq_k(&s, k, mode), st.clone())),
    })
}

/// `λσ′. mergeR_g b (a σ′) + mergeL_g a (b σ′)`: the two components run in
/// parallel from `σ′`, with `a` on the left.
fn interleave(a: &Continuation, b: &Continuation, mode: SchedMode) -> Continuation {
    let recipe = Arc::new(Recipe::Interleave(mode, a.recipe().clone(), b.recipe().clone()));
    let (a, b) = (a.clone(), b.clone());
    Continuation::with_recipe(recipe, move |st| {
        GRes::plus(merge_r_g(&b, &a.apply(st), mode), merge_l_g(&a, &b.apply(st), mode))
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

fn merge(side: Side, k: Continuation, r: GRes, mode: SchedMode) -> GRes {
    let how = match side {
        Side::Right => Attach::ParR,
        Side::Left => Attach::ParL,
    };
    let key = r.derived_key(|rc| Recipe::Merge(how, mode, k.recipe().clone(), rc));
    Thunk::lazy(key, move || match r.force() {
        GNode::Ret(st) => match mode {
            SchedMode::Preemptive => Slot::Node(GNode::Yield(k.clone(), st.clone())),
            SchedMode::Cooperative => Slot::Alias(k.apply(st)),
        },
        GNode::Delay(next) => Slot::Node(GNode::Delay(merge(side, k.clone(), next.clone(), mode))),
        GNode::Plus(a, b) => Slot::Node(GNode::Plus(
            merge(side, k.clone(), a.clone(), mode),
            merge(side, k.clone(), b.clone(), mode),
        )),
        GNode::Yield(k2, st) => {
            let both = match side {
                Side::Right => interleave(k2, &k, mode),
                Side::Left => interleave(&k, k2, mode),
            };
            Slot::Node(GNode::Yield(both, st.clone()))
        }
    })
}

/// Merges continuation `k` (the right component) into `r` (from the left
/// component).
pub fn merge_r_g(k: &Continuation, r: &GRes, mode: SchedMode) -> GRes {
    merge(Side::Right, k.clone(), r.clone(), mode)
}

/// Merges continuation `k` (the left component) into `r` (from the right
/// component).
pub fn merge_l_g(k: &Continuation, r: &GRes, mode: SchedMode) -> GRes {
    merge(Side::Left, k.clone(), r.clone(), mode)
}

/// Closing: a yield is resumed at once in the state it released control
/// in, after a unit delay.
pub fn close_g(r: &GRes) -> GRes {
    let key = r.derived_key(Recipe::Close);
    let r = r.clone();
    Thunk::lazy(key, move || match r.force() {
        GNode::Ret(st) => Slot::Node(GNode::Ret(st.clone())),
        GNode::Delay(next) => Slot::Node(GNode::Delay(close_g(next))),
        GNode::Plus(a, b) => Slot::Node(GNode::Plus(close_g(a), close_g(b))),
        GNode::Yield(k, st) => Slot::Node(GNode::Delay(close_g(&k.apply(st)))),
    })
}

/// Reads a giant-step tree as a big-step tree. A giant-step yield has no
/// residual statement; it becomes a yield of `suspend` in the same state.
/// On yield-free trees this is an exact translation.
pub fn flatten(r: &GRes) -> Res {
    let key = r.derived_key(Recipe::Flatten);
    let r = r.clone();
    Thunk::lazy(key, move || {
        Slot::Node(match r.force() {
            GNode::Ret(st) => Node::Ret(st.clone()),
            GNode::Delay(next) => Node::Delay(flatten(next)),
            GNode::Plus(a, b) => Node::Plus(flatten(a), flatten(b)),
            GNode::Yield(_, st) => Node::Yield(Stmt::Suspend, st.clone()),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::resumption::{delta_inf, prefix, prefix_g, FiniteTree};

    const PRE: SchedMode = SchedMode::Preemptive;
    const COOP: SchedMode = SchedMode::Cooperative;

    fn x(v: i64) -> State {
        State::from_pairs(&[("x", v)])
    }

    fn gdelta_inf() -> GRes {
        Thunk::lazy(None, || Slot::Node(GNode::Delay(gdelta_inf())))
    }

    #[test]
    fn skip() {
        for mode in [PRE, COOP] {
            assert_eq!(
                prefix_g(&eval_g(&Stmt::Skip, &x(1), mode), 3, &[x(0)]).render(),
                "ret {x=1}"
            );
        }
    }

    #[test]
    fn interleaving_example_at_one_probe() {
        // hand unfolding of the continuation-carrying resumption at σ′ = σ″ = {x=7}
        let s = parse("x := 1 || (x := x+2; x := x+2)").unwrap();
        let got = prefix_g(&eval_g(&s, &x(0), PRE), 8, &[x(7)]).render();
        assert_eq!(
            got,
            "(δ yield {x=1} [σ′={x=7} ↦ δ yield {x=9} [σ′={x=7} ↦ δ ret {x=9}]] \
             + δ yield {x=2} [σ′={x=7} ↦ (δ yield {x=1} [σ′={x=7} ↦ δ ret {x=9}] \
             + δ yield {x=9} [σ′={x=7} ↦ δ ret {x=1}])])"
        );
    }

    #[test]
    fn blocked_await_continuation() {
        let a = parse("await x = 0 then x := 1").unwrap();
        let r = eval_g(&a, &x(2), PRE);
        let GNode::Delay(inner) = r.force() else {
            panic!("expected a delay")
        };
        let GNode::Yield(k, st) = inner.force() else {
            panic!("expected yield")
        };
        assert_eq!(*st, x(2));
        assert_eq!(prefix_g(&k.apply(&x(0)), 5, &[x(0)]).render(), "δ^2 ret {x=1}");
        assert!(matches!(
            prefix_g(&k.apply(&x(3)), 5, &[x(0)]),
            FiniteTree::Delay(inner) if matches!(*inner, FiniteTree::YieldK { ref state, .. } if *state == x(3))
        ));
    }

    #[test]
    fn sequential_extension() {
        let inc = parse("x := x+2").unwrap();
        let r = evalseq_g(&inc, &GRes::ret(x(2)), PRE);
        assert_eq!(
            prefix_g(&r, 4, &[x(2)]).render(),
            "yield {x=2} [σ′={x=2} ↦ δ ret {x=4}]"
        );
        for mode in [PRE, COOP] {
            let d = evalseq_g(&inc, &gdelta_inf(), mode);
            assert_eq!(prefix_g(&d, 1000, &[x(0)]), prefix(&delta_inf(), 1000));
        }
        let k = Continuation::new(|st| GRes::ret(st.clone()));
        let y = evalseq_g(&Stmt::Skip, &GRes::yield_(k, x(1)), PRE);
        assert_eq!(
            prefix_g(&y, 3, &[x(5)]).render(),
            "yield {x=1} [σ′={x=5} ↦ yield {x=5} [σ′={x=5} ↦ ret {x=5}]]"
        );
    }

    #[test]
    fn merging_at_termination() {
        let k = eval_g_k(&parse("x := x+1").unwrap(), PRE);
        let pre = merge_r_g(&k, &GRes::ret(x(2)), PRE);
        assert_eq!(
            prefix_g(&pre, 4, &[x(2)]).render(),
            "yield {x=2} [σ′={x=2} ↦ δ ret {x=3}]"
        );
        let coop = merge_r_g(&k, &GRes::ret(x(2)), COOP);
        assert_eq!(prefix_g(&coop, 4, &[x(2)]).render(), "δ ret {x=3}");
        for mode in [PRE, COOP] {
            let d = merge_l_g(&k, &gdelta_inf(), mode);
            assert_eq!(prefix_g(&d, 1000, &[x(0)]), prefix(&delta_inf(), 1000));
        }
    }

    #[test]
    fn closing_matches_big_step_atomic_example() {
        let s = parse("(await x = 0 then x := 1) || x := 2").unwrap();
        let closed = close_g(&eval_g(&s, &x(0), PRE));
        let GNode::Plus(l, r) = closed.force() else {
            panic!("expected a choice")
        };
        assert_eq!(prefix_g(l, 20, &[x(0)]).render(), "δ^4 ret {x=2}");
        assert_eq!(prefix_g(r, 1000, &[x(0)]), prefix(&delta_inf(), 1000));
        assert_eq!(prefix_g(&close_g(&GRes::ret(x(1))), 2, &[x(0)]).render(), "ret {x=1}");
    }

    #[test]
    fn flatten_is_exact_without_yields() {
        let s = parse("atomic { x := 1 || (x := x+2; x := x+2) }").unwrap();
        assert_eq!(
            prefix(&flatten(&eval_g(&s, &x(0), PRE)), 12).render(),
            "(δ^5 ret {x=5} + δ^2 (δ^3 ret {x=3} + δ^3 ret {x=1}))"
        );
    }
}
