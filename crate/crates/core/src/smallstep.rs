//! Small-step reduction over extended configurations, and maximal
//! multi-step reduction, which chains single steps into a resumption.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::lang::{eval_expr, sat, SchedMode, State, Stmt};
use crate::resumption::{Continuation, GNode, GRes, Key, Node, Recipe, Res, Slot, Thunk};

/// The outcome of one reduction step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XCfg {
    Ret(State),
    Delay(Stmt, State),
    Plus((Stmt, State), (Stmt, State)),
    Yield(Stmt, State),
}

impl fmt::Display for XCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XCfg::Ret(st) => write!(f, "ret {st}"),
            XCfg::Delay(s, st) => write!(f, "δ ⟨{s}⟩ {st}"),
            XCfg::Plus((s0, st0), (s1, st1)) => write!(f, "(⟨{s0}⟩ {st0} + ⟨{s1}⟩ {st1})"),
            XCfg::Yield(s, st) => write!(f, "yield ⟨{s}⟩ {st}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("`suspend` only exists under cooperative scheduling")]
    SuspendInPreemptive,
}

fn seq(a: Stmt, b: &Arc<Stmt>) -> Stmt {
    Stmt::Seq(Arc::new(a), b.clone())
}

fn skip_then(s: Stmt) -> Stmt {
    Stmt::Seq(Arc::new(Stmt::Skip), Arc::new(s))
}

/// One reduction step of `s` from `st`. Reduction is structural: the rule is
/// determined by the head constructor (and guard value), and its premise
/// reduces the active substatement.
pub fn red(s: &Stmt, st: &State, mode: SchedMode) -> Result<XCfg, StepError> {
    use SchedMode::*;
    Ok(match s {
        Stmt::Assign(x, e) => XCfg::Delay(Stmt::Skip, st.update(x, eval_expr(e, st))),
        Stmt::Skip => XCfg::Ret(st.clone()),
        Stmt::Seq(s0, s1) => match red(s0, st, mode)? {
            XCfg::Ret(st1) => match mode {
                Preemptive => XCfg::Yield((**s1).clone(), st1),
                Cooperative => red(s1, &st1, mode)?,
            },
            XCfg::Delay(s0p, st1) => XCfg::Delay(seq(s0p, s1), st1),
            XCfg::Plus((a, sa), (b, sb)) => XCfg::Plus((seq(a, s1), sa), (seq(b, s1), sb)),
            XCfg::Yield(s0p, st1) => XCfg::Yield(seq(s0p, s1), st1),
        },
        Stmt::If(e, t, f) => {
            let branch = if sat(e, st) { t } else { f };
            match mode {
                Preemptive => XCfg::Delay(skip_then((**branch).clone()), st.clone()),
                Cooperative => XCfg::Delay((**branch).clone(), st.clone()),
            }
        }
        Stmt::While(e, body) => {
            if sat(e, st) {
                let again = Stmt::Seq(body.clone(), Arc::new(s.clone()));
                match mode {
                    Preemptive => XCfg::Delay(skip_then(again), st.clone()),
                    Cooperative => XCfg::Delay(again, st.clone()),
                }
            } else {
                XCfg::Delay(Stmt::Skip, st.clone())
            }
        }
        Stmt::Par(s0, s1) => XCfg::Plus(
            (Stmt::ParL(s0.clone(), s1.clone()), st.clone()),
            (Stmt::ParR(s0.clone(), s1.clone()), st.clone()),
        ),
        Stmt::ParL(s0, s1) => match red(s0, st, mode)? {
            XCfg::Ret(st1) => match mode {
                Preemptive => XCfg::Yield((**s1).clone(), st1),
                Cooperative => red(s1, &st1, mode)?,
            },
            XCfg::Delay(s0p, st1) => XCfg::Delay(Stmt::ParL(Arc::new(s0p), s1.clone()), st1),
            XCfg::Plus((a, sa), (b, sb)) => XCfg::Plus(
                (Stmt::ParL(Arc::new(a), s1.clone()), sa),
                (Stmt::ParL(Arc::new(b), s1.clone()), sb),
            ),
            XCfg::Yield(s0p, st1) => XCfg::Yield(Stmt::Par(Arc::new(s0p), s1.clone()), st1),
        },
        Stmt::ParR(s0, s1) => match red(s1, st, mode)? {
            XCfg::Ret(st1) => match mode {
                Preemptive => XCfg::Yield((**s0).clone(), st1),
                Cooperative => red(s0, &st1, mode)?,
            },
            XCfg::Delay(s1p, st1) => XCfg::Delay(Stmt::ParR(s0.clone(), Arc::new(s1p)), st1),
            XCfg::Plus((a, sa), (b, sb)) => XCfg::Plus(
                (Stmt::ParR(s0.clone(), Arc::new(a)), sa),
                (Stmt::ParR(s0.clone(), Arc::new(b)), sb),
            ),
            XCfg::Yield(s1p, st1) => XCfg::Yield(Stmt::Par(s0.clone(), Arc::new(s1p)), st1),
        },
        Stmt::Atomic(body) => match red(body, st, mode)? {
            XCfg::Ret(st1) => XCfg::Ret(st1),
            XCfg::Delay(b, st1) | XCfg::Yield(b, st1) => XCfg::Delay(Stmt::atomic(b), st1),
            XCfg::Plus((a, sa), (b, sb)) => XCfg::Plus((Stmt::atomic(a), sa), (Stmt::atomic(b), sb)),
        },
        Stmt::Await(e, body) => {
            if sat(e, st) {
                XCfg::Delay(Stmt::Atomic(body.clone()), st.clone())
            } else {
                let release = match mode {
                    Preemptive => Stmt::Skip,
                    Cooperative => Stmt::Suspend,
                };
                XCfg::Delay(Stmt::Seq(Arc::new(release), Arc::new(s.clone())), st.clone())
            }
        }
        Stmt::Suspend => match mode {
            Preemptive => return Err(StepError::SuspendInPreemptive),
            Cooperative => XCfg::Yield(Stmt::Skip, st.clone()),
        },
    })
}

fn red_total(s: &Stmt, st: &State, mode: SchedMode) -> XCfg {
    red(s, st, mode).unwrap_or_else(|e| panic!("reducing `{s}`: {e}"))
}

/// Maximal multi-step reduction: reduces until `ret` or `yield`,
/// developing delays and choices into a resumption.
///
/// # Panics
///
/// Forcing panics if reduction meets `suspend` under preemptive scheduling,
/// which cannot happen for statements produced by the parser.
pub fn mmred(s: &Stmt, st: &State, mode: SchedMode) -> Res {
    let key = Key::new(Recipe::Mmred(mode, s.clone()), st.clone());
    let (s, st) = (s.clone(), st.clone());
    Thunk::lazy(Some(key), move || {
        Slot::Node(match red_total(&s, &st, mode) {
            XCfg::Ret(st1) => Node::Ret(st1),
            XCfg::Delay(s1, st1) => Node::Delay(mmred(&s1, &st1, mode)),
            XCfg::Plus((a, sa), (b, sb)) => Node::Plus(mmred(&a, &sa, mode), mmred(&b, &sb, mode)),
            XCfg::Yield(s1, st1) => Node::Yield(s1, st1),
        })
    })
}

/// Like [`mmred`], but also reduces under yields: a yield with residual
/// `s′` carries the continuation `λσ″. gmmred s′ σ″`.
pub fn gmmred(s: &Stmt, st: &State, mode: SchedMode) -> GRes {
    let key = Key::new(Recipe::Gmmred(mode, s.clone()), st.clone());
    let (s, st) = (s.clone(), st.clone());
    Thunk::lazy(Some(key), move || {
        Slot::Node(match red_total(&s, &st, mode) {
            XCfg::Ret(st1) => GNode::Ret(st1),
            XCfg::Delay(s1, st1) => GNode::Delay(gmmred(&s1, &st1, mode)),
            XCfg::Plus((a, sa), (b, sb)) => GNode::Plus(gmmred(&a, &sa, mode), gmmred(&b, &sb, mode)),
            XCfg::Yield(s1, st1) => GNode::Yield(gmmred_k(s1, mode), st1),
        })
    })
}

/// The continuation `λσ. gmmred s σ`.
pub fn gmmred_k(s: Stmt, mode: SchedMode) -> Continuation {
    let recipe = Arc::new(Recipe::Gmmred(mode, s.clone()));
    Continuation::with_recipe(recipe, move |st| gmmred(&s, st, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::resumption::{delta_inf, prefix, prefix_g};

    const PRE: SchedMode = SchedMode::Preemptive;
    const COOP: SchedMode = SchedMode::Cooperative;

    fn x(v: i64) -> State {
        State::from_pairs(&[("x", v)])
    }

    #[test]
    fn skip_and_assignment() {
        for mode in [PRE, COOP] {
            assert_eq!(red(&Stmt::Skip, &x(4), mode), Ok(XCfg::Ret(x(4))));
            assert_eq!(
                red(&parse("x := 1").unwrap(), &x(0), mode),
                Ok(XCfg::Delay(Stmt::Skip, x(1)))
            );
        }
    }

    #[test]
    fn parallel_splits_into_auxiliary_forms() {
        let s = parse("x := 1 || skip").unwrap();
        let Stmt::Par(a, b) = &s else { unreachable!() };
        assert_eq!(
            red(&s, &x(0), PRE),
            Ok(XCfg::Plus(
                (Stmt::ParL(a.clone(), b.clone()), x(0)),
                (Stmt::ParR(a.clone(), b.clone()), x(0))
            ))
        );
    }

    #[test]
    fn loop_entry_inserts_release_point() {
        let w = parse("while x = 0 do skip od").unwrap();
        let want = parse("skip; (skip; while x = 0 do skip od)").unwrap();
        assert_eq!(red(&w, &x(0), PRE), Ok(XCfg::Delay(want, x(0))));
    }

    #[test]
    fn skip_prefix_releases_control_preemptively() {
        let s = parse("skip; x := 3").unwrap();
        assert_eq!(red(&s, &x(0), PRE), Ok(XCfg::Yield(parse("x := 3").unwrap(), x(0))));
        assert_eq!(red(&s, &x(0), COOP), Ok(XCfg::Delay(Stmt::Skip, x(3))));
    }

    #[test]
    fn suspend() {
        assert_eq!(red(&Stmt::Suspend, &x(1), COOP), Ok(XCfg::Yield(Stmt::Skip, x(1))));
        assert_eq!(red(&Stmt::Suspend, &x(1), PRE), Err(StepError::SuspendInPreemptive));
    }

    #[test]
    fn blocked_await() {
        let a = parse("await x = 0 then x := 1").unwrap();
        let cfg = red(&a, &x(2), COOP).unwrap();
        assert_eq!(cfg.to_string(), "δ ⟨suspend; await x = 0 then x := 1⟩ {x=2}");
    }

    #[test]
    fn right_side_choice_keeps_left_component() {
        // the right component is itself a parallel composition
        let s = Stmt::ParR(Arc::new(Stmt::Skip), Arc::new(parse("skip || x := 1").unwrap()));
        match red(&s, &x(0), PRE).unwrap() {
            XCfg::Plus((a, _), (b, _)) => {
                assert!(matches!(&a, Stmt::ParR(l, r) if **l == Stmt::Skip && matches!(**r, Stmt::ParL(..))));
                assert!(matches!(&b, Stmt::ParR(l, r) if **l == Stmt::Skip && matches!(**r, Stmt::ParR(..))));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn maximal_reduction() {
        assert_eq!(prefix(&mmred(&Stmt::Skip, &x(0), PRE), 3).render(), "ret {x=0}");
        let s = parse("x := 1 || (x := x+2; x := x+2)").unwrap();
        assert_eq!(
            prefix(&mmred(&s, &x(0), PRE), 6).render(),
            "(δ yield ⟨x := x+2; x := x+2⟩ {x=1} + δ yield ⟨x := 1 || x := x+2⟩ {x=2})"
        );
        let spin = parse("while true do skip od").unwrap();
        assert_eq!(
            prefix(&mmred(&spin, &x(0), PRE), 5).render(),
            "δ yield ⟨skip; while true do skip od⟩ {x=0}"
        );
        assert_eq!(
            prefix(&mmred(&spin, &x(0), SchedMode::Cooperative), 1000),
            prefix(&delta_inf(), 1000)
        );
    }

    #[test]
    fn giant_reduction_through_blocked_await() {
        let a = parse("await x = 0 then x := 1").unwrap();
        let r = gmmred(&a, &x(2), PRE);
        assert_eq!(
            prefix_g(&r, 6, &[x(0)]).render(),
            "δ yield {x=2} [σ′={x=0} ↦ δ^2 ret {x=1}]"
        );
        assert_eq!(
            prefix_g(&gmmred(&Stmt::Skip, &x(0), PRE), 3, &[x(0)]).render(),
            "ret {x=0}"
        );
    }
}
