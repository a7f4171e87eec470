//! The statement language: syntax, states, parsing, printing and expression
//! evaluation.

mod parse;
mod pretty;
mod state;
mod syntax;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub use parse::{parse, parse_expr, parse_state, parse_states, ParseError};
pub use pretty::{pretty, pretty_expr};
pub use state::State;
pub use syntax::{ArithOp, CmpOp, Expr, Ident, Sort, Stmt};

/// Scheduling discipline. Under `Preemptive` scheduling control may be
/// released at every guard test and at the midpoint of every composition;
/// under `Cooperative` scheduling only a blocked `await` releases control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedMode {
    Preemptive,
    Cooperative,
}

/// Value of an integer expression. Total: unmapped variables read as 0, and
/// a boolean subexpression in integer position counts as 1 or 0 (the parser
/// never produces one).
pub fn eval_expr(e: &Expr, st: &State) -> BigInt {
    match e {
        Expr::Int(n) => n.clone(),
        Expr::Var(x) => st.lookup(x),
        Expr::Arith(op, l, r) => {
            let (a, b) = (eval_expr(l, st), eval_expr(r, st));
            match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
            }
        }
        Expr::Cmp(..) | Expr::Bool(_) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => {
            if sat(e, st) {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }
    }
}

/// Whether a state satisfies a boolean expression. An integer expression in
/// boolean position is true when nonzero.
pub fn sat(e: &Expr, st: &State) -> bool {
    match e {
        Expr::Bool(b) => *b,
        Expr::Not(inner) => !sat(inner, st),
        Expr::And(l, r) => sat(l, st) && sat(r, st),
        Expr::Or(l, r) => sat(l, st) || sat(r, st),
        Expr::Cmp(op, l, r) => {
            let (a, b) = (eval_expr(l, st), eval_expr(r, st));
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
            }
        }
        Expr::Int(_) | Expr::Var(_) | Expr::Arith(..) => !eval_expr(e, st).is_zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn int_of(src: &str) -> Expr {
        parse_expr(src, Sort::Int).unwrap()
    }

    fn bool_of(src: &str) -> Expr {
        parse_expr(src, Sort::Bool).unwrap()
    }

    #[test]
    fn literal_and_lookup() {
        assert_eq!(
            eval_expr(&Expr::int(0), &State::from_pairs(&[("x", 9)])),
            BigInt::zero()
        );
        assert_eq!(
            eval_expr(&Expr::var("x"), &State::from_pairs(&[("x", 5)])),
            BigInt::from(5)
        );
    }

    #[test]
    fn increment_from_zero() {
        assert_eq!(
            eval_expr(&int_of("x+2"), &State::from_pairs(&[("x", 0)])),
            BigInt::from(2)
        );
    }

    #[test]
    fn guard_truth() {
        assert!(sat(&Expr::Bool(true), &State::new()));
        assert!(!sat(&bool_of("x = 0"), &State::from_pairs(&[("x", 2)])));
        assert!(sat(&bool_of("x = 0"), &State::from_pairs(&[("x", 0)])));
        assert!(sat(&bool_of("not x < 0 and (y <= 1 or false)"), &State::new()));
    }

    #[test]
    fn arithmetic_does_not_overflow() {
        let st = State::from_pairs(&[("x", i64::MAX)]);
        let v = eval_expr(&int_of("x*x*x"), &st);
        assert_eq!(v, BigInt::from(i64::MAX).pow(3));
    }

    proptest! {
        #[test]
        fn evaluation_is_pure(a in -100i64..100, b in -100i64..100) {
            let st = State::from_pairs(&[("x", a), ("y", b)]);
            let e = int_of("x*y-(x+3)*2");
            prop_assert_eq!(eval_expr(&e, &st), eval_expr(&e, &st));
            prop_assert_eq!(eval_expr(&e, &st), BigInt::from(a * b - (a + 3) * 2));
            let g = bool_of("x < y or x = y");
            prop_assert_eq!(sat(&g, &st), a <= b);
        }
    }
}
