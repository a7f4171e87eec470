//! Pretty printer for statements and expressions.
//!
//! Output uses the fewest parentheses the grammar allows, so that parsing the
//! printed text gives back the same tree. The auxiliary small-step forms are
//! printed as `s0 ⌊ s1`, `s0 ⌋ s1` and `suspend`; those only show up in debug
//! output and are not accepted by the parser.

use std::fmt::{self, Write};

use super::syntax::{ArithOp, CmpOp, Expr, Stmt};

const PAR: u8 = 0;
const SEQ: u8 = 1;
const ATOM: u8 = 2;

pub fn pretty(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, PAR).expect("writing to a String cannot fail");
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0).expect("writing to a String cannot fail");
    out
}

fn stmt_level(s: &Stmt) -> u8 {
    match s {
        Stmt::Par(..) | Stmt::ParL(..) | Stmt::ParR(..) => PAR,
        Stmt::Seq(..) => SEQ,
        _ => ATOM,
    }
}

fn write_stmt(out: &mut String, s: &Stmt, ctx: u8) -> fmt::Result {
    let paren = stmt_level(s) < ctx;
    if paren {
        out.push('(');
    }
    match s {
        Stmt::Assign(x, e) => {
            write!(out, "{x} := ")?;
            write_expr(out, e, 0)?;
        }
        Stmt::Skip => out.push_str("skip"),
        Stmt::Suspend => out.push_str("suspend"),
        Stmt::Seq(a, b) => {
            write_stmt(out, a, ATOM)?;
            out.push_str("; ");
            write_stmt(out, b, SEQ)?;
        }
        Stmt::Par(a, b) | Stmt::ParL(a, b) | Stmt::ParR(a, b) => {
            let op = match s {
                Stmt::Par(..) => "||",
                Stmt::ParL(..) => "⌊",
                _ => "⌋",
            };
            write_stmt(out, a, SEQ)?;
            write!(out, " {op} ")?;
            write_stmt(out, b, PAR)?;
        }
        Stmt::If(e, t, f) => {
            out.push_str("if ");
            write_expr(out, e, 0)?;
            out.push_str(" then ");
            write_stmt(out, t, PAR)?;
            out.push_str(" else ");
            write_stmt(out, f, PAR)?;
            out.push_str(" fi");
        }
        Stmt::While(e, body) => {
            out.push_str("while ");
            write_expr(out, e, 0)?;
            out.push_str(" do ");
            write_stmt(out, body, PAR)?;
            out.push_str(" od");
        }
        Stmt::Atomic(body) => {
            out.push_str("atomic { ");
            write_stmt(out, body, PAR)?;
            out.push_str(" }");
        }
        Stmt::Await(e, body) => {
            out.push_str("await ");
            write_expr(out, e, 0)?;
            out.push_str(" then ");
            if stmt_level(body) == ATOM {
                write_stmt(out, body, ATOM)?;
            } else {
                out.push_str("{ ");
                write_stmt(out, body, PAR)?;
                out.push_str(" }");
            }
        }
    }
    if paren {
        out.push(')');
    }
    Ok(())
}

// Binding strength, loosest first.
const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const PRIM: u8 = 7;

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => OR,
        Expr::And(..) => AND,
        Expr::Not(_) => NOT,
        Expr::Cmp(..) => CMP,
        Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => ADD,
        Expr::Arith(ArithOp::Mul, ..) => MUL,
        Expr::Int(_) | Expr::Var(_) | Expr::Bool(_) => PRIM,
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) -> fmt::Result {
    let paren = expr_level(e) < ctx;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Int(n) => write!(out, "{n}")?,
        Expr::Var(x) => out.push_str(x),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Or(l, r) => {
            write_expr(out, l, OR)?;
            out.push_str(" or ");
            write_expr(out, r, AND)?;
        }
        Expr::And(l, r) => {
            write_expr(out, l, AND)?;
            out.push_str(" and ");
            write_expr(out, r, NOT)?;
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            write_expr(out, inner, NOT)?;
        }
        Expr::Cmp(op, l, r) => {
            write_expr(out, l, ADD)?;
            out.push_str(match op {
                CmpOp::Eq => " = ",
                CmpOp::Lt => " < ",
                CmpOp::Le => " <= ",
            });
            write_expr(out, r, ADD)?;
        }
        Expr::Arith(op, l, r) => {
            let (sym, lvl) = match op {
                ArithOp::Add => ('+', ADD),
                ArithOp::Sub => ('-', ADD),
                ArithOp::Mul => ('*', MUL),
            };
            write_expr(out, l, lvl)?;
            out.push(sym);
            write_expr(out, r, lvl + 1)?;
        }
    }
    if paren {
        out.push(')');
    }
    Ok(())
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn skip() {
        assert_eq!(pretty(&Stmt::Skip), "skip");
    }

    #[test]
    fn await_with_single_atom_has_no_braces() {
        let s = Stmt::await_(Expr::cmp(CmpOp::Eq, x(), Expr::int(0)), Stmt::assign("x", Expr::int(1)));
        assert_eq!(pretty(&s), "await x = 0 then x := 1");
        let t = Stmt::await_(Expr::Bool(true), Stmt::seq(Stmt::Skip, Stmt::Skip));
        assert_eq!(pretty(&t), "await true then { skip; skip }");
    }

    #[test]
    fn parallel_and_sequence_precedence() {
        let inc = || Stmt::assign("x", Expr::arith(ArithOp::Add, x(), Expr::int(2)));
        let s = Stmt::par(Stmt::assign("x", Expr::int(1)), Stmt::seq(inc(), inc()));
        assert_eq!(pretty(&s), "x := 1 || x := x+2; x := x+2");
        let left_nested = Stmt::seq(Stmt::seq(Stmt::Skip, Stmt::Skip), Stmt::Skip);
        assert_eq!(pretty(&left_nested), "(skip; skip); skip");
        let par_in_seq = Stmt::seq(Stmt::par(Stmt::Skip, Stmt::Skip), Stmt::Skip);
        assert_eq!(pretty(&par_in_seq), "(skip || skip); skip");
    }

    #[test]
    fn arithmetic_parenthesizes_only_when_needed() {
        let e = Expr::arith(ArithOp::Sub, x(), Expr::arith(ArithOp::Add, Expr::int(1), Expr::int(2)));
        assert_eq!(pretty_expr(&e), "x-(1+2)");
        let m = Expr::arith(ArithOp::Mul, Expr::arith(ArithOp::Add, x(), x()), Expr::int(-3));
        assert_eq!(pretty_expr(&m), "(x+x)*-3");
    }

    #[test]
    fn boolean_connectives() {
        let e = Expr::not(Expr::or(Expr::Bool(true), Expr::cmp(CmpOp::Le, x(), Expr::int(1))));
        assert_eq!(pretty_expr(&e), "not (true or x <= 1)");
    }

    #[test]
    fn auxiliary_forms_render_for_debugging() {
        let s = Stmt::ParL(std::sync::Arc::new(Stmt::Suspend), std::sync::Arc::new(Stmt::Skip));
        assert_eq!(pretty(&s), "suspend ⌊ skip");
    }
}
