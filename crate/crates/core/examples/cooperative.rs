//! Preemptive versus cooperative scheduling. Cooperatively scheduled
//! threads only give up control at a blocked `await`, so plain assignments
//! run without interruption.
//!
//! Run with `cargo run --example cooperative`.

use concsem::bigstep::{close, eval, is_await_residual};
use concsem::lang::{parse, parse_state, SchedMode, Stmt};
use concsem::resumption::{prefix, Node, Res};

/// Residual statements of every suspension within `depth` layers.
fn residuals(r: &Res, depth: usize, out: &mut Vec<Stmt>) {
    if depth == 0 {
        return;
    }
    match r.force() {
        Node::Ret(_) => {}
        Node::Delay(n) => residuals(n, depth - 1, out),
        Node::Plus(a, b) => {
            residuals(a, depth - 1, out);
            residuals(b, depth - 1, out);
        }
        Node::Yield(s, _) => out.push(s.clone()),
    }
}

fn main() {
    let st = parse_state("{x=0, y=0}").expect("state");
    let s = parse("(x := 1; y := x) || (await x = 1 then x := 5; y := y+1)").expect("program");
    for mode in [SchedMode::Preemptive, SchedMode::Cooperative] {
        let r = eval(&s, &st, mode);
        println!("{mode:?}");
        println!("  eval   {}", prefix(&r, 30).render());
        println!("  closed {}", prefix(&close(&r, mode), 14).render());
        let mut rs = Vec::new();
        residuals(&r, 30, &mut rs);
        for s in &rs {
            println!("  suspended with ⟨{s}⟩");
        }
        if mode == SchedMode::Cooperative {
            assert!(rs.iter().all(is_await_residual));
        }
    }
}
