//! Big-step evaluation into lazy resumption trees.
//!
//! Run with `cargo run --example big_step`.

use concsem::bigstep::{close, eval};
use concsem::lang::{parse, parse_state, SchedMode};
use concsem::resumption::{prefix, yield_free};

fn main() {
    let init = parse_state("{x=0}").expect("state");
    let programs = [
        "x := 1; x := x+1",
        "x := 1 || (x := x+2; x := x+2)",
        "atomic { x := 1 || (x := x+2; x := x+2) }",
        "while x < 3 do x := x+1 od",
    ];
    for src in programs {
        let s = parse(src).expect("program");
        let r = eval(&s, &init, SchedMode::Preemptive);
        println!("{src}");
        println!("  eval   {}", prefix(&r, 20).render());

        // Closing runs every suspended residual to completion.
        let closed = close(&r, SchedMode::Preemptive);
        println!("  closed {}", prefix(&closed, 20).render());
        assert!(yield_free(&closed, 20));
    }

    // Divergence is just an infinite spine of delays; only the prefix we
    // look at is ever built.
    let spin = parse("while true do skip od").expect("program");
    let r = eval(&spin, &init, SchedMode::Cooperative);
    println!("while true do skip od (cooperative)");
    println!("  eval   {}", prefix(&r, 8).render());
}
