//! Single reduction steps, and maximal reduction as a lazy tree that
//! agrees with the big-step one.
//!
//! Run with `cargo run --example small_step`.

use concsem::bigstep::eval;
use concsem::equiv::{strong_bisim_with, StmtEquiv};
use concsem::lang::{parse, parse_state, SchedMode};
use concsem::resumption::prefix;
use concsem::smallstep::{mmred, red, XCfg};

fn main() {
    let st = parse_state("{x=0, y=1}").expect("state");
    let mut s = parse("x := y + 1; if x = 2 then y := 0 else skip fi").expect("program");
    let mut state = st.clone();

    // Walk one step at a time, resuming every suspension immediately.
    loop {
        let cfg = red(&s, &state, SchedMode::Preemptive).expect("reducible");
        println!("→ {cfg}");
        match cfg {
            XCfg::Delay(next, after) | XCfg::Yield(next, after) => {
                s = next;
                state = after;
            }
            _ => break,
        }
    }

    let p = parse("(await x = 0 then x := 1) || x := 2").expect("program");
    for mode in [SchedMode::Preemptive, SchedMode::Cooperative] {
        let small = mmred(&p, &st, mode);
        let big = eval(&p, &st, mode);
        println!("{mode:?}: {}", prefix(&small, 20).render());
        // Cooperative small-step residuals keep a leading `skip;` that the
        // big-step residuals drop.
        let eq = match mode {
            SchedMode::Preemptive => StmtEquiv::Syntactic,
            SchedMode::Cooperative => StmtEquiv::SkipPrefix,
        };
        println!("  agrees with big-step: {}", strong_bisim_with(&small, &big, 60, eq));
    }
}
