//! Trace semantics: a schedule resolves every choice, and a resume oracle
//! supplies the environment's state at every suspension.
//!
//! Run with `cargo run --example traces`.

use concsem::bigstep::eval;
use concsem::giantstep::eval_g;
use concsem::lang::{parse, parse_state, SchedMode};
use concsem::tracesem::{
    close_gtrace, close_trace, gtrace_prefix, is_path_of, is_path_of_g, trace_eval, trace_eval_g, trace_prefix,
    ResumeOracle, Schedule,
};

const PRE: SchedMode = SchedMode::Preemptive;

fn main() {
    let s = parse("x := 1 || (x := x+2; x := x+2)").expect("program");
    let st = parse_state("{x=0}").expect("state");
    let full = eval(&s, &st, PRE);

    for text in ["L", "R", "RL", "RR"] {
        let sched: Schedule = text.parse().expect("schedule");
        let t = trace_eval(&s, &st, &sched, PRE);
        let closed = close_trace(&t, &sched, PRE);
        println!("schedule {text:<2}  {}", trace_prefix(&t, 20).render());
        println!("             closed {}", trace_prefix(&closed, 20).render());
        println!(
            "             choices read {}, path of eval: {}",
            sched.consumed(),
            is_path_of(&t, &full, 60)
        );
    }

    // Giant-step traces pick the resumed state from the oracle.
    let s = parse("await x = 0 then x := 1").expect("program");
    let st = parse_state("{x=2}").expect("state");
    for oracle in ["{x=0}", "{x=7}"] {
        let resume = ResumeOracle::parse(oracle).expect("states");
        let t = trace_eval_g(&s, &st, &Schedule::left(), &resume, PRE);
        println!("resume {oracle}  {}", gtrace_prefix(&t, 10).render());
        println!(
            "             path of eval_g: {}",
            is_path_of_g(&t, &eval_g(&s, &st, PRE), 40)
        );
        match close_gtrace(&t, 10) {
            Ok(tree) => println!("             closed {}", tree.render()),
            Err(stuck) => println!("             {stuck}"),
        }
    }
}
