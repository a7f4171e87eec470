//! Giant-step evaluation: suspension points carry continuations over the
//! state the environment hands back.
//!
//! Run with `cargo run --example giant_step`.

use concsem::giantstep::{close_g, eval_g, flatten};
use concsem::lang::{parse, parse_state, SchedMode};
use concsem::resumption::{prefix, prefix_g, GNode, GRes};

fn main() {
    let s = parse("await x = 0 then x := 1").expect("program");
    let init = parse_state("{x=2}").expect("state");
    let r = eval_g(&s, &init, SchedMode::Preemptive);

    // The guard is false, so evaluation suspends. Resuming under different
    // environment states gives different futures.
    if let GNode::Yield(k, release) = skip_delays(&r) {
        println!("suspended at {release}");
        for resume in ["{x=0}", "{x=5}"] {
            let st = parse_state(resume).expect("state");
            println!("  resume {resume} -> {}", prefix_g(&k.apply(&st), 6, &[]).render());
        }
    }

    // Probe states make continuations printable.
    let probes = [parse_state("{x=0}").expect("state")];
    println!("eval_g        {}", prefix_g(&r, 6, &probes).render());

    let p = parse("x := 1 || x := 2").expect("program");
    let st = parse_state("{x=0}").expect("state");
    let g = eval_g(&p, &st, SchedMode::Preemptive);
    println!("x := 1 || x := 2");
    println!("  eval_g      {}", prefix_g(&g, 8, std::slice::from_ref(&st)).render());
    println!("  close_g     {}", prefix_g(&close_g(&g), 8, &[]).render());
    println!("  flattened   {}", prefix(&flatten(&g), 8).render());
}

fn skip_delays(r: &GRes) -> GNode {
    let mut node = r.force().clone();
    while let GNode::Delay(next) = node {
        node = next.force().clone();
    }
    node
}
