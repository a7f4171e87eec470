//! Differential testing: generate random programs and check that the
//! big-step, small-step and giant-step semantics agree on each.
//!
//! Run with `cargo run --release --example differential -- [seed] [count]`.

use rayon::prelude::*;

use concsem::bigstep::eval;
use concsem::corpus::{default_probes, gen_corpus};
use concsem::equiv::{strong_bisim, strong_bisim_g, Verdict};
use concsem::giantstep::eval_g;
use concsem::lang::{SchedMode, State, Stmt};
use concsem::smallstep::{gmmred, mmred};

const DEPTH: usize = 40;

fn check(s: &Stmt, st: &State) -> [Verdict; 2] {
    let m = SchedMode::Preemptive;
    let big = strong_bisim(&eval(s, st, m), &mmred(s, st, m), DEPTH);
    let giant = strong_bisim_g(&eval_g(s, st, m), &gmmred(s, st, m), DEPTH, &default_probes(s, st));
    [big, giant]
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let count = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);

    let corpus = gen_corpus(seed, count, 10);
    let results: Vec<_> = corpus.par_iter().map(|(s, st)| check(s, st)).collect();

    let mut bad = 0;
    for ((s, st), verdicts) in corpus.iter().zip(&results) {
        for (name, v) in ["big/small", "giant/small"].iter().zip(verdicts) {
            if !v.holds() {
                bad += 1;
                println!("{name} {st} {s}\n  {v}");
            }
        }
    }
    println!("seed {seed}: {count} programs, {bad} disagreements");
}
