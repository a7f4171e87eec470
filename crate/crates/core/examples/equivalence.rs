//! Bounded strong and weak bisimilarity, convergence, and replaying a
//! counterexample path.
//!
//! Run with `cargo run --example equivalence`.

use concsem::bigstep::eval;
use concsem::equiv::{converges, replay, strong_bisim, weak_bisim, Side, Verdict};
use concsem::lang::{parse, parse_state, SchedMode};
use concsem::resumption::{delta_inf, prefix, Res};

const PRE: SchedMode = SchedMode::Preemptive;

fn main() {
    let st = parse_state("{x=0}").expect("state");
    let run = |src: &str| eval(&parse(src).expect("program"), &st, PRE);

    let pairs = [
        ("x := 2", "atomic { x := 1; x := x+1 }"),
        ("x := 1 || x := 2", "x := 2 || x := 1"),
        ("x := 1; x := 2", "x := 2"),
    ];
    for (a, b) in pairs {
        let (ra, rb) = (run(a), run(b));
        println!("{a}  vs  {b}");
        println!("  strong {}", strong_bisim(&ra, &rb, 40));
        println!("  weak   {}", weak_bisim(&ra, &rb, 40, 1000));
    }

    // A failing verdict carries a path that leads to the mismatch.
    let (ra, rb) = (run("x := 1 || x := 2"), run("x := 2 || x := 1"));
    if let Verdict::Fails { path, .. } = strong_bisim(&ra, &rb, 40) {
        let l = replay(&ra, &path, Side::Left).expect("path");
        let r = replay(&rb, &path, Side::Right).expect("path");
        println!("replayed: {}  vs  {}", prefix(&l, 1).render(), prefix(&r, 1).render());
    }

    // Delays are invisible to weak bisimilarity, but divergence is not
    // provable with finite fuel.
    let done = Res::ret(st.clone());
    println!(
        "δ^7 ret vs ret   {}",
        weak_bisim(&Res::delays(7, done.clone()), &done, 50, 1000)
    );
    println!("δ∞ vs ret        {}", weak_bisim(&delta_inf(), &done, 50, 1000));
    println!(
        "converges(δ^3 ret, 10)  {:?}",
        converges(&Res::delays(3, done.clone()), 10)
            .converged()
            .map(|r| prefix(r, 2).render())
    );
    println!(
        "converges(δ∞, 1000)     {:?}",
        converges(&delta_inf(), 1000).converged().map(|r| prefix(r, 2).render())
    );
}
