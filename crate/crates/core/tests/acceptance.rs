//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use concsem::bigstep::{close, eval, is_await_residual};
use concsem::corpus::{default_probes, gen_corpus, initial_states};
use concsem::equiv::{diverges, strong_bisim, strong_bisim_g, strong_bisim_with, weak_bisim, StmtEquiv, Verdict};
use concsem::giantstep::{close_g, eval_g, flatten};
use concsem::lang::{parse, SchedMode, State, Stmt};
use concsem::resumption::{delta_inf, prefix, yield_free, yield_free_g, Node, Res};
use concsem::smallstep::{gmmred, mmred};
use concsem::tracesem::{is_path_of, trace_eval, Choice, Schedule, TNode};

const PRE: SchedMode = SchedMode::Preemptive;
const COOP: SchedMode = SchedMode::Cooperative;

type Outcome = Result<String, String>;

fn x(v: i64) -> State {
    State::from_pairs(&[("x", v)])
}

fn program(src: &str) -> Stmt {
    parse(src).expect("acceptance programs parse")
}

/// The corpus shared by the corpus-scale criteria.
fn corpus() -> Vec<(Stmt, State)> {
    gen_corpus(42, 500, 12)
}

/// Runs `check` on every case in parallel and reports the first failure.
fn all_cases<T: Sync>(cases: &[T], check: impl Fn(&T) -> Result<(), String> + Sync) -> Outcome {
    let failures: Vec<String> = cases.par_iter().filter_map(|c| check(c).err()).collect();
    match failures.first() {
        None => Ok(format!("{} cases", cases.len())),
        Some(f) => Err(format!(
            "{} of {} cases failed; first: {f}",
            failures.len(),
            cases.len()
        )),
    }
}

fn expect_holds(v: Verdict, what: impl FnOnce() -> String) -> Result<(), String> {
    if v.holds() {
        Ok(())
    } else {
        Err(format!("{}: {v}", what()))
    }
}

/// Smallest wall time of `runs` repetitions, to keep scheduler noise out of
/// a sub-millisecond bound.
fn best_time(runs: usize, mut f: impl FnMut()) -> Duration {
    (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .expect("at least one run")
}

fn golden(src: &str, depth: usize, want: &str) -> Result<String, String> {
    let s = program(src);
    let tree = prefix(&eval(&s, &x(0), PRE), depth);
    let got = tree.render();
    if got != want {
        return Err(format!("rendered `{got}`"));
    }
    if !tree.is_complete() {
        return Err("tree is not finite within the bound".into());
    }
    Ok(got)
}

fn criterion_1() -> Outcome {
    let src = "x := 1 || (x := x+2; x := x+2)";
    let want = "(δ yield ⟨x := x+2; x := x+2⟩ {x=1} + δ yield ⟨x := 1 || x := x+2⟩ {x=2})";
    let got = golden(src, 100, want)?;
    let t = best_time(5, || {
        let _ = prefix(&eval(&program(src), &x(0), PRE), 100).render();
    });
    if t >= Duration::from_millis(1) {
        return Err(format!("took {t:?}, bound is 1 ms"));
    }
    Ok(format!("{got} in {t:?}"))
}

fn criterion_2() -> Outcome {
    golden(
        "atomic { x := 1 || (x := x+2; x := x+2) }",
        100,
        "(δ^5 ret {x=5} + δ^2 (δ^3 ret {x=3} + δ^3 ret {x=1}))",
    )
}

fn criterion_3() -> Outcome {
    let got = golden(
        "(await x = 0 then x := 1) || x := 2",
        100,
        "(δ^2 yield ⟨x := 2⟩ {x=1} + δ yield ⟨await x = 0 then x := 1⟩ {x=2})",
    )?;
    let wrapped = eval(&program("atomic { (await x = 0 then x := 1) || x := 2 }"), &x(0), PRE);
    let Node::Plus(left, right) = wrapped.force() else {
        return Err("atomic wrapping is not a choice".into());
    };
    let l = prefix(left, 1000).render();
    if l != "δ^4 ret {x=2}" {
        return Err(format!("left summand `{l}`"));
    }
    if !diverges(right, 1000) {
        return Err("right summand does not diverge within 1000 layers".into());
    }
    Ok(format!("{got}; atomic: δ^4 ret {{x=2}} + δ∞"))
}

fn big_small(mode: SchedMode, eq: StmtEquiv) -> Outcome {
    let cases: Vec<(Stmt, State)> = corpus()
        .into_iter()
        .flat_map(|(s, _)| initial_states().into_iter().map(move |st| (s.clone(), st)))
        .collect();
    let started = Instant::now();
    let out = all_cases(&cases, |(s, st)| {
        expect_holds(
            strong_bisim_with(&eval(s, st, mode), &mmred(s, st, mode), 60, eq),
            || format!("`{s}` from {st}"),
        )
    })?;
    let took = started.elapsed();
    if took > Duration::from_secs(60) {
        return Err(format!("took {took:?}, bound is 60 s"));
    }
    Ok(format!("{out} in {took:.1?}"))
}

fn criterion_4() -> Outcome {
    big_small(PRE, StmtEquiv::Syntactic)
}

fn criterion_5() -> Outcome {
    let cases: Vec<_> = corpus().into_iter().take(200).collect();
    all_cases(&cases, |(s, st)| {
        let probes = default_probes(s, st);
        expect_holds(
            strong_bisim_g(&eval_g(s, st, PRE), &gmmred(s, st, PRE), 40, &probes),
            || format!("`{s}` from {st}"),
        )
    })
}

fn criterion_6() -> Outcome {
    let cases: Vec<_> = corpus().into_iter().take(200).collect();
    all_cases(&cases, |(s, st)| {
        let a = Stmt::atomic(s.clone());
        let big = eval(&a, st, PRE);
        let giant = flatten(&eval_g(&a, st, PRE));
        if !yield_free(&big, 60) || !yield_free(&giant, 60) {
            return Err(format!("`{a}` from {st} releases control"));
        }
        expect_holds(strong_bisim(&big, &giant, 60), || format!("`{a}` from {st}"))
    })
}

fn schedules_up_to(len: usize) -> Vec<Vec<Choice>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..len {
        frontier = frontier
            .into_iter()
            .flat_map(|p: Vec<Choice>| {
                [Choice::L, Choice::R].into_iter().map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

/// A path through the first `depth` layers of a resumption: the choices
/// taken at each `+`, and the layers met in between.
#[derive(Debug)]
struct Path {
    choices: Vec<Choice>,
    layers: Vec<Layer>,
}

#[derive(Debug, PartialEq)]
enum Layer {
    Delay,
    Ret(State),
    Yield(Stmt, State),
}

fn paths(r: &Res, depth: usize) -> Vec<Path> {
    let mut out = Vec::new();
    walk_paths(r, depth, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

fn walk_paths(r: &Res, depth: usize, choices: &mut Vec<Choice>, layers: &mut Vec<Layer>, out: &mut Vec<Path>) {
    let done = |choices: &Vec<Choice>, layers: &Vec<Layer>, out: &mut Vec<Path>| {
        out.push(Path {
            choices: choices.clone(),
            layers: layers.iter().map(copy_layer).collect(),
        })
    };
    if depth == 0 {
        return done(choices, layers, out);
    }
    match r.force() {
        Node::Ret(st) => {
            layers.push(Layer::Ret(st.clone()));
            done(choices, layers, out);
            layers.pop();
        }
        Node::Yield(s, st) => {
            layers.push(Layer::Yield(s.clone(), st.clone()));
            done(choices, layers, out);
            layers.pop();
        }
        Node::Delay(next) => {
            layers.push(Layer::Delay);
            walk_paths(next, depth - 1, choices, layers, out);
            layers.pop();
        }
        Node::Plus(a, b) => {
            for (c, child) in [(Choice::L, a), (Choice::R, b)] {
                choices.push(c);
                walk_paths(child, depth - 1, choices, layers, out);
                choices.pop();
            }
        }
    }
}

fn copy_layer(l: &Layer) -> Layer {
    match l {
        Layer::Delay => Layer::Delay,
        Layer::Ret(st) => Layer::Ret(st.clone()),
        Layer::Yield(s, st) => Layer::Yield(s.clone(), st.clone()),
    }
}

/// Whether the trace starts with exactly the given layers.
fn trace_starts_with(t: &concsem::tracesem::Trace, layers: &[Layer]) -> bool {
    let mut cur = t.clone();
    for want in layers {
        let next = match (cur.force(), want) {
            (TNode::Delay(next), Layer::Delay) => next.clone(),
            (TNode::Ret(a), Layer::Ret(b)) => return a == b,
            (TNode::Yield(s, a), Layer::Yield(s2, b)) => return s == s2 && a == b,
            _ => return false,
        };
        cur = next;
    }
    true
}

fn criterion_7() -> Outcome {
    let cases: Vec<_> = corpus().into_iter().take(200).collect();
    let schedules = schedules_up_to(6);
    let sound = all_cases(&cases, |(s, st)| {
        let r = eval(s, st, PRE);
        for sched in &schedules {
            let t = trace_eval(s, st, &Schedule::new(sched.clone()), PRE);
            if !is_path_of(&t, &r, 60) {
                return Err(format!("`{s}` from {st} under {sched:?}"));
            }
        }
        Ok(())
    })?;
    let mut count = 0usize;
    for (s, st) in &cases {
        for p in paths(&eval(s, st, PRE), 6) {
            count += 1;
            let t = trace_eval(s, st, &Schedule::new(p.choices.clone()), PRE);
            if !trace_starts_with(&t, &p.layers) {
                return Err(format!("path {:?} of `{s}` from {st} not realized", p.choices));
            }
        }
    }
    Ok(format!(
        "{sound} x {} schedules sound; {count} paths of depth 6 realized",
        schedules.len()
    ))
}

fn criterion_8() -> Outcome {
    let cases = corpus();
    let refl = all_cases(&cases, |(s, st)| {
        expect_holds(weak_bisim(&eval(s, st, PRE), &eval(s, st, PRE), 100, 1000), || {
            format!("reflexivity for `{s}` from {st}")
        })
    })?;
    let padded = all_cases(&cases[..50], |(s, st)| {
        for n in 1..=20 {
            let r = eval(s, st, PRE);
            expect_holds(weak_bisim(&Res::delays(n, r.clone()), &r, 100, 1000), || {
                format!("δ^{n} padding of `{s}` from {st}")
            })?;
        }
        Ok(())
    })?;
    for depth in [1, 10, 100, 1000] {
        for fuel in [0, 1, 10, 100, 1000] {
            for (a, b) in [(Res::ret(x(0)), delta_inf()), (delta_inf(), Res::ret(x(0)))] {
                let v = weak_bisim(&a, &b, depth, fuel);
                if v.holds() {
                    return Err(format!("ret vs δ∞ related at depth {depth}, fuel {fuel}"));
                }
            }
        }
    }
    Ok(format!(
        "reflexivity {refl}; padding n=1..20 on {padded}; ret vs δ∞ never related"
    ))
}

fn criterion_9() -> Outcome {
    let cases = corpus();
    all_cases(&cases, |(s, st)| {
        if !yield_free(&close(&eval(s, st, PRE), PRE), 60) {
            return Err(format!("closed big-step tree of `{s}` from {st} yields"));
        }
        if !yield_free_g(&close_g(&eval_g(s, st, PRE)), 60) {
            return Err(format!("closed giant-step tree of `{s}` from {st} yields"));
        }
        Ok(())
    })
}

/// Checks every yield within `depth` layers; shares work between equal
/// keys.
fn yields_satisfy(
    r: &Res,
    depth: usize,
    ok: &impl Fn(&Stmt) -> bool,
    seen: &mut HashMap<concsem::resumption::Key, usize>,
) -> Result<(), Stmt> {
    if depth == 0 {
        return Ok(());
    }
    if let Some(k) = r.key() {
        if seen.get(k).is_some_and(|&d| d >= depth) {
            return Ok(());
        }
    }
    match r.force() {
        Node::Ret(_) => {}
        Node::Yield(s, _) => {
            if !ok(s) {
                return Err(s.clone());
            }
        }
        Node::Delay(n) => yields_satisfy(n, depth - 1, ok, seen)?,
        Node::Plus(a, b) => {
            yields_satisfy(a, depth - 1, ok, seen)?;
            yields_satisfy(b, depth - 1, ok, seen)?;
        }
    }
    if let Some(k) = r.key() {
        let e = seen.entry(k.clone()).or_insert(0);
        *e = (*e).max(depth);
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let cases: Vec<_> = corpus().into_iter().take(200).collect();
    let residuals = all_cases(&cases, |(s, st)| {
        yields_satisfy(&eval(s, st, COOP), 60, &is_await_residual, &mut HashMap::new())
            .map_err(|bad| format!("`{s}` from {st} yields `{bad}`"))
    })?;
    let agree = big_small(COOP, StmtEquiv::SkipPrefix)?;
    Ok(format!(
        "await residuals only on {residuals}; big/small agreement on {agree}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("golden interleaving", criterion_1),
        ("golden atomic", criterion_2),
        ("golden await", criterion_3),
        ("big-step = small-step", criterion_4),
        ("giant-step = small-step", criterion_5),
        ("atomic coherence big/giant", criterion_6),
        ("trace soundness and completeness", criterion_7),
        ("weak bisimilarity laws", criterion_8),
        ("closing removes yields", criterion_9),
        ("cooperative scheduling", criterion_10),
    ];
    // Written to the raw handle so the report shows even when the test passes.
    let mut report = std::io::stderr();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let took = started.elapsed();
        match &outcome {
            Ok(detail) => writeln!(report, "criterion {:>2} PASS  {name} [{took:.2?}]: {detail}", i + 1).unwrap(),
            Err(reason) => {
                writeln!(report, "criterion {:>2} FAIL  {name} [{took:.2?}]: {reason}", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
