//! Seeded random programs for property suites and differential runs.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::{ArithOp, CmpOp, Expr, Ident, State, Stmt};

const VARS: [&str; 2] = ["x", "y"];
const MAX_LIT: i64 = 3;
const PROBE_CAP: usize = 64;

/// `count` programs of at most `max_size` statement nodes, each paired with
/// a random initial state. The same seed always gives the same corpus.
///
/// Programs use the variables `x` and `y` and every surface statement form.
/// Sizes are drawn uniformly from `1..=max_size`.
pub fn gen_corpus(seed: u64, count: usize, max_size: usize) -> Vec<(Stmt, State)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_size = max_size.max(1);
    (0..count)
        .map(|_| {
            let size = rng.gen_range(1..=max_size);
            let s = gen_stmt(&mut rng, size);
            (s, gen_state(&mut rng))
        })
        .collect()
}

fn gen_state(rng: &mut ChaCha8Rng) -> State {
    VARS.iter()
        .map(|v| (Ident::from(*v), BigInt::from(rng.gen_range(0..=MAX_LIT))))
        .collect()
}

fn var(rng: &mut ChaCha8Rng) -> &'static str {
    VARS.choose(rng).expect("nonempty")
}

/// A statement with exactly `size` statement nodes.
fn gen_stmt(rng: &mut ChaCha8Rng, size: usize) -> Stmt {
    if size <= 1 {
        return if rng.gen_bool(0.3) {
            Stmt::Skip
        } else {
            let x = var(rng);
            let e = if rng.gen_bool(0.5) {
                Expr::int(rng.gen_range(0..=MAX_LIT))
            } else {
                gen_int(rng, 1)
            };
            Stmt::assign(x, e)
        };
    }
    let unary_only = size == 2;
    match rng.gen_range(0..if unary_only { 3 } else { 6 }) {
        0 => Stmt::atomic(gen_stmt(rng, size - 1)),
        1 => Stmt::while_(gen_bool(rng, 1), gen_stmt(rng, size - 1)),
        2 => Stmt::await_(gen_bool(rng, 1), gen_stmt(rng, size - 1)),
        k => {
            let left = rng.gen_range(1..size - 1);
            let (a, b) = (gen_stmt(rng, left), gen_stmt(rng, size - 1 - left));
            match k {
                3 => Stmt::seq(a, b),
                4 => Stmt::par(a, b),
                _ => Stmt::if_(gen_bool(rng, 1), a, b),
            }
        }
    }
}

fn gen_int(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.5) {
            Expr::int(rng.gen_range(0..=MAX_LIT))
        } else {
            Expr::var(var(rng))
        };
    }
    let op = *[ArithOp::Add, ArithOp::Add, ArithOp::Sub, ArithOp::Mul]
        .choose(rng)
        .expect("nonempty");
    Expr::arith(op, Expr::var(var(rng)), gen_int(rng, depth - 1))
}

fn gen_bool(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => Expr::Bool(rng.gen_bool(0.5)),
        1 => {
            let op = *[CmpOp::Eq, CmpOp::Lt, CmpOp::Le].choose(rng).expect("nonempty");
            Expr::cmp(op, Expr::var(var(rng)), Expr::int(rng.gen_range(0..=MAX_LIT)))
        }
        2 => Expr::not(gen_bool(rng, depth - 1)),
        3 => Expr::and(gen_bool(rng, depth - 1), gen_bool(rng, depth - 1)),
        _ => Expr::or(gen_bool(rng, depth - 1), gen_bool(rng, depth - 1)),
    }
}

/// Three fixed initial states used by the differential suites.
pub fn initial_states() -> Vec<State> {
    vec![
        State::from_pairs(&[("x", 0), ("y", 0)]),
        State::from_pairs(&[("x", 1), ("y", 2)]),
        State::from_pairs(&[("x", 3), ("y", 1)]),
    ]
}

/// Probe states for comparing giant-step continuations: every assignment
/// of `0..=3` to the variables of `s` and `init`, at most 64 of them, plus
/// `init` itself.
pub fn default_probes(s: &Stmt, init: &State) -> Vec<State> {
    let mut names: BTreeSet<Ident> = s.vars();
    names.extend(init.iter().map(|(k, _)| k.clone()));
    let names: Vec<Ident> = names.into_iter().collect();
    let mut out = vec![init.clone()];
    let mut digits = vec![0i64; names.len()];
    loop {
        if out.len() > PROBE_CAP {
            break;
        }
        let st: State = names
            .iter()
            .cloned()
            .zip(digits.iter().map(|&d| BigInt::from(d)))
            .collect();
        if st != *init {
            out.push(st);
        }
        // odometer increment; stops after the last assignment
        let mut i = 0;
        loop {
            if i == digits.len() {
                return out;
            }
            digits[i] += 1;
            if digits[i] <= MAX_LIT {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty, sat};
    use proptest::prelude::*;

    fn guards(s: &Stmt, out: &mut Vec<Expr>) {
        s.walk(&mut |t| match t {
            Stmt::If(e, ..) | Stmt::While(e, _) | Stmt::Await(e, _) => out.push((**e).clone()),
            _ => {}
        });
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_corpus(42, 100, 12);
        let b = gen_corpus(42, 100, 12);
        assert_eq!(a, b);
        assert_ne!(a, gen_corpus(43, 100, 12));
    }

    #[test]
    fn smallest_programs() {
        for seed in 0..50 {
            let (s, _) = &gen_corpus(seed, 1, 1)[0];
            assert!(matches!(s, Stmt::Skip | Stmt::Assign(..)), "{s}");
        }
    }

    #[test]
    fn sizes_are_bounded_and_forms_covered() {
        let corpus = gen_corpus(42, 500, 12);
        let mut seen = std::collections::HashSet::new();
        let (mut sat_true, mut sat_false) = (false, false);
        for (s, st) in &corpus {
            assert!(s.size() <= 12 && s.size() >= 1);
            assert!(!s.has_auxiliary());
            s.walk(&mut |t| {
                seen.insert(std::mem::discriminant(t));
            });
            let mut gs = Vec::new();
            guards(s, &mut gs);
            for g in gs {
                if sat(&g, st) {
                    sat_true = true;
                } else {
                    sat_false = true;
                }
            }
        }
        assert_eq!(seen.len(), 8, "assign, skip, seq, if, while, par, atomic, await");
        assert!(sat_true && sat_false);
    }

    #[test]
    fn probes() {
        let s = parse("x := y").unwrap();
        let init = State::from_pairs(&[("x", 9)]);
        let p = default_probes(&s, &init);
        assert_eq!(p.len(), 17);
        assert_eq!(p[0], init);
        assert_eq!(p[1], State::from_pairs(&[("x", 0), ("y", 0)]));
        let many = parse("a := 1; b := 1; c := 1; d := 1").unwrap();
        assert_eq!(default_probes(&many, &State::new()).len(), 65);
    }

    proptest! {
        #[test]
        fn generated_programs_parse_back(seed in any::<u64>(), size in 1usize..16) {
            for (s, _) in gen_corpus(seed, 4, size) {
                let text = pretty(&s);
                prop_assert_eq!(parse(&text).unwrap(), s, "{}", text);
            }
        }
    }
}
