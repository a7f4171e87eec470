//! Abstract syntax of expressions and statements.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

/// Variable names. Cheap to clone.
pub type Ident = Arc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
}

/// Expressions of both sorts. Integer-valued forms are literals, variables
/// and arithmetic; boolean-valued forms are the rest. The parser rejects
/// programs that mix the sorts, see [`Expr::sort`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(BigInt),
    Var(Ident),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Bool(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Int,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Int => "integer",
            Sort::Bool => "boolean",
        })
    }
}

impl Expr {
    pub fn int(n: impl Into<BigInt>) -> Expr {
        Expr::Int(n.into())
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Ident::from(name))
    }

    pub fn arith(op: ArithOp, l: Expr, r: Expr) -> Expr {
        Expr::Arith(op, Box::new(l), Box::new(r))
    }

    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::Cmp(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::Or(Box::new(l), Box::new(r))
    }

    /// The sort of the outermost constructor.
    pub fn sort(&self) -> Sort {
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Arith(..) => Sort::Int,
            Expr::Cmp(..) | Expr::Bool(_) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => Sort::Bool,
        }
    }

    /// Checks that every subexpression is used at its own sort, and that the
    /// whole expression has sort `want`. Returns the offending subexpression
    /// and the sort it was expected to have.
    pub fn check_sort(&self, want: Sort) -> Result<(), (&Expr, Sort)> {
        if self.sort() != want {
            return Err((self, want));
        }
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Bool(_) => Ok(()),
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) => {
                l.check_sort(Sort::Int)?;
                r.check_sort(Sort::Int)
            }
            Expr::Not(e) => e.check_sort(Sort::Bool),
            Expr::And(l, r) | Expr::Or(l, r) => {
                l.check_sort(Sort::Bool)?;
                r.check_sort(Sort::Bool)
            }
        }
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

/// Statements. `ParL`, `ParR` and `Suspend` are auxiliary forms used only by
/// the small-step semantics: `ParL(s0, s1)` is a parallel composition whose
/// left side makes the next step, `ParR` likewise for the right side, and
/// `Suspend` releases control immediately (cooperative scheduling only). The
/// parser never produces them.
///
/// Children are reference counted so that residual statements built during
/// evaluation share structure with the program they came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign(Ident, Arc<Expr>),
    Skip,
    Seq(Arc<Stmt>, Arc<Stmt>),
    If(Arc<Expr>, Arc<Stmt>, Arc<Stmt>),
    While(Arc<Expr>, Arc<Stmt>),
    Par(Arc<Stmt>, Arc<Stmt>),
    Atomic(Arc<Stmt>),
    Await(Arc<Expr>, Arc<Stmt>),
    ParL(Arc<Stmt>, Arc<Stmt>),
    ParR(Arc<Stmt>, Arc<Stmt>),
    Suspend,
}

impl Stmt {
    pub fn assign(x: &str, e: Expr) -> Stmt {
        Stmt::Assign(Ident::from(x), Arc::new(e))
    }

    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Arc::new(a), Arc::new(b))
    }

    pub fn if_(e: Expr, t: Stmt, f: Stmt) -> Stmt {
        Stmt::If(Arc::new(e), Arc::new(t), Arc::new(f))
    }

    pub fn while_(e: Expr, body: Stmt) -> Stmt {
        Stmt::While(Arc::new(e), Arc::new(body))
    }

    pub fn par(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Par(Arc::new(a), Arc::new(b))
    }

    pub fn atomic(s: Stmt) -> Stmt {
        Stmt::Atomic(Arc::new(s))
    }

    pub fn await_(e: Expr, s: Stmt) -> Stmt {
        Stmt::Await(Arc::new(e), Arc::new(s))
    }

    /// Number of statement constructors in the tree.
    pub fn size(&self) -> usize {
        match self {
            Stmt::Assign(..) | Stmt::Skip | Stmt::Suspend => 1,
            Stmt::Atomic(s) | Stmt::While(_, s) | Stmt::Await(_, s) => 1 + s.size(),
            Stmt::Seq(a, b) | Stmt::Par(a, b) | Stmt::If(_, a, b) | Stmt::ParL(a, b) | Stmt::ParR(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Whether the statement contains `ParL`, `ParR` or `Suspend` anywhere.
    pub fn has_auxiliary(&self) -> bool {
        match self {
            Stmt::ParL(..) | Stmt::ParR(..) | Stmt::Suspend => true,
            Stmt::Assign(..) | Stmt::Skip => false,
            Stmt::Atomic(s) | Stmt::While(_, s) | Stmt::Await(_, s) => s.has_auxiliary(),
            Stmt::Seq(a, b) | Stmt::Par(a, b) | Stmt::If(_, a, b) => a.has_auxiliary() || b.has_auxiliary(),
        }
    }

    /// Variables assigned anywhere in the statement.
    pub fn assigned_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.walk(&mut |s| {
            if let Stmt::Assign(x, _) = s {
                out.insert(x.clone());
            }
        });
        out
    }

    /// Variables read by some expression in the statement.
    pub fn read_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.walk(&mut |s| match s {
            Stmt::Assign(_, e) | Stmt::If(e, ..) | Stmt::While(e, _) | Stmt::Await(e, _) => e.collect_vars(&mut out),
            _ => {}
        });
        out
    }

    /// All variables mentioned by the statement, read or written.
    pub fn vars(&self) -> BTreeSet<Ident> {
        let mut out = self.read_vars();
        out.extend(self.assigned_vars());
        out
    }

    /// Visits every substatement, parents before children.
    pub fn walk(&self, f: &mut impl FnMut(&Stmt)) {
        f(self);
        match self {
            Stmt::Assign(..) | Stmt::Skip | Stmt::Suspend => {}
            Stmt::Atomic(s) | Stmt::While(_, s) | Stmt::Await(_, s) => s.walk(f),
            Stmt::Seq(a, b) | Stmt::Par(a, b) | Stmt::If(_, a, b) | Stmt::ParL(a, b) | Stmt::ParR(a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    /// Removes every `skip;` prefix, at any position. Under cooperative
    /// scheduling `skip; s` and `s` evaluate identically, so two residual
    /// statements that agree after this normalization are interchangeable.
    pub fn strip_skip_prefixes(&self) -> Stmt {
        match self {
            Stmt::Seq(a, b) if **a == Stmt::Skip => b.strip_skip_prefixes(),
            Stmt::Assign(..) | Stmt::Skip | Stmt::Suspend => self.clone(),
            Stmt::Seq(a, b) => Stmt::seq(a.strip_skip_prefixes(), b.strip_skip_prefixes()),
            Stmt::Par(a, b) => Stmt::par(a.strip_skip_prefixes(), b.strip_skip_prefixes()),
            Stmt::ParL(a, b) => Stmt::ParL(Arc::new(a.strip_skip_prefixes()), Arc::new(b.strip_skip_prefixes())),
            Stmt::ParR(a, b) => Stmt::ParR(Arc::new(a.strip_skip_prefixes()), Arc::new(b.strip_skip_prefixes())),
            Stmt::If(e, a, b) => Stmt::If(
                e.clone(),
                Arc::new(a.strip_skip_prefixes()),
                Arc::new(b.strip_skip_prefixes()),
            ),
            Stmt::While(e, s) => Stmt::While(e.clone(), Arc::new(s.strip_skip_prefixes())),
            Stmt::Await(e, s) => Stmt::Await(e.clone(), Arc::new(s.strip_skip_prefixes())),
            Stmt::Atomic(s) => Stmt::atomic(s.strip_skip_prefixes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_counts_statement_nodes() {
        let s = Stmt::par(
            Stmt::assign("x", Expr::int(1)),
            Stmt::seq(Stmt::Skip, Stmt::atomic(Stmt::Skip)),
        );
        // par, assign, seq, skip, atomic, skip
        assert_eq!(s.size(), 6);
    }

    #[test]
    fn sort_checking_finds_mixed_operands() {
        let bad = Expr::and(Expr::Bool(true), Expr::var("x"));
        let (culprit, want) = bad.check_sort(Sort::Bool).unwrap_err();
        assert_eq!(culprit, &Expr::var("x"));
        assert_eq!(want, Sort::Bool);
        assert!(Expr::cmp(CmpOp::Lt, Expr::var("x"), Expr::int(2))
            .check_sort(Sort::Bool)
            .is_ok());
    }

    #[test]
    fn skip_prefixes_are_removed_everywhere() {
        let a = Stmt::await_(Expr::Bool(true), Stmt::Skip);
        let s = Stmt::par(Stmt::seq(Stmt::Skip, a.clone()), Stmt::seq(Stmt::Skip, Stmt::Skip));
        assert_eq!(s.strip_skip_prefixes(), Stmt::par(a, Stmt::Skip));
    }

    #[test]
    fn vars_split_into_reads_and_writes() {
        let s = Stmt::seq(
            Stmt::assign("x", Expr::var("y")),
            Stmt::while_(Expr::cmp(CmpOp::Eq, Expr::var("z"), Expr::int(0)), Stmt::Skip),
        );
        let reads: Vec<_> = s.read_vars().into_iter().map(|v| v.to_string()).collect();
        assert_eq!(reads, vec!["y", "z"]);
        assert_eq!(s.assigned_vars().len(), 1);
    }
}
