//! Concrete syntax.
//!
//! ```text
//! stmt  ::= seq ('||' seq)*                   right-associative
//! seq   ::= atom (';' atom)*                  right-associative
//! atom  ::= ident ':=' iexpr | 'skip'
//!         | 'if' bexpr 'then' stmt 'else' stmt 'fi'
//!         | 'while' bexpr 'do' stmt 'od'
//!         | 'atomic' '{' stmt '}'
//!         | 'await' bexpr 'then' ('{' stmt '}' | atom)
//!         | '(' stmt ')'
//! ```
//!
//! Expressions are parsed with a single grammar (`or` < `and` < `not` <
//! comparison < `+ -` < `*`) and then sort-checked, so a misplaced integer or
//! boolean is reported as a type error rather than a syntax error.

use num_bigint::BigInt;
use thiserror::Error;

use super::state::State;
use super::syntax::{ArithOp, CmpOp, Expr, Ident, Sort, Stmt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("type error at {line}:{col}: expected {expected} expression, found `{found}`")]
    Type {
        line: usize,
        col: usize,
        expected: Sort,
        found: String,
    },
}

impl ParseError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::Type { line, col, .. } => (*line, *col),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "skip", "if", "then", "else", "fi", "while", "do", "od", "atomic", "await", "true", "false", "not", "and", "or",
    "suspend",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Ident(x) => format!("identifier `{x}`"),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    const SYMBOLS: &[&str] = &[":=", "||", "<=", ";", "(", ")", "{", "}", "+", "-", "*", "=", "<", ","];
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = src;
    'outer: while let Some(c) = rest.chars().next() {
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '#' {
            // comment to end of line
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
            continue;
        }
        if c.is_ascii_digit() {
            let end = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            let n: BigInt = rest[..end].parse().expect("digits form an integer");
            out.push(Token {
                tok: Tok::Int(n),
                line,
                col,
            });
            col += end;
            rest = &rest[end..];
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            let word = &rest[..end];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token { tok, line, col });
            col += end;
            rest = &rest[end..];
            continue;
        }
        for sym in SYMBOLS {
            if rest.starts_with(sym) {
                out.push(Token {
                    tok: Tok::Sym(sym),
                    line,
                    col,
                });
                col += sym.len();
                rest = &rest[sym.len()..];
                continue 'outer;
            }
        }
        return Err(ParseError::Syntax {
            line,
            col,
            msg: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Tok::Kw(t) if *t == k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", self.peek().describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(format!("expected `{k}`, found {}", self.peek().describe()))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            t => self.error(format!("unexpected {}", t.describe())),
        }
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let first = self.seq()?;
        if self.eat_sym("||") {
            let rest = self.stmt()?;
            Ok(Stmt::par(first, rest))
        } else {
            Ok(first)
        }
    }

    fn seq(&mut self) -> Result<Stmt, ParseError> {
        let first = self.atom()?;
        if self.eat_sym(";") {
            let rest = self.seq()?;
            Ok(Stmt::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn atom(&mut self) -> Result<Stmt, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                self.expect_sym(":=")?;
                let e = self.typed_expr(Sort::Int)?;
                Ok(Stmt::assign(&x, e))
            }
            Tok::Kw("skip") => {
                self.bump();
                Ok(Stmt::Skip)
            }
            Tok::Kw("if") => {
                self.bump();
                let e = self.typed_expr(Sort::Bool)?;
                self.expect_kw("then")?;
                let t = self.stmt()?;
                self.expect_kw("else")?;
                let f = self.stmt()?;
                self.expect_kw("fi")?;
                Ok(Stmt::if_(e, t, f))
            }
            Tok::Kw("while") => {
                self.bump();
                let e = self.typed_expr(Sort::Bool)?;
                self.expect_kw("do")?;
                let body = self.stmt()?;
                self.expect_kw("od")?;
                Ok(Stmt::while_(e, body))
            }
            Tok::Kw("atomic") => {
                self.bump();
                self.expect_sym("{")?;
                let body = self.stmt()?;
                self.expect_sym("}")?;
                Ok(Stmt::atomic(body))
            }
            Tok::Kw("await") => {
                self.bump();
                let e = self.typed_expr(Sort::Bool)?;
                self.expect_kw("then")?;
                let body = if self.eat_sym("{") {
                    let body = self.stmt()?;
                    self.expect_sym("}")?;
                    body
                } else {
                    self.atom()?
                };
                Ok(Stmt::await_(e, body))
            }
            Tok::Kw("suspend") => self.error("`suspend` is an internal form and cannot appear in programs"),
            Tok::Sym("(") => {
                self.bump();
                let s = self.stmt()?;
                self.expect_sym(")")?;
                Ok(s)
            }
            t => self.error(format!("expected a statement, found {}", t.describe())),
        }
    }

    fn typed_expr(&mut self, want: Sort) -> Result<Expr, ParseError> {
        let (line, col) = self.here();
        let e = self.expr()?;
        match e.check_sort(want) {
            Ok(()) => Ok(e),
            Err((culprit, expected)) => Err(ParseError::Type {
                line,
                col,
                expected,
                found: culprit.to_string(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.conj()?;
        while self.eat_kw("or") {
            let r = self.conj()?;
            l = Expr::or(l, r);
        }
        Ok(l)
    }

    fn conj(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.neg()?;
        while self.eat_kw("and") {
            let r = self.neg()?;
            l = Expr::and(l, r);
        }
        Ok(l)
    }

    fn neg(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            Ok(Expr::not(self.neg()?))
        } else {
            self.comparison()
        }
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let l = self.additive()?;
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            _ => return Ok(l),
        };
        self.bump();
        let r = self.additive()?;
        Ok(Expr::cmp(op, l, r))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => ArithOp::Add,
                Tok::Sym("-") => ArithOp::Sub,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.multiplicative()?;
            l = Expr::arith(op, l, r);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.primary()?;
        while self.eat_sym("*") {
            let r = self.primary()?;
            l = Expr::arith(ArithOp::Mul, l, r);
        }
        Ok(l)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Sym("-") => match self.bump() {
                Tok::Int(n) => Ok(Expr::Int(-n)),
                _ => {
                    self.pos -= 1;
                    self.error("expected an integer literal after `-`")
                }
            },
            Tok::Ident(x) => Ok(Expr::Var(Ident::from(x))),
            Tok::Kw("true") => Ok(Expr::Bool(true)),
            Tok::Kw("false") => Ok(Expr::Bool(false)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            t => {
                self.pos -= 1;
                self.error(format!("expected an expression, found {}", t.describe()))
            }
        }
    }

    fn int_literal(&mut self) -> Result<BigInt, ParseError> {
        let neg = self.eat_sym("-");
        match self.bump() {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            t => {
                self.pos -= 1;
                self.error(format!("expected an integer, found {}", t.describe()))
            }
        }
    }

    fn state(&mut self) -> Result<State, ParseError> {
        self.expect_sym("{")?;
        let mut entries: Vec<(Ident, BigInt)> = Vec::new();
        if !self.eat_sym("}") {
            loop {
                let x = match self.bump() {
                    Tok::Ident(x) => x,
                    t => {
                        self.pos -= 1;
                        return self.error(format!("expected a variable, found {}", t.describe()));
                    }
                };
                self.expect_sym("=")?;
                let v = self.int_literal()?;
                entries.push((Ident::from(x), v));
                if self.eat_sym("}") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        Ok(entries.into_iter().collect())
    }
}

/// Parses a program. The result never contains auxiliary forms.
pub fn parse(src: &str) -> Result<Stmt, ParseError> {
    let mut p = Parser::new(src)?;
    let s = p.stmt()?;
    p.expect_eof()?;
    Ok(s)
}

/// Parses a standalone expression of the given sort.
pub fn parse_expr(src: &str, sort: Sort) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.typed_expr(sort)?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a state literal such as `{x=0, y=-3}` or `{}`.
pub fn parse_state(src: &str) -> Result<State, ParseError> {
    let mut p = Parser::new(src)?;
    let s = p.state()?;
    p.expect_eof()?;
    Ok(s)
}

/// Parses a `;`-separated list of state literals. Empty input gives an empty
/// list.
pub fn parse_states(src: &str) -> Result<Vec<State>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    if matches!(p.peek(), Tok::Eof) {
        return Ok(out);
    }
    loop {
        out.push(p.state()?);
        if !p.eat_sym(";") {
            break;
        }
    }
    p.expect_eof()?;
    Ok(out)
}
