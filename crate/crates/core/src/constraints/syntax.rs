//! Text syntax for constraints.
//!
//! ```text
//! alldistinct(x,y,z)      element(x,[NP,PP])      daughter(Y,n1)
//! x = 1    x != y         x -> ~y                 x & y = true
//! ```
//!
//! Boolean operators by increasing binding strength: `<->`, `->` (right
//! associative), `|`, `&`, `~`. `v[a]` is the literal "`v` takes value `a`".
//! Names are looked up in the caller's table; unknown names in term
//! positions read as constants.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{all_distinct, bool_post, daughter, element, BoolFormula, Constraint, Term};
use crate::solver::{Store, VarId};
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("constraint syntax error at column {col}: {msg}")]
pub struct SyntaxError {
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Not,
    And,
    Or,
    Implies,
    Equiv,
    Eq,
    Neq,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if c.is_whitespace() {
            i += 1;
            continue;
        } else if rest.starts_with("<->") {
            (Tok::Equiv, 3)
        } else if rest.starts_with("->") {
            (Tok::Implies, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBrack, 1),
                ']' => (Tok::RBrack, 1),
                ',' => (Tok::Comma, 1),
                '~' | '!' => (Tok::Not, 1),
                '&' => (Tok::And, 1),
                '|' => (Tok::Or, 1),
                '=' => (Tok::Eq, 1),
                c if is_ident(c) => {
                    let start = i;
                    while i < chars.len() && is_ident(chars[i]) {
                        i += 1;
                    }
                    out.push((col, Tok::Ident(chars[start..i].iter().collect())));
                    continue;
                }
                other => {
                    return Err(SyntaxError {
                        col,
                        msg: format!("unexpected character '{other}'"),
                    })
                }
            }
        };
        out.push((col, tok));
        i += len;
    }
    Ok(out)
}

fn is_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    store: &'a Store,
    names: &'a BTreeMap<String, VarId>,
}

/// Parses one constraint, resolving variable names through `names`.
pub fn parse_constraint(text: &str, store: &Store, names: &BTreeMap<String, VarId>) -> Result<Constraint, SyntaxError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count() + 1,
        store,
        names,
    };
    let c = p.constraint()?;
    if p.pos < p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(c)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn error(&self, msg: &str) -> SyntaxError {
        let col = self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.end);
        SyntaxError {
            col,
            msg: msg.to_string(),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {t:?}")))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    fn var(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    fn term(&self, name: &str) -> Term {
        match self.var(name) {
            Some(v) => Term::Var(v),
            None => Term::Const(Value::parse(name)),
        }
    }

    fn constraint(&mut self) -> Result<Constraint, SyntaxError> {
        if let (Some(Tok::Ident(head)), Some(Tok::LParen)) = (self.peek(), self.peek_at(1)) {
            let head = head.to_ascii_lowercase();
            match head.as_str() {
                "alldistinct" | "all_distinct" => {
                    self.pos += 2;
                    let mut terms = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            let n = self.ident()?;
                            terms.push(self.term(&n));
                            if self.peek() == Some(&Tok::Comma) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(all_distinct(terms));
                }
                "element" => {
                    self.pos += 2;
                    let v = self.fd_var()?;
                    self.expect(Tok::Comma)?;
                    self.expect(Tok::LBrack)?;
                    let mut allowed = Vec::new();
                    while let Some(Tok::Ident(s)) = self.peek() {
                        allowed.push(Value::parse(s));
                        self.pos += 1;
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        }
                    }
                    self.expect(Tok::RBrack)?;
                    self.expect(Tok::RParen)?;
                    return Ok(element(v, allowed));
                }
                "daughter" => {
                    self.pos += 2;
                    let y = self.fd_var()?;
                    self.expect(Tok::Comma)?;
                    let x = self.ident()?;
                    let x = self.term(&x);
                    self.expect(Tok::RParen)?;
                    return Ok(daughter(y, x));
                }
                _ => {}
            }
        }
        // A plain term comparison: `x = 1`, `x != y`.
        if let (Some(Tok::Ident(a)), Some(op @ (Tok::Eq | Tok::Neq)), Some(Tok::Ident(b))) =
            (self.peek(), self.peek_at(1), self.peek_at(2))
        {
            let lhs_fd = self.var(a).is_some_and(|v| !self.store.is_bool(v));
            let rhs_bool_const = b == "true" || b == "false";
            if lhs_fd || !rhs_bool_const {
                let (a, b, op) = (self.term(a), self.term(b), op.clone());
                self.pos += 3;
                return Ok(match op {
                    Tok::Eq => Constraint::Eq(a, b),
                    _ => Constraint::Neq(a, b),
                });
            }
        }
        let f = self.equiv()?;
        let f = match self.peek() {
            Some(Tok::Eq) => {
                self.pos += 1;
                let b = self.bool_const()?;
                BoolFormula::equiv(f, BoolFormula::Const(b))
            }
            Some(Tok::Neq) => {
                self.pos += 1;
                let b = self.bool_const()?;
                BoolFormula::equiv(f, BoolFormula::Const(!b))
            }
            _ => f,
        };
        Ok(bool_post(f))
    }

    fn bool_const(&mut self) -> Result<bool, SyntaxError> {
        match self.ident()?.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.error("expected true or false")),
        }
    }

    fn fd_var(&mut self) -> Result<VarId, SyntaxError> {
        let n = self.ident()?;
        match self.var(&n) {
            Some(v) if !self.store.is_bool(v) => Ok(v),
            Some(_) => Err(self.error(&format!("{n} is boolean"))),
            None => Err(self.error(&format!("unknown variable {n}"))),
        }
    }

    fn equiv(&mut self) -> Result<BoolFormula, SyntaxError> {
        let mut f = self.implies()?;
        while self.peek() == Some(&Tok::Equiv) {
            self.pos += 1;
            let g = self.implies()?;
            f = BoolFormula::equiv(f, g);
        }
        Ok(f)
    }

    fn implies(&mut self) -> Result<BoolFormula, SyntaxError> {
        let f = self.or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let g = self.implies()?;
            return Ok(BoolFormula::implies(f, g));
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<BoolFormula, SyntaxError> {
        let mut fs = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            fs.push(self.and()?);
        }
        Ok(if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            BoolFormula::Or(fs)
        })
    }

    fn and(&mut self) -> Result<BoolFormula, SyntaxError> {
        let mut fs = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            fs.push(self.unary()?);
        }
        Ok(if fs.len() == 1 {
            fs.pop().unwrap()
        } else {
            BoolFormula::And(fs)
        })
    }

    fn unary(&mut self) -> Result<BoolFormula, SyntaxError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(BoolFormula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.equiv()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(Tok::Ident(_)) => {
                let n = self.ident()?;
                if n == "true" || n == "false" {
                    return Ok(BoolFormula::Const(n == "true"));
                }
                let Some(v) = self.var(&n) else {
                    self.pos -= 1;
                    return Err(self.error(&format!("unknown variable {n}")));
                };
                if self.peek() == Some(&Tok::LBrack) {
                    self.pos += 1;
                    let a = self.ident()?;
                    self.expect(Tok::RBrack)?;
                    return Ok(BoolFormula::is(v, Value::parse(&a)));
                }
                Ok(BoolFormula::var(v))
            }
            _ => Err(self.error("expected a formula")),
        }
    }
}
