use std::fmt;

use crate::fs::normalize_feature;

/// Boolean expression over feature literals of one node.
///
/// `F` is the status of feature `F`; `F[v]` additionally requires value `v`;
/// `+F` and `-F` abbreviate `F[+]` and `F[-]`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FcrExpr {
    Lit { feature: String, value: Option<String> },
    Not(Box<FcrExpr>),
    And(Vec<FcrExpr>),
    Or(Vec<FcrExpr>),
}

/// Feature co-occurrence restriction `antecedent -> consequent`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fcr {
    pub antecedent: FcrExpr,
    pub consequent: FcrExpr,
}

impl FcrExpr {
    pub fn features(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            FcrExpr::Lit { feature, .. } => {
                if !out.contains(feature) {
                    out.push(feature.clone());
                }
            }
            FcrExpr::Not(e) => e.collect(out),
            FcrExpr::And(es) | FcrExpr::Or(es) => es.iter().for_each(|e| e.collect(out)),
        }
    }
}

impl Fcr {
    pub fn parse(text: &str) -> Result<Fcr, String> {
        let mut p = FcrParser {
            chars: text.chars().collect(),
            pos: 0,
        };
        let antecedent = p.or()?;
        p.skip_ws();
        if !p.eat_str("->") {
            return Err(format!("expected '->' at column {}", p.pos + 1));
        }
        let consequent = p.or()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(format!("trailing input at column {}", p.pos + 1));
        }
        Ok(Fcr { antecedent, consequent })
    }

    pub fn features(&self) -> Vec<String> {
        let mut fs = self.antecedent.features();
        for f in self.consequent.features() {
            if !fs.contains(&f) {
                fs.push(f);
            }
        }
        fs
    }
}

struct FcrParser {
    chars: Vec<char>,
    pos: usize,
}

impl FcrParser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<FcrExpr, String> {
        let mut es = vec![self.and()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            es.push(self.and()?);
        }
        Ok(if es.len() == 1 {
            es.pop().unwrap()
        } else {
            FcrExpr::Or(es)
        })
    }

    fn and(&mut self) -> Result<FcrExpr, String> {
        let mut es = vec![self.unary()?];
        while self.peek() == Some('&') {
            self.pos += 1;
            es.push(self.unary()?);
        }
        Ok(if es.len() == 1 {
            es.pop().unwrap()
        } else {
            FcrExpr::And(es)
        })
    }

    fn name(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn unary(&mut self) -> Result<FcrExpr, String> {
        match self.peek() {
            Some('~') | Some('!') => {
                self.pos += 1;
                Ok(FcrExpr::Not(Box::new(self.unary()?)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.or()?;
                if self.peek() != Some(')') {
                    return Err(format!("expected ')' at column {}", self.pos + 1));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(sign @ ('+' | '-')) if self.chars.get(self.pos + 1) != Some(&'>') => {
                self.pos += 1;
                let f = self.name();
                if f.is_empty() {
                    return Err(format!("expected a feature at column {}", self.pos + 1));
                }
                Ok(FcrExpr::Lit {
                    feature: normalize_feature(&f),
                    value: Some(sign.to_string()),
                })
            }
            _ => {
                let f = self.name();
                if f.is_empty() {
                    return Err(format!("expected a feature at column {}", self.pos + 1));
                }
                let value = if self.peek() == Some('[') {
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    while self.pos < self.chars.len() && self.chars[self.pos] != ']' {
                        self.pos += 1;
                    }
                    if self.pos >= self.chars.len() {
                        return Err("unterminated value literal".into());
                    }
                    let v: String = self.chars[start..self.pos].iter().collect();
                    self.pos += 1;
                    Some(v.trim().to_string())
                } else {
                    None
                };
                Ok(FcrExpr::Lit {
                    feature: normalize_feature(&f),
                    value,
                })
            }
        }
    }
}

impl fmt::Display for FcrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn inner(f: &mut fmt::Formatter<'_>, e: &FcrExpr) -> fmt::Result {
            match e {
                FcrExpr::And(_) | FcrExpr::Or(_) => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        match self {
            FcrExpr::Lit { feature, value } => {
                let name = feature.to_ascii_uppercase();
                match value.as_deref() {
                    Some(s @ ("+" | "-")) => write!(f, "{s}{name}"),
                    Some(v) => write!(f, "{name}[{v}]"),
                    None => f.write_str(&name),
                }
            }
            FcrExpr::Not(e) => {
                f.write_str("~")?;
                inner(f, e)
            }
            FcrExpr::And(es) | FcrExpr::Or(es) => {
                let sep = if matches!(self, FcrExpr::And(_)) { " & " } else { " | " };
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    inner(f, e)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Fcr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.antecedent, self.consequent)
    }
}
