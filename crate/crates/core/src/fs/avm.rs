use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::FsError;
use crate::solver::BoolStatus;

/// A nested attribute-value matrix as written by hand.
///
/// `tag` is a sharing tag: `#2[...]` declares it and a bare `#2` elsewhere
/// refers to the same node.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Avm {
    pub tag: Option<u32>,
    pub features: Vec<Feature>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Feature {
    pub name: String,
    pub value: AvmValue,
    pub status: Option<BoolStatus>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AvmValue {
    Atom(String),
    Node(Avm),
    Ref(u32),
    List(Vec<AvmValue>),
    /// Placeholder: the feature is present with a status but no value.
    Empty,
}

/// Features whose value may be a sequence of nodes.
pub const LIST_FEATURES: &[&str] = &[
    "subj",
    "comps",
    "subcat",
    "comp-dtrs",
    "conj-dtrs",
    "adj-dtrs",
    "subj-dtr",
];

/// Lowercases and maps `_` to `-`, so `HEAD_DTR` and `head-dtr` agree.
pub fn normalize_feature(name: &str) -> String {
    name.to_ascii_lowercase().replace('_', "-")
}

pub fn is_list_feature(name: &str) -> bool {
    LIST_FEATURES.contains(&name)
}

impl Avm {
    pub fn new() -> Avm {
        Avm::default()
    }

    pub fn with(mut self, name: &str, value: AvmValue) -> Avm {
        self.features.push(Feature {
            name: normalize_feature(name),
            value,
            status: None,
        });
        self
    }

    pub fn get(&self, name: &str) -> Option<&Feature> {
        let name = normalize_feature(name);
        self.features.iter().find(|f| f.name == name)
    }

    pub fn parse(text: &str) -> Result<Avm, FsError> {
        let mut p = AvmParser {
            chars: text.chars().collect(),
            pos: 0,
        };
        p.skip_ws();
        let tag = p.tag()?;
        let mut avm = p.node()?;
        avm.tag = tag;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("trailing input"));
        }
        Ok(avm)
    }

    /// Tags renumbered by first occurrence in depth-first declaration order,
    /// tags that are never shared dropped, bodies moved to the first
    /// occurrence, and `U` status annotations removed.
    pub fn canonical(&self) -> Avm {
        let mut decls = BTreeMap::new();
        let mut counts = BTreeMap::new();
        collect_tags(self, &mut decls, &mut counts);
        let mut c = Canon {
            decls: &decls,
            counts: &counts,
            numbering: BTreeMap::new(),
            visiting: BTreeSet::new(),
        };
        match c.value(&AvmValue::Node(self.clone())) {
            AvmValue::Node(a) => a,
            _ => unreachable!(),
        }
    }
}

fn collect_tags(avm: &Avm, decls: &mut BTreeMap<u32, Avm>, counts: &mut BTreeMap<u32, usize>) {
    if let Some(t) = avm.tag {
        *counts.entry(t).or_default() += 1;
        decls.entry(t).or_insert_with(|| Avm {
            tag: None,
            features: avm.features.clone(),
        });
    }
    for f in &avm.features {
        collect_value_tags(&f.value, decls, counts);
    }
}

fn collect_value_tags(v: &AvmValue, decls: &mut BTreeMap<u32, Avm>, counts: &mut BTreeMap<u32, usize>) {
    match v {
        AvmValue::Node(a) => collect_tags(a, decls, counts),
        AvmValue::Ref(t) => *counts.entry(*t).or_default() += 1,
        AvmValue::List(xs) => xs.iter().for_each(|x| collect_value_tags(x, decls, counts)),
        AvmValue::Atom(_) | AvmValue::Empty => {}
    }
}

struct Canon<'a> {
    decls: &'a BTreeMap<u32, Avm>,
    counts: &'a BTreeMap<u32, usize>,
    numbering: BTreeMap<u32, u32>,
    visiting: BTreeSet<u32>,
}

impl Canon<'_> {
    fn value(&mut self, v: &AvmValue) -> AvmValue {
        match v {
            AvmValue::Atom(a) => AvmValue::Atom(a.clone()),
            AvmValue::Empty => AvmValue::Empty,
            AvmValue::List(xs) => AvmValue::List(xs.iter().map(|x| self.value(x)).collect()),
            AvmValue::Ref(t) => self.tagged(*t, None),
            AvmValue::Node(a) => match a.tag {
                Some(t) => self.tagged(t, Some(a)),
                None => AvmValue::Node(self.body(a)),
            },
        }
    }

    fn tagged(&mut self, t: u32, inline: Option<&Avm>) -> AvmValue {
        let shared = self.counts.get(&t).copied().unwrap_or(0) > 1;
        if let Some(k) = self.numbering.get(&t) {
            return AvmValue::Ref(*k);
        }
        let body = match (self.decls.get(&t), inline) {
            (Some(d), _) => d.clone(),
            (None, Some(a)) => a.clone(),
            (None, None) => Avm::default(),
        };
        if self.visiting.contains(&t) {
            // Cyclic input: leave the back reference as is.
            return AvmValue::Ref(t);
        }
        let number = if shared {
            let k = self.numbering.len() as u32 + 1;
            self.numbering.insert(t, k);
            Some(k)
        } else {
            None
        };
        self.visiting.insert(t);
        let mut out = self.body(&body);
        self.visiting.remove(&t);
        out.tag = number;
        AvmValue::Node(out)
    }

    fn body(&mut self, a: &Avm) -> Avm {
        Avm {
            tag: None,
            features: a
                .features
                .iter()
                .map(|f| Feature {
                    name: f.name.clone(),
                    value: self.value(&f.value),
                    status: f.status.filter(|s| *s != BoolStatus::Unknown),
                })
                .collect(),
        }
    }
}

struct AvmParser {
    chars: Vec<char>,
    pos: usize,
}

impl AvmParser {
    fn error(&self, msg: &str) -> FsError {
        FsError::Syntax {
            col: self.pos + 1,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FsError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && is_word(self.chars[self.pos]) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn tag(&mut self) -> Result<Option<u32>, FsError> {
        if !self.eat('#') {
            return Ok(None);
        }
        let w = self.word();
        w.parse::<u32>()
            .map(Some)
            .map_err(|_| self.error("expected a tag number"))
    }

    fn node(&mut self) -> Result<Avm, FsError> {
        self.expect('[')?;
        let mut avm = Avm::default();
        if self.eat(']') {
            return Ok(avm);
        }
        loop {
            let name = self.word();
            if name.is_empty() {
                return Err(self.error("expected a feature name"));
            }
            self.expect(':')?;
            let value = match self.peek() {
                Some('!') => AvmValue::Empty,
                _ => self.value()?,
            };
            let status = self.status()?;
            if value == AvmValue::Empty && status.is_none() {
                return Err(self.error("placeholder needs a status"));
            }
            avm.features.push(Feature {
                name: normalize_feature(&name),
                value,
                status,
            });
            if self.eat(']') {
                return Ok(avm);
            }
            self.expect(',')?;
        }
    }

    fn status(&mut self) -> Result<Option<BoolStatus>, FsError> {
        if !self.eat('!') {
            return Ok(None);
        }
        let c = self.chars.get(self.pos).copied();
        match c.and_then(BoolStatus::from_letter) {
            Some(s) => {
                self.pos += 1;
                Ok(Some(s))
            }
            None => Err(self.error("expected T, F or U")),
        }
    }

    fn value(&mut self) -> Result<AvmValue, FsError> {
        match self.peek() {
            Some('[') => Ok(AvmValue::Node(self.node()?)),
            Some('#') => {
                let tag = self.tag()?;
                if self.peek() == Some('[') {
                    let mut a = self.node()?;
                    a.tag = tag;
                    Ok(AvmValue::Node(a))
                } else {
                    Ok(AvmValue::Ref(tag.expect("tag present")))
                }
            }
            Some('<') => {
                self.pos += 1;
                let mut items = Vec::new();
                if self.eat('>') {
                    return Ok(AvmValue::List(items));
                }
                loop {
                    items.push(self.value()?);
                    if self.eat('>') {
                        return Ok(AvmValue::List(items));
                    }
                    self.expect(',')?;
                }
            }
            _ => {
                let w = self.word();
                if w.is_empty() {
                    Err(self.error("expected a value"))
                } else {
                    Ok(AvmValue::Atom(w))
                }
            }
        }
    }
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '+' | '\'' | '.')
}

impl fmt::Display for Avm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.tag {
            write!(f, "#{t}")?;
        }
        f.write_str("[")?;
        for (i, feat) in self.features.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:", feat.name)?;
            if feat.value != AvmValue::Empty {
                write!(f, "{}", feat.value)?;
            }
            if let Some(s) = feat.status {
                write!(f, "!{s}")?;
            }
        }
        f.write_str("]")
    }
}

impl fmt::Display for AvmValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AvmValue::Atom(a) => f.write_str(a),
            AvmValue::Node(a) => write!(f, "{a}"),
            AvmValue::Ref(t) => write!(f, "#{t}"),
            AvmValue::Empty => Ok(()),
            AvmValue::List(xs) => {
                f.write_str("<")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(">")
            }
        }
    }
}
