use std::collections::{BTreeMap, BTreeSet};

use super::{CatId, Fcr, FcrDecl, Frame, Grammar, LexEntry, LoadError, LpPair, PsRule};
use crate::fs::{normalize_feature, Avm, AvmValue, IndexedFS};
use crate::solver::Store;

/// Parses and validates a grammar file.
pub fn load_grammar(text: &str) -> Result<Grammar, LoadError> {
    let mut p = Cursor {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
    };
    let mut raw = Raw::default();
    loop {
        p.skip_trivia();
        if p.at_end() {
            break;
        }
        let line = p.line;
        let word = p.ident();
        match word.as_str() {
            "rule" => {
                let lhs = p.name()?;
                p.expect("->")?;
                let mut rhs = Vec::new();
                let mut unicity = true;
                loop {
                    p.skip_trivia();
                    match p.peek() {
                        Some('.') => break,
                        Some('{') => {
                            let flag = p.braced_raw()?;
                            if flag.trim() != "no-unicity" {
                                return Err(p.error(&format!("unknown rule flag {}", flag.trim())));
                            }
                            unicity = false;
                        }
                        _ => rhs.push(p.name()?),
                    }
                }
                p.expect(".")?;
                if rhs.is_empty() {
                    return Err(LoadError {
                        line,
                        msg: format!("empty right-hand side for {lhs}"),
                    });
                }
                raw.rules.push((lhs, rhs, unicity, line));
            }
            "lp" => {
                let a = p.name()?;
                p.expect("<")?;
                let b = p.name()?;
                p.expect(".")?;
                raw.lp.push((a, b, line));
            }
            "proj" => {
                let a = p.name()?;
                p.expect("=")?;
                let b = p.name()?;
                p.expect(".")?;
                raw.proj.push((a, b, line));
            }
            "start" => {
                let s = p.name()?;
                p.expect(".")?;
                raw.start = Some((s, line));
            }
            "cat" | "cats" => {
                for n in p.names_until_dot()? {
                    raw.cats.push((n, line));
                }
            }
            "features" => {
                for n in p.names_until_dot()? {
                    raw.features.insert(normalize_feature(&n));
                }
                raw.features_declared = true;
            }
            "frame" => raw.frames.push(p.frame(line)?),
            "lex" => raw.lex.push(p.lex(line)?),
            "fcr" => {
                let body = p.until_dot()?;
                let fcr = Fcr::parse(&body).map_err(|msg| LoadError { line, msg })?;
                raw.fcrs.push(FcrDecl { fcr, line });
            }
            "" => return Err(p.error("expected a directive")),
            other => {
                return Err(LoadError {
                    line,
                    msg: format!("unknown directive {other}"),
                })
            }
        }
    }
    raw.build()
}

#[derive(Default)]
struct Raw {
    cats: Vec<(String, usize)>,
    features: BTreeSet<String>,
    features_declared: bool,
    rules: Vec<(String, Vec<String>, bool, usize)>,
    lp: Vec<(String, String, usize)>,
    proj: Vec<(String, String, usize)>,
    start: Option<(String, usize)>,
    frames: Vec<RawFrame>,
    lex: Vec<RawLex>,
    fcrs: Vec<FcrDecl>,
}

struct RawFrame {
    phrase: String,
    m: Vec<String>,
    c: Vec<String>,
    o: Option<Vec<String>>,
    head: Option<String>,
    schemata: Vec<Vec<String>>,
    line: usize,
}

struct RawLex {
    form: String,
    category: String,
    avm: Avm,
    subj: Vec<String>,
    comps: Vec<String>,
    schema: Option<Vec<String>>,
    line: usize,
}

impl Raw {
    fn build(self) -> Result<Grammar, LoadError> {
        let mut g = Grammar::default();
        let declared = !self.cats.is_empty();
        for (c, _) in &self.cats {
            g.intern(c);
        }
        let known = |g: &mut Grammar, name: &str, line: usize, introduce: bool| -> Result<CatId, LoadError> {
            match g.cat(name) {
                Some(c) => Ok(c),
                None if introduce && !declared => Ok(g.intern(name)),
                None => Err(LoadError {
                    line,
                    msg: format!("unknown category {name}"),
                }),
            }
        };

        // Categories are introduced by rules, frame phrases and M sets, and
        // lexical entries; every other mention must refer to one of them.
        for (lhs, rhs, _, line) in &self.rules {
            known(&mut g, lhs, *line, true)?;
            for r in rhs {
                known(&mut g, r, *line, true)?;
            }
        }
        for f in &self.frames {
            known(&mut g, &f.phrase, f.line, true)?;
            for m in &f.m {
                known(&mut g, m, f.line, true)?;
            }
        }
        for e in &self.lex {
            known(&mut g, &e.category, e.line, true)?;
        }

        for (lhs, rhs, unicity, line) in &self.rules {
            let lhs = known(&mut g, lhs, *line, false)?;
            let rhs = rhs
                .iter()
                .map(|r| known(&mut g, r, *line, false))
                .collect::<Result<Vec<_>, _>>()?;
            g.rules.push(PsRule {
                lhs,
                rhs,
                unicity: *unicity,
                line: *line,
            });
        }

        for (a, b, line) in &self.lp {
            let before = known(&mut g, a, *line, false)?;
            let after = known(&mut g, b, *line, false)?;
            if before == after {
                return Err(LoadError {
                    line: *line,
                    msg: format!("reflexive LP pair {a} < {a}"),
                });
            }
            g.lp.push(LpPair { before, after });
            if lp_cycle(&g.lp) {
                return Err(LoadError {
                    line: *line,
                    msg: format!("LP pair {a} < {b} makes the order cyclic"),
                });
            }
        }

        for f in &self.frames {
            let line = f.line;
            let set = |g: &mut Grammar, xs: &[String]| -> Result<BTreeSet<CatId>, LoadError> {
                xs.iter().map(|x| known(g, x, line, false)).collect()
            };
            let phrase = known(&mut g, &f.phrase, line, false)?;
            let m = set(&mut g, &f.m)?;
            let c = set(&mut g, &f.c)?;
            let o = match &f.o {
                Some(o) => set(&mut g, o)?,
                None => m.difference(&c).copied().collect(),
            };
            let err = |msg: String| LoadError { line, msg };
            if !c.is_disjoint(&o) {
                return Err(err(format!("frame {}: C and O overlap", f.phrase)));
            }
            if c.union(&o).copied().collect::<BTreeSet<_>>() != m {
                return Err(err(format!("frame {}: M is not C ∪ O", f.phrase)));
            }
            let head_name = f
                .head
                .as_ref()
                .ok_or_else(|| err(format!("frame {}: no head", f.phrase)))?;
            let head = known(&mut g, head_name, line, false)?;
            if !c.contains(&head) {
                return Err(err(format!("frame {}: head {head_name} is not compulsory", f.phrase)));
            }
            let mut schemata = Vec::new();
            for s in &f.schemata {
                let s = set(&mut g, s)?;
                if !s.is_subset(&o) {
                    return Err(err(format!("frame {}: schema is not a subset of O", f.phrase)));
                }
                schemata.push(s);
            }
            if g.frames.contains_key(&phrase) {
                return Err(err(format!("frame {} declared twice", f.phrase)));
            }
            g.frames.insert(
                phrase,
                Frame {
                    phrase,
                    m,
                    c,
                    o,
                    head,
                    schemata,
                    line,
                },
            );
        }

        for (a, b, line) in &self.proj {
            let a = known(&mut g, a, *line, false)?;
            let b = known(&mut g, b, *line, false)?;
            g.proj.insert(a, b);
        }
        let heads: Vec<(CatId, CatId)> = g.frames.values().map(|f| (f.head, f.phrase)).collect();
        for (head, phrase) in heads {
            g.proj.entry(head).or_insert(phrase);
        }

        if let Some((s, line)) = &self.start {
            g.start = Some(known(&mut g, s, *line, false)?);
        }

        let mut features = self.features.clone();
        for e in &self.lex {
            let category = known(&mut g, &e.category, e.line, false)?;
            let list = |g: &mut Grammar, xs: &[String]| -> Result<Vec<CatId>, LoadError> {
                xs.iter().map(|x| known(g, x, e.line, false)).collect()
            };
            let subj = list(&mut g, &e.subj)?;
            let comps = list(&mut g, &e.comps)?;
            let schema = match &e.schema {
                None => None,
                Some(names) => {
                    let want: BTreeSet<CatId> = list(&mut g, names)?.into_iter().collect();
                    let frame = g.frame_headed_by(category).ok_or_else(|| LoadError {
                        line: e.line,
                        msg: format!("{} heads no frame, so it cannot select a schema", e.category),
                    })?;
                    let pos = frame
                        .schemata
                        .iter()
                        .position(|s| *s == want)
                        .ok_or_else(|| LoadError {
                            line: e.line,
                            msg: "selected schema is not declared in the frame".to_string(),
                        })?;
                    Some(pos)
                }
            };
            let mut scratch = Store::new();
            IndexedFS::encode(&e.avm, &mut scratch).map_err(|err| LoadError {
                line: e.line,
                msg: err.to_string(),
            })?;
            if !self.features_declared {
                collect_features(&e.avm, &mut features);
            }
            g.lexicon.push(LexEntry {
                form: e.form.clone(),
                category,
                avm: e.avm.clone(),
                subj,
                comps,
                schema,
                line: e.line,
            });
        }

        for d in &self.fcrs {
            for f in d.fcr.features() {
                if self.features_declared && !features.contains(&f) {
                    return Err(LoadError {
                        line: d.line,
                        msg: format!("unknown feature {} in FCR", f.to_ascii_uppercase()),
                    });
                }
                features.insert(f);
            }
        }
        g.features = features;
        g.fcrs = self.fcrs;
        g.index();
        Ok(g)
    }
}

fn collect_features(avm: &Avm, out: &mut BTreeSet<String>) {
    for f in &avm.features {
        out.insert(f.name.clone());
        collect_value_features(&f.value, out);
    }
}

fn collect_value_features(v: &AvmValue, out: &mut BTreeSet<String>) {
    match v {
        AvmValue::Node(a) => collect_features(a, out),
        AvmValue::List(xs) => xs.iter().for_each(|x| collect_value_features(x, out)),
        _ => {}
    }
}

fn lp_cycle(pairs: &[LpPair]) -> bool {
    let mut succ: BTreeMap<CatId, Vec<CatId>> = BTreeMap::new();
    for p in pairs {
        succ.entry(p.before).or_default().push(p.after);
    }
    for start in succ.keys() {
        let mut stack = succ[start].clone();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == *start {
                return true;
            }
            if seen.insert(n) {
                if let Some(next) = succ.get(&n) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    false
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn error(&self, msg: &str) -> LoadError {
        LoadError {
            line: self.line,
            msg: msg.to_string(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.chars.get(self.pos).copied() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_trivia();
        self.chars.get(self.pos).copied()
    }

    fn ident(&mut self) -> String {
        self.skip_trivia();
        let start = self.pos;
        while let Some(c) = self.chars.get(self.pos) {
            if c.is_alphanumeric() || matches!(c, '_' | '\'' | '-') && !self.arrow_here() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn arrow_here(&self) -> bool {
        self.chars.get(self.pos) == Some(&'-') && self.chars.get(self.pos + 1) == Some(&'>')
    }

    fn name(&mut self) -> Result<String, LoadError> {
        let n = self.ident();
        if n.is_empty() {
            Err(self.error("expected a name"))
        } else {
            Ok(n)
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), LoadError> {
        self.skip_trivia();
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            for _ in 0..n {
                self.bump();
            }
            Ok(())
        } else {
            Err(self.error(&format!("expected '{s}'")))
        }
    }

    fn names_until_dot(&mut self) -> Result<Vec<String>, LoadError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some('.') => {
                    self.bump();
                    return Ok(out);
                }
                Some(',') => {
                    self.bump();
                }
                _ => out.push(self.name()?),
            }
        }
    }

    fn until_dot(&mut self) -> Result<String, LoadError> {
        self.skip_trivia();
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('.') => return Ok(out),
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated statement")),
            }
        }
    }

    /// Raw text between matching brackets, both included.
    fn bracketed_raw(&mut self, open: char, close: char) -> Result<String, LoadError> {
        self.skip_trivia();
        if self.chars.get(self.pos) != Some(&open) {
            return Err(self.error(&format!("expected '{open}'")));
        }
        let mut depth = 0;
        let mut out = String::new();
        while let Some(c) = self.bump() {
            out.push(c);
            if c == open {
                depth += 1;
            } else if c == close {
                depth -= 1;
                if depth == 0 {
                    return Ok(out);
                }
            }
        }
        Err(self.error(&format!("unbalanced '{open}'")))
    }

    fn braced_raw(&mut self) -> Result<String, LoadError> {
        let s = self.bracketed_raw('{', '}')?;
        Ok(s[1..s.len() - 1].to_string())
    }

    fn name_set(&mut self) -> Result<Vec<String>, LoadError> {
        let body = self.braced_raw()?;
        Ok(split_names(&body))
    }

    fn name_list(&mut self) -> Result<Vec<String>, LoadError> {
        let s = self.bracketed_raw('[', ']')?;
        Ok(split_names(&s[1..s.len() - 1]))
    }

    fn frame(&mut self, line: usize) -> Result<RawFrame, LoadError> {
        let phrase = self.name()?;
        self.expect("{")?;
        let mut f = RawFrame {
            phrase,
            m: Vec::new(),
            c: Vec::new(),
            o: None,
            head: None,
            schemata: Vec::new(),
            line,
        };
        loop {
            if self.peek() == Some('}') {
                self.bump();
                break;
            }
            let key = self.name()?;
            match key.as_str() {
                "M" | "C" | "O" => {
                    self.expect("=")?;
                    let set = self.name_set()?;
                    match key.as_str() {
                        "M" => f.m = set,
                        "C" => f.c = set,
                        _ => f.o = Some(set),
                    }
                }
                "head" => {
                    self.expect("=")?;
                    f.head = Some(self.name()?);
                }
                "schema" => f.schemata.push(self.name_set()?),
                other => return Err(self.error(&format!("unknown frame field {other}"))),
            }
            self.expect(";")?;
        }
        if self.peek() == Some('.') {
            self.bump();
        }
        Ok(f)
    }

    fn lex(&mut self, line: usize) -> Result<RawLex, LoadError> {
        self.skip_trivia();
        if self.bump() != Some('"') {
            return Err(self.error("expected a quoted word form"));
        }
        let mut form = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some(c) => form.push(c),
                None => return Err(self.error("unterminated word form")),
            }
        }
        let category = self.name()?;
        let mut e = RawLex {
            form,
            category,
            avm: Avm::new(),
            subj: Vec::new(),
            comps: Vec::new(),
            schema: None,
            line,
        };
        if self.peek() == Some('[') {
            let text = self.bracketed_raw('[', ']')?;
            e.avm = Avm::parse(&text).map_err(|err| LoadError {
                line,
                msg: err.to_string(),
            })?;
        }
        loop {
            if self.peek() == Some('.') {
                self.bump();
                return Ok(e);
            }
            let key = self.name()?;
            match key.as_str() {
                "subj" => e.subj = self.name_list()?,
                "subcat" | "comps" => e.comps = self.name_list()?,
                "schema" => e.schema = Some(self.name_set()?),
                other => return Err(self.error(&format!("unknown lexical field {other}"))),
            }
        }
    }
}

fn split_names(body: &str) -> Vec<String> {
    body.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}
