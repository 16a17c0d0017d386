//! Turtle subset: directives, predicate/object lists, `a`, anonymous and
//! labeled blank nodes, IRIs, prefixed names, and plain/typed/language
//! literals in all four quoting styles.
//!
//! Collections and the numeric/boolean shorthand are rejected with
//! [`TurtleErrorKind::Unsupported`]. A `@prefix` or `@base` directive may omit
//! its terminating `.`, and `rdf:`, `rdfs:`, `xsd:`, `owl:` and `foaf:` resolve
//! even when undeclared.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::iri::{allowed_iri_char, is_absolute_iri, resolve_iri};
use super::vocab::{self, WELL_KNOWN_PREFIXES};
use super::{node_order, Graph, Iri, Literal, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct TurtleError {
    pub line: usize,
    pub column: usize,
    pub kind: TurtleErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TurtleErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("relative IRI <{0}> with no base")]
    RelativeIri(String),
    #[error("unsupported construct: {0}")]
    Unsupported(&'static str),
}

/// Parses `text` into a graph. Blank nodes are relabeled `b0`, `b1`, ... in
/// order of first appearance.
pub fn parse_turtle(text: &str, base: Option<&str>) -> Result<Graph, TurtleError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        line: 1,
        col: 1,
        base: base.map(str::to_string),
        prefixes: BTreeMap::new(),
        bnodes: HashMap::new(),
        next_bnode: 0,
        graph: Graph::new(),
    };
    if let Some(b) = base {
        if !is_absolute_iri(b) {
            return Err(p.err(TurtleErrorKind::RelativeIri(b.to_string())));
        }
    }
    p.document()?;
    let mut graph = p.graph;
    for (k, v) in p.prefixes {
        graph.set_prefix(k, v);
    }
    Ok(graph)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    base: Option<String>,
    prefixes: BTreeMap<String, String>,
    bnodes: HashMap<String, String>,
    next_bnode: usize,
    graph: Graph,
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '\u{B7}')
}

fn syntax(msg: impl Into<String>) -> TurtleErrorKind {
    TurtleErrorKind::Syntax(msg.into())
}

impl<'a> Parser<'a> {
    fn err(&self, kind: TurtleErrorKind) -> TurtleError {
        TurtleError {
            line: self.line,
            column: self.col,
            kind,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
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

    fn expect(&mut self, c: char) -> Result<(), TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            Some(x) => Err(self.err(syntax(format!("expected '{c}', found '{x}'")))),
            None => Err(self.err(syntax(format!("expected '{c}', found end of input")))),
        }
    }

    fn fresh_bnode(&mut self) -> Term {
        let label = format!("b{}", self.next_bnode);
        self.next_bnode += 1;
        Term::Blank(label)
    }

    fn emit(&mut self, s: &Term, p: &Iri, o: Term) {
        self.graph.insert(Triple::new(s.clone(), p.clone(), o));
    }

    fn document(&mut self) -> Result<(), TurtleError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with("@prefix") || self.keyword_ci("PREFIX") {
                self.prefix_directive()?;
            } else if self.starts_with("@base") || self.keyword_ci("BASE") {
                self.base_directive()?;
            } else {
                self.triples()?;
                self.expect('.')?;
            }
        }
    }

    /// SPARQL-style keyword followed by whitespace.
    fn keyword_ci(&self, kw: &str) -> bool {
        let rest = &self.src[self.pos..];
        rest.get(..kw.len())
            .is_some_and(|head| head.eq_ignore_ascii_case(kw))
            && rest[kw.len()..].starts_with(char::is_whitespace)
    }

    fn skip_optional_dot(&mut self) {
        self.skip_ws();
        if self.peek() == Some('.') {
            self.bump();
        }
    }

    fn prefix_directive(&mut self) -> Result<(), TurtleError> {
        let at = self.peek() == Some('@');
        for _ in 0..if at { 7 } else { 6 } {
            self.bump();
        }
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if !is_pn_char(c) && c != '.' {
                return Err(self.err(syntax(format!("invalid prefix name character '{c}'"))));
            }
            self.bump();
        }
        let name = self.src[start..self.pos].to_string();
        if name.ends_with('.')
            || name.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '_')
        {
            return Err(self.err(syntax(format!("invalid prefix name {name:?}"))));
        }
        self.expect(':')?;
        self.skip_ws();
        let ns = self.iriref()?;
        self.prefixes.insert(name, ns);
        if at {
            self.skip_optional_dot();
        }
        Ok(())
    }

    fn base_directive(&mut self) -> Result<(), TurtleError> {
        let at = self.peek() == Some('@');
        for _ in 0..if at { 5 } else { 4 } {
            self.bump();
        }
        self.skip_ws();
        let b = self.iriref()?;
        self.base = Some(b);
        if at {
            self.skip_optional_dot();
        }
        Ok(())
    }

    fn triples(&mut self) -> Result<(), TurtleError> {
        self.skip_ws();
        if self.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.skip_ws();
            if self.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            Ok(())
        } else {
            let subject = self.subject()?;
            self.predicate_object_list(&subject)
        }
    }

    fn subject(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(Iri::new_unchecked(self.iriref()?))),
            Some('_') if self.peek_at(1) == Some(':') => Ok(self.blank_label()?),
            Some('(') => Err(self.err(TurtleErrorKind::Unsupported("RDF collection"))),
            Some('"') | Some('\'') => Err(self.err(syntax("literal in subject position"))),
            Some(_) => Ok(Term::Iri(self.prefixed_name()?)),
            None => Err(self.err(syntax("unexpected end of input"))),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), TurtleError> {
        loop {
            let verb = self.verb()?;
            self.object_list(subject, &verb)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            match self.peek() {
                Some('.') | Some(']') | None => return Ok(()),
                _ => {}
            }
        }
    }

    fn verb(&mut self) -> Result<Iri, TurtleError> {
        self.skip_ws();
        if self.peek() == Some('a')
            && !self
                .peek_at(1)
                .is_some_and(|c| is_pn_char(c) || c == ':' || c == '.')
        {
            self.bump();
            return Ok(Iri::new_unchecked(vocab::RDF_TYPE));
        }
        match self.peek() {
            Some('<') => Ok(Iri::new_unchecked(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => {
                Err(self.err(syntax("blank node as predicate")))
            }
            Some('[') | Some('"') | Some('\'') => Err(self.err(syntax("predicate must be an IRI"))),
            Some('(') => Err(self.err(TurtleErrorKind::Unsupported("RDF collection"))),
            Some(_) => self.prefixed_name(),
            None => Err(self.err(syntax("expected predicate, found end of input"))),
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Iri) -> Result<(), TurtleError> {
        loop {
            let o = self.object()?;
            self.emit(subject, predicate, o);
            self.skip_ws();
            if self.peek() == Some(',') {
                self.bump();
            } else {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, TurtleError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(Iri::new_unchecked(self.iriref()?))),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('[') => self.blank_property_list(),
            Some('(') => Err(self.err(TurtleErrorKind::Unsupported("RDF collection"))),
            Some('"') | Some('\'') => self.literal(),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-') => {
                Err(self.err(TurtleErrorKind::Unsupported("numeric literal shorthand")))
            }
            Some('.') if self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                Err(self.err(TurtleErrorKind::Unsupported("numeric literal shorthand")))
            }
            Some(_) => {
                let rest = &self.src[self.pos..];
                for kw in ["true", "false"] {
                    if rest.starts_with(kw)
                        && !rest[kw.len()..].starts_with(|c: char| is_pn_char(c) || c == ':')
                    {
                        return Err(
                            self.err(TurtleErrorKind::Unsupported("boolean literal shorthand"))
                        );
                    }
                }
                Ok(Term::Iri(self.prefixed_name()?))
            }
            None => Err(self.err(syntax("expected object, found end of input"))),
        }
    }

    fn blank_property_list(&mut self) -> Result<Term, TurtleError> {
        self.expect('[')?;
        let node = self.fresh_bnode();
        self.skip_ws();
        if self.peek() != Some(']') {
            self.predicate_object_list(&node)?;
        }
        self.expect(']')?;
        Ok(node)
    }

    fn blank_label(&mut self) -> Result<Term, TurtleError> {
        self.bump();
        self.bump();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_pn_char(c)
                || (c == '.' && self.peek_at(1).is_some_and(|n| is_pn_char(n) || n == '.'))
            {
                self.bump();
            } else {
                break;
            }
        }
        let label = &self.src[start..self.pos];
        if label.is_empty() {
            return Err(self.err(syntax("empty blank node label")));
        }
        if let Some(l) = self.bnodes.get(label) {
            return Ok(Term::Blank(l.clone()));
        }
        let t = self.fresh_bnode();
        if let Term::Blank(l) = &t {
            self.bnodes.insert(label.to_string(), l.clone());
        }
        Ok(t)
    }

    /// Reads `<...>` and resolves it against the base.
    fn iriref(&mut self) -> Result<String, TurtleError> {
        self.skip_ws();
        if self.peek() != Some('<') {
            return Err(self.err(syntax("expected IRI")));
        }
        let (line, col) = (self.line, self.col);
        self.bump();
        let mut raw = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(TurtleError {
                        line,
                        column: col,
                        kind: syntax("unterminated IRI"),
                    })
                }
                Some('>') => break,
                Some('\\') => {
                    let c = self.uchar()?;
                    if !allowed_iri_char(c) {
                        return Err(self.err(syntax(format!("escaped {c:?} not allowed in IRI"))));
                    }
                    raw.push(c);
                }
                Some(c) if allowed_iri_char(c) => raw.push(c),
                Some(c) => {
                    return Err(self.err(syntax(format!("character {c:?} not allowed in IRI"))))
                }
            }
        }
        if is_absolute_iri(&raw) {
            return Ok(raw);
        }
        match &self.base {
            None => Err(TurtleError {
                line,
                column: col,
                kind: TurtleErrorKind::RelativeIri(raw),
            }),
            Some(b) => resolve_iri(b, &raw)
                .filter(|r| is_absolute_iri(r))
                .ok_or(TurtleError {
                    line,
                    column: col,
                    kind: TurtleErrorKind::RelativeIri(raw),
                }),
        }
    }

    fn uchar(&mut self) -> Result<char, TurtleError> {
        let n = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err(syntax("invalid escape in IRI"))),
        };
        self.hex_char(n)
    }

    fn hex_char(&mut self, n: usize) -> Result<char, TurtleError> {
        let mut v: u32 = 0;
        for _ in 0..n {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.err(syntax("invalid hex escape")))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| self.err(syntax("escape is not a Unicode scalar value")))
    }

    fn prefixed_name(&mut self) -> Result<Iri, TurtleError> {
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == ':' {
                break;
            }
            if is_pn_char(c) || c == '.' {
                self.bump();
            } else {
                break;
            }
        }
        let prefix = self.src[start..self.pos].to_string();
        if self.peek() != Some(':') {
            let found = if prefix.is_empty() {
                self.peek().map(String::from).unwrap_or_default()
            } else {
                prefix
            };
            return Err(self.err(syntax(format!("unexpected token {found:?}"))));
        }
        self.bump();
        let mut local = String::new();
        loop {
            match self.peek() {
                Some(c) if is_pn_char(c) || c == ':' => {
                    local.push(c);
                    self.bump();
                }
                Some('.')
                    if self.peek_at(1).is_some_and(|n| {
                        is_pn_char(n) || n == ':' || n == '%' || n == '\\' || n == '.'
                    }) =>
                {
                    // a dot is part of the name only when more name follows
                    let mut k = 1;
                    while self.peek_at(k) == Some('.') {
                        k += 1;
                    }
                    if !self
                        .peek_at(k)
                        .is_some_and(|n| is_pn_char(n) || n == ':' || n == '%' || n == '\\')
                    {
                        break;
                    }
                    local.push('.');
                    self.bump();
                }
                Some('%') => {
                    self.bump();
                    let a = self.bump().filter(char::is_ascii_hexdigit);
                    let b = self.bump().filter(char::is_ascii_hexdigit);
                    match (a, b) {
                        (Some(a), Some(b)) => {
                            local.push('%');
                            local.push(a);
                            local.push(b);
                        }
                        _ => return Err(self.err(syntax("invalid percent escape in local name"))),
                    }
                }
                Some('\\') => {
                    self.bump();
                    match self.bump() {
                        Some(c) if "_~.-!$&'()*+,;=/?#@%".contains(c) => local.push(c),
                        _ => return Err(self.err(syntax("invalid local name escape"))),
                    }
                }
                _ => break,
            }
        }
        let ns = match self.prefixes.get(&prefix) {
            Some(ns) => ns.clone(),
            None => match WELL_KNOWN_PREFIXES.iter().find(|(p, _)| *p == prefix) {
                Some((_, ns)) => ns.to_string(),
                None => {
                    return Err(TurtleError {
                        line,
                        column: col,
                        kind: TurtleErrorKind::UnknownPrefix(prefix),
                    })
                }
            },
        };
        Ok(Iri::new_unchecked(format!("{ns}{local}")))
    }

    fn literal(&mut self) -> Result<Term, TurtleError> {
        let value = self.string()?;
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '-')
                {
                    self.bump();
                }
                let tag = &self.src[start..self.pos];
                if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(self.err(syntax("invalid language tag")));
                }
                Ok(Term::Literal(Literal::lang(value, tag)))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.bump();
                self.bump();
                let dt = match self.peek() {
                    Some('<') => Iri::new_unchecked(self.iriref()?),
                    _ => self.prefixed_name()?,
                };
                Ok(Term::Literal(Literal::typed(value, dt)))
            }
            _ => Ok(Term::Literal(Literal::plain(value))),
        }
    }

    fn string(&mut self) -> Result<String, TurtleError> {
        let (line, col) = (self.line, self.col);
        let q = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(q) && self.peek_at(1) == Some(q);
        if long {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            let c = match self.bump() {
                Some(c) => c,
                None => {
                    return Err(TurtleError {
                        line,
                        column: col,
                        kind: syntax("unterminated string"),
                    })
                }
            };
            match c {
                '\\' => out.push(match self.bump() {
                    Some('t') => '\t',
                    Some('b') => '\u{8}',
                    Some('n') => '\n',
                    Some('r') => '\r',
                    Some('f') => '\u{c}',
                    Some('"') => '"',
                    Some('\'') => '\'',
                    Some('\\') => '\\',
                    Some('u') => self.hex_char(4)?,
                    Some('U') => self.hex_char(8)?,
                    _ => return Err(self.err(syntax("invalid string escape"))),
                }),
                c if c == q && !long => return Ok(out),
                c if c == q && long => {
                    if self.peek() == Some(q) && self.peek_at(1) == Some(q) {
                        // a run of more than three closing quotes keeps the extras
                        let mut run = 1;
                        while self.peek_at(run + 1) == Some(q) {
                            run += 1;
                        }
                        for _ in 1..run {
                            out.push(q);
                            self.bump();
                        }
                        self.bump();
                        self.bump();
                        return Ok(out);
                    }
                    out.push(c);
                }
                '\n' | '\r' if !long => return Err(self.err(syntax("newline in short string"))),
                c => out.push(c),
            }
        }
    }
}

/// Writes `g` as Turtle using its prefix map (plus `rdf:`/`xsd:` when used).
/// Blank nodes referenced exactly once are nested as `[ ... ]`.
pub fn write_turtle(g: &Graph) -> String {
    let mut prefixes: BTreeMap<String, String> = g.prefixes().clone();
    for (p, ns) in WELL_KNOWN_PREFIXES {
        prefixes
            .entry(p.to_string())
            .or_insert_with(|| ns.to_string());
    }
    let mut by_subject: BTreeMap<&Term, Vec<&Triple>> = BTreeMap::new();
    let mut refs: HashMap<&Term, usize> = HashMap::new();
    for t in g.iter() {
        by_subject.entry(&t.subject).or_default().push(t);
        if t.object.is_blank() {
            *refs.entry(&t.object).or_default() += 1;
        }
    }
    let nested = |t: &Term| t.is_blank() && refs.get(t).copied() == Some(1);

    let mut w = TurtleWriter {
        prefixes: &prefixes,
        used: Default::default(),
        by_subject: &by_subject,
        nested: &nested,
        used_nested: Default::default(),
    };
    let mut subjects: Vec<&Term> = by_subject.keys().copied().filter(|s| !nested(s)).collect();
    subjects.sort_by(|a, b| node_order(a, b));
    let mut body = String::new();
    let mut stack = Vec::new();
    for s in subjects {
        body.push_str(&w.term(s));
        w.predicates(s, 1, &mut body, &mut stack);
        body.push_str(" .\n");
    }
    // nested nodes in a cycle are never reached from a top-level subject
    let mut orphans: Vec<&Term> = by_subject
        .keys()
        .copied()
        .filter(|s| nested(s) && !w.used_nested.contains(*s))
        .collect();
    orphans.sort_by(|a, b| node_order(a, b));
    for s in orphans {
        if w.used_nested.contains(s) {
            continue;
        }
        w.used_nested.insert(s.clone());
        body.push_str(&canon_label(s));
        w.predicates(s, 1, &mut body, &mut stack);
        body.push_str(" .\n");
    }

    let mut out = String::new();
    for p in &w.used {
        let _ = writeln!(out, "@prefix {p}: <{}> .", prefixes[p]);
    }
    if !out.is_empty() && !body.is_empty() {
        out.push('\n');
    }
    out.push_str(&body);
    out
}

fn canon_label(t: &Term) -> String {
    match t {
        Term::Blank(b) => format!("_:{b}"),
        _ => unreachable!(),
    }
}

struct TurtleWriter<'g, F> {
    prefixes: &'g BTreeMap<String, String>,
    used: std::collections::BTreeSet<String>,
    by_subject: &'g BTreeMap<&'g Term, Vec<&'g Triple>>,
    nested: &'g F,
    used_nested: std::collections::BTreeSet<Term>,
}

impl<'g, F: Fn(&Term) -> bool> TurtleWriter<'g, F> {
    fn predicates(&mut self, s: &Term, depth: usize, out: &mut String, stack: &mut Vec<Term>) {
        let Some(triples) = self.by_subject.get(s) else {
            return;
        };
        let mut triples: Vec<&Triple> = triples.clone();
        triples.sort_by(|a, b| {
            let ta = a.predicate.as_str() == vocab::RDF_TYPE;
            let tb = b.predicate.as_str() == vocab::RDF_TYPE;
            tb.cmp(&ta)
                .then_with(|| a.predicate.cmp(&b.predicate))
                .then_with(|| node_order(&a.object, &b.object))
        });
        stack.push(s.clone());
        let indent = "    ".repeat(depth);
        let mut i = 0;
        let mut first = true;
        while i < triples.len() {
            let p = &triples[i].predicate;
            let mut j = i;
            while j < triples.len() && &triples[j].predicate == p {
                j += 1;
            }
            out.push_str(if first { " " } else { " ;\n" });
            if !first {
                out.push_str(&indent);
            }
            first = false;
            let verb = if p.as_str() == vocab::RDF_TYPE {
                "a".to_string()
            } else {
                self.iri(p.as_str())
            };
            out.push_str(&verb);
            for (k, t) in triples[i..j].iter().enumerate() {
                out.push_str(if k == 0 { " " } else { ", " });
                self.object(&t.object, depth, out, stack);
            }
            i = j;
        }
        stack.pop();
    }

    fn object(&mut self, o: &Term, depth: usize, out: &mut String, stack: &mut Vec<Term>) {
        if (self.nested)(o) && !stack.contains(o) {
            self.used_nested.insert(o.clone());
            if self.by_subject.contains_key(o) {
                out.push('[');
                self.predicates(o, depth + 1, out, stack);
                out.push_str(" ]");
            } else {
                out.push_str("[]");
            }
        } else {
            out.push_str(&self.term(o));
        }
    }

    fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Iri(i) => self.iri(i.as_str()),
            Term::Blank(b) => format!("_:{b}"),
            Term::Literal(l) => {
                let mut s = super::canon::quote_literal(l.value());
                if let Some(lang) = l.language() {
                    s.push('@');
                    s.push_str(lang);
                } else if let Some(dt) = l.datatype() {
                    s.push_str("^^");
                    s.push_str(&self.iri(dt.as_str()));
                }
                s
            }
        }
    }

    fn iri(&mut self, iri: &str) -> String {
        let best = self
            .prefixes
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()) && valid_local(&iri[ns.len()..]))
            .max_by_key(|(_, ns)| ns.len());
        match best {
            Some((p, ns)) => {
                self.used.insert(p.clone());
                format!("{p}:{}", &iri[ns.len()..])
            }
            None => format!("<{iri}>"),
        }
    }
}

fn valid_local(local: &str) -> bool {
    local.chars().all(|c| is_pn_char(c) || c == '.')
        && !local.ends_with('.')
        && !local.starts_with(['-', '.', '\u{B7}'])
}
