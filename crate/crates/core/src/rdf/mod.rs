//! Minimal RDF graph model.
//!
//! Only what policies need: IRIs, blank nodes and literals, triple sets with
//! a prefix map, and a handful of lookup helpers. Parsing and serialization
//! live in the submodules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

mod canon;
pub mod html;
mod iri;
pub mod rdfa;
pub mod turtle;
pub mod vocab;

pub use canon::{
    graph_digest, serialize_canonical, sha256_hex, skolem_map, skolemize, SKOLEM_PREFIX,
};
pub use iri::{is_absolute_iri, resolve_iri};
pub use rdfa::{extract_rdfa, RdfaError};
pub use turtle::{parse_turtle, write_turtle, TurtleError, TurtleErrorKind};

/// An absolute IRI.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct Iri(String);

impl Iri {
    /// Wraps `s` if it is an absolute IRI.
    pub fn new(s: impl Into<String>) -> Result<Self, InvalidIri> {
        let s = s.into();
        if is_absolute_iri(&s) {
            Ok(Iri(s))
        } else {
            Err(InvalidIri(s))
        }
    }

    /// Wraps `s` without checking. Used for vocabulary constants and
    /// already-resolved parser output.
    pub fn new_unchecked(s: impl Into<String>) -> Self {
        Iri(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not an absolute IRI: {0:?}")]
pub struct InvalidIri(pub String);

/// A literal. At most one of `datatype` / `language` is set; `xsd:string`
/// is normalized to no datatype.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    value: String,
    datatype: Option<Iri>,
    language: Option<String>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: Iri) -> Self {
        let datatype = (datatype.as_str() != vocab::XSD_STRING).then_some(datatype);
        Literal {
            value: value.into(),
            datatype,
            language: None,
        }
    }

    pub fn lang(value: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            datatype: None,
            language: Some(language.into().to_ascii_lowercase()),
        }
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

/// An RDF term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    /// Blank node label without the `_:` prefix.
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(Iri::new_unchecked(s))
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::Blank(label.into())
    }

    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal(Literal::plain(value))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::Blank(_))
    }

    pub fn is_resource(&self) -> bool {
        !matches!(self, Term::Literal(_))
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

/// Serialized as the N-Triples form of the term.
impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canon::term_to_ntriples(self))
    }
}

/// A triple. Construction through [`Triple::new`] enforces a resource subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    /// # Panics
    /// If `subject` is a literal.
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Self {
        assert!(subject.is_resource(), "literal subject");
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// A set of triples plus the prefixes they were written with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
    prefixes: BTreeMap<String, String>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` if the triple was not already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn add(&mut self, s: impl Into<Term>, p: &str, o: impl Into<Term>) -> bool {
        self.insert(Triple::new(s.into(), Iri::new_unchecked(p), o.into()))
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn set_prefix(&mut self, prefix: impl Into<String>, ns: impl Into<String>) {
        self.prefixes.insert(prefix.into(), ns.into());
    }

    /// Objects of `(subject, predicate, ?)`.
    pub fn objects<'a>(
        &'a self,
        subject: &Term,
        predicate: &str,
    ) -> impl Iterator<Item = &'a Term> + 'a {
        let (subject, predicate) = (subject.clone(), predicate.to_string());
        self.triples
            .iter()
            .filter(move |t| t.subject == subject && t.predicate.as_str() == predicate)
            .map(|t| &t.object)
    }

    /// The single object of `(subject, predicate, ?)`, if exactly one exists.
    pub fn object<'a>(
        &'a self,
        subject: &Term,
        predicate: &str,
    ) -> Result<Option<&'a Term>, MultipleValues> {
        let mut it = self.objects(subject, predicate);
        let first = it.next();
        if it.next().is_some() {
            return Err(MultipleValues {
                predicate: predicate.to_string(),
            });
        }
        Ok(first)
    }

    /// Subjects of `(?, predicate, object)`.
    pub fn subjects<'a>(
        &'a self,
        predicate: &str,
        object: &Term,
    ) -> impl Iterator<Item = &'a Term> + 'a {
        let (predicate, object) = (predicate.to_string(), object.clone());
        self.triples
            .iter()
            .filter(move |t| t.predicate.as_str() == predicate && t.object == object)
            .map(|t| &t.subject)
    }

    /// Nodes typed `class` via `rdf:type`.
    pub fn instances_of(&self, class: &str) -> Vec<Term> {
        let class = Term::iri(class);
        let mut out: Vec<Term> = self.subjects(vocab::RDF_TYPE, &class).cloned().collect();
        out.sort_by(node_order);
        out.dedup();
        out
    }

    /// Adds every triple of `other`, relabeling its blank nodes so they cannot
    /// collide with blank nodes already in `self`.
    pub fn merge(&mut self, other: &Graph) {
        let existing = self.blank_labels();
        let mut next = existing.len();
        let mut map = BTreeMap::new();
        let mut relabel = |t: &Term, map: &mut BTreeMap<String, String>| match t {
            Term::Blank(b) => Term::Blank(
                map.entry(b.clone())
                    .or_insert_with(|| loop {
                        let cand = format!("m{next}");
                        next += 1;
                        if !existing.contains(&cand) {
                            break cand;
                        }
                    })
                    .clone(),
            ),
            other => other.clone(),
        };
        let mut added = Vec::new();
        for t in other.iter() {
            let s = relabel(&t.subject, &mut map);
            let o = relabel(&t.object, &mut map);
            added.push(Triple::new(s, t.predicate.clone(), o));
        }
        self.triples.extend(added);
        for (k, v) in &other.prefixes {
            self.prefixes.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    pub fn blank_labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.triples {
            for term in [&t.subject, &t.object] {
                if let Term::Blank(b) = term {
                    out.insert(b.clone());
                }
            }
        }
        out
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
            prefixes: BTreeMap::new(),
        }
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::collections::btree_set::Iter<'a, Triple>;
    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected at most one value for <{predicate}>")]
pub struct MultipleValues {
    pub predicate: String,
}

/// Orders nodes so that parser-assigned blank labels (`b0`, `b1`, ..., `b10`)
/// come back in document order, and IRIs sort by their text with embedded
/// numbers compared numerically.
pub fn node_order(a: &Term, b: &Term) -> std::cmp::Ordering {
    fn key(t: &Term) -> (u8, &str) {
        match t {
            Term::Iri(i) => (0, i.as_str()),
            Term::Blank(b) => (1, b.as_str()),
            Term::Literal(l) => (2, l.value()),
        }
    }
    let (ka, sa) = key(a);
    let (kb, sb) = key(b);
    ka.cmp(&kb)
        .then_with(|| natural_cmp(sa, sb))
        .then_with(|| a.cmp(b))
}

fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let (mut ai, mut bi) = (a.char_indices().peekable(), b.char_indices().peekable());
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((i, ca)), Some((j, cb))) => {
                if ca.is_ascii_digit() && cb.is_ascii_digit() {
                    let ea = a[i..]
                        .find(|c: char| !c.is_ascii_digit())
                        .map_or(a.len(), |k| i + k);
                    let eb = b[j..]
                        .find(|c: char| !c.is_ascii_digit())
                        .map_or(b.len(), |k| j + k);
                    let (na, nb) = (
                        a[i..ea].trim_start_matches('0'),
                        b[j..eb].trim_start_matches('0'),
                    );
                    let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    while ai.peek().is_some_and(|&(k, _)| k < ea) {
                        ai.next();
                    }
                    while bi.peek().is_some_and(|&(k, _)| k < eb) {
                        bi.next();
                    }
                } else {
                    if ca != cb {
                        return ca.cmp(&cb);
                    }
                    ai.next();
                    bi.next();
                }
            }
        }
    }
}
