//! RDFa-Lite extraction.
//!
//! Honors `vocab`, `prefix`, `typeof`, `property`, `resource`, `about`,
//! `content` and `datatype`, following the RDFa 1.1 processing steps for
//! elements without `rel`/`rev`. An empty `typeof` still introduces a blank
//! node, which is how nested structures such as ODRL permissions are written.

use std::collections::{BTreeMap, HashMap};

use super::html::{parse_html, Element, HtmlError, Node};
use super::iri::{is_absolute_iri, resolve_iri};
use super::{vocab, Graph, Iri, Literal, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdfaError {
    #[error(transparent)]
    Html(#[from] HtmlError),
    #[error("malformed prefix attribute {value:?} at byte {offset}")]
    MalformedPrefix { value: String, offset: usize },
    #[error("base {0:?} is not an absolute IRI")]
    InvalidBase(String),
}

/// Prefixes available without declaration (a subset of the RDFa initial context).
const INITIAL_CONTEXT: &[(&str, &str)] = &[
    ("rdf", vocab::RDF),
    ("rdfs", vocab::RDFS),
    ("xsd", vocab::XSD),
    ("owl", vocab::OWL),
    ("dc", vocab::DCTERMS),
    ("dcterms", vocab::DCTERMS),
    ("foaf", vocab::FOAF),
    ("skos", vocab::SKOS),
    ("odrl", vocab::ODRL),
    ("schema", "http://schema.org/"),
    ("", "http://www.w3.org/1999/xhtml/vocab#"),
];

#[derive(Clone)]
struct Context {
    vocab: Option<String>,
    prefixes: BTreeMap<String, String>,
    parent_object: Term,
}

struct Extractor {
    base: String,
    graph: Graph,
    bnodes: HashMap<String, String>,
    next_bnode: usize,
}

/// Extracts RDFa-Lite triples from `html`, resolving relative references
/// against `base` (or the document's `<base href>`).
pub fn extract_rdfa(html: &str, base: &str) -> Result<Graph, RdfaError> {
    if !is_absolute_iri(base) {
        return Err(RdfaError::InvalidBase(base.to_string()));
    }
    let doc = parse_html(html)?;
    let base = doc
        .descendants()
        .into_iter()
        .find(|e| e.name == "base")
        .and_then(|e| e.attr("href"))
        .and_then(|h| resolve_iri(base, h))
        .filter(|b| is_absolute_iri(b))
        .unwrap_or_else(|| base.to_string());
    let mut x = Extractor {
        base: base.clone(),
        graph: Graph::new(),
        bnodes: HashMap::new(),
        next_bnode: 0,
    };
    let ctx = Context {
        vocab: None,
        prefixes: INITIAL_CONTEXT
            .iter()
            .map(|(p, n)| (p.to_string(), n.to_string()))
            .collect(),
        parent_object: Term::iri(base),
    };
    for child in &doc.children {
        if let Node::Element(e) = child {
            x.element(e, &ctx)?;
        }
    }
    Ok(x.graph)
}

fn parse_prefix_attr(value: &str, offset: usize) -> Result<Vec<(String, String)>, RdfaError> {
    let malformed = || RdfaError::MalformedPrefix {
        value: value.to_string(),
        offset,
    };
    let mut out = Vec::new();
    let mut tokens = value.split_whitespace();
    while let Some(name) = tokens.next() {
        let name = name.strip_suffix(':').ok_or_else(malformed)?;
        if name.contains(':')
            || name.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.')
        {
            return Err(malformed());
        }
        let iri = tokens.next().ok_or_else(malformed)?;
        if !is_absolute_iri(iri) {
            return Err(malformed());
        }
        out.push((name.to_string(), iri.to_string()));
    }
    Ok(out)
}

impl Extractor {
    fn fresh(&mut self) -> Term {
        let l = format!("b{}", self.next_bnode);
        self.next_bnode += 1;
        Term::Blank(l)
    }

    fn labeled(&mut self, label: &str) -> Term {
        if let Some(l) = self.bnodes.get(label) {
            return Term::Blank(l.clone());
        }
        let t = self.fresh();
        if let Term::Blank(l) = &t {
            self.bnodes.insert(label.to_string(), l.clone());
        }
        t
    }

    fn expand_curie(&mut self, token: &str, ctx: &Context) -> Option<Term> {
        let (prefix, reference) = token.split_once(':')?;
        if prefix == "_" {
            return Some(self.labeled(reference));
        }
        if reference.starts_with("//") {
            return None;
        }
        ctx.prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{reference}"))
            .filter(|i| is_absolute_iri(i))
            .map(Term::iri)
    }

    /// `property` / `typeof` / `datatype` values: term, CURIE or absolute IRI.
    fn term_or_curie(&mut self, token: &str, ctx: &Context) -> Option<Iri> {
        if !token.contains(':') {
            return ctx
                .vocab
                .as_ref()
                .and_then(|v| Iri::new(format!("{v}{token}")).ok());
        }
        match self.expand_curie(token, ctx) {
            Some(Term::Iri(i)) => Some(i),
            Some(_) => None,
            None => is_absolute_iri(token).then(|| Iri::new_unchecked(token)),
        }
    }

    /// `about` / `resource` values: safe CURIE, CURIE, blank node or IRI reference.
    fn resource(&mut self, value: &str, ctx: &Context) -> Option<Term> {
        if let Some(inner) = value.strip_prefix('[').and_then(|v| v.strip_suffix(']')) {
            return self.expand_curie(inner, ctx);
        }
        if let Some(t) = self.expand_curie(value, ctx) {
            return Some(t);
        }
        resolve_iri(&self.base, value)
            .filter(|r| is_absolute_iri(r))
            .map(Term::iri)
    }

    fn element(&mut self, e: &Element, parent: &Context) -> Result<(), RdfaError> {
        let mut ctx = parent.clone();
        if let Some(v) = e.attr("vocab") {
            ctx.vocab = if v.trim().is_empty() {
                None
            } else {
                resolve_iri(&self.base, v.trim()).filter(|r| is_absolute_iri(r))
            };
        }
        if let Some(p) = e.attr("prefix") {
            for (name, iri) in parse_prefix_attr(p, e.offset)? {
                // First declaration names the namespace when writing Turtle.
                if !name.is_empty() && !self.graph.prefixes().contains_key(&name) {
                    self.graph.set_prefix(name.clone(), iri.clone());
                }
                ctx.prefixes.insert(name, iri);
            }
        }

        let about = e.attr("about").and_then(|v| self.resource(v, &ctx));
        let resource = e.attr("resource").and_then(|v| self.resource(v, &ctx));
        let types: Option<Vec<Iri>> = e.attr("typeof").map(|v| {
            v.split_whitespace()
                .filter_map(|t| self.term_or_curie(t, &ctx))
                .collect()
        });
        let properties: Option<Vec<Iri>> = e.attr("property").map(|v| {
            v.split_whitespace()
                .filter_map(|t| self.term_or_curie(t, &ctx))
                .collect()
        });
        let content = e.attr("content");
        let datatype = e.attr("datatype");
        let literal_forced = content.is_some() || datatype.is_some();

        let new_subject;
        let mut typed = None;
        let mut current_object = None;
        if properties.is_some() && !literal_forced {
            new_subject = about.clone().unwrap_or_else(|| ctx.parent_object.clone());
            if types.is_some() {
                let t = match about.clone().or_else(|| resource.clone()) {
                    Some(t) => t,
                    None => self.fresh(),
                };
                current_object = Some(t.clone());
                typed = Some(t);
            }
        } else {
            new_subject = match about.clone().or_else(|| resource.clone()) {
                Some(t) => t,
                None if types.is_some() => self.fresh(),
                None => ctx.parent_object.clone(),
            };
            if types.is_some() {
                typed = Some(new_subject.clone());
            }
        }

        if let (Some(types), Some(node)) = (&types, &typed) {
            for t in types {
                self.graph.insert(Triple::new(
                    node.clone(),
                    Iri::new_unchecked(vocab::RDF_TYPE),
                    Term::Iri(t.clone()),
                ));
            }
        }

        if let Some(props) = &properties {
            let object = if !literal_forced && resource.is_some() {
                resource.clone().unwrap()
            } else if !literal_forced && types.is_some() && about.is_none() {
                typed.clone().unwrap()
            } else {
                let value = content.map(str::to_string).unwrap_or_else(|| e.text());
                match datatype
                    .filter(|d| !d.trim().is_empty())
                    .and_then(|d| self.term_or_curie(d.trim(), &ctx))
                {
                    Some(dt) => Term::Literal(Literal::typed(value, dt)),
                    None => Term::Literal(Literal::plain(value)),
                }
            };
            if new_subject.is_resource() {
                for p in props {
                    self.graph
                        .insert(Triple::new(new_subject.clone(), p.clone(), object.clone()));
                }
            }
        }

        ctx.parent_object = current_object.unwrap_or(new_subject);
        for child in &e.children {
            if let Node::Element(c) = child {
                self.element(c, &ctx)?;
            }
        }
        Ok(())
    }
}
