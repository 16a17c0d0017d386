//! Canonical N-Triples and SHA-256 digests.
//!
//! Blank nodes are skolemized to `urn:app:bnode:<k>`. The rank `k` comes from
//! a colour-refinement pass: every blank node starts from the sorted
//! N-Triples lines it occurs in (itself written as a fixed placeholder, other
//! blank nodes as a shared placeholder), and colours are refined with the
//! neighbours' colours until stable. Remaining ties are split one node at a
//! time. Isomorphic graphs therefore produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::{Graph, Iri, Term, Triple};

pub const SKOLEM_PREFIX: &str = "urn:app:bnode:";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Escapes a string for an N-Triples / Turtle short string, quotes included.
pub(crate) fn quote_literal(v: &str) -> String {
    let mut s = String::with_capacity(v.len() + 2);
    s.push('"');
    for c in v.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\r' => s.push_str("\\r"),
            '\t' => s.push_str("\\t"),
            '\u{8}' => s.push_str("\\b"),
            '\u{c}' => s.push_str("\\f"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => s.push_str(&format!("\\u{:04X}", c as u32)),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

pub(crate) fn term_to_ntriples(t: &Term) -> String {
    match t {
        Term::Iri(i) => format!("<{i}>"),
        Term::Blank(b) => format!("_:{b}"),
        Term::Literal(l) => {
            let mut s = quote_literal(l.value());
            if let Some(lang) = l.language() {
                s.push('@');
                s.push_str(lang);
            } else if let Some(dt) = l.datatype() {
                s.push_str("^^<");
                s.push_str(dt.as_str());
                s.push('>');
            }
            s
        }
    }
}

fn line(t: &Triple) -> String {
    format!(
        "{} <{}> {} .",
        term_to_ntriples(&t.subject),
        t.predicate,
        term_to_ntriples(&t.object)
    )
}

fn render_with(t: &Term, me: &str, colours: &BTreeMap<&str, String>) -> String {
    match t {
        Term::Blank(b) if b == me => "_:@".to_string(),
        Term::Blank(b) => format!("_:{}", colours[b.as_str()]),
        other => term_to_ntriples(other),
    }
}

fn refine<'a>(
    blanks: &[&'a str],
    occurrences: &BTreeMap<&'a str, Vec<&'a Triple>>,
    mut colours: BTreeMap<&'a str, String>,
) -> BTreeMap<&'a str, String> {
    let distinct = |c: &BTreeMap<&str, String>| c.values().collect::<BTreeSet<_>>().len();
    loop {
        let before = distinct(&colours);
        let mut next = BTreeMap::new();
        for &b in blanks {
            let mut sig: Vec<String> = occurrences[b]
                .iter()
                .map(|t| {
                    format!(
                        "{} <{}> {}",
                        render_with(&t.subject, b, &colours),
                        t.predicate,
                        render_with(&t.object, b, &colours)
                    )
                })
                .collect();
            sig.sort();
            let mut h = Sha256::new();
            h.update(colours[b].as_bytes());
            for l in &sig {
                h.update(l.as_bytes());
                h.update(b"\n");
            }
            next.insert(b, hex::encode(h.finalize()));
        }
        let after = distinct(&next);
        colours = next;
        if after == before {
            return colours;
        }
    }
}

/// The skolem IRI each blank label of `g` is replaced with by [`skolemize`].
pub fn skolem_map(g: &Graph) -> BTreeMap<String, Iri> {
    let labels = g.blank_labels();
    if labels.is_empty() {
        return BTreeMap::new();
    }
    let blanks: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut occurrences: BTreeMap<&str, Vec<&Triple>> =
        blanks.iter().map(|b| (*b, Vec::new())).collect();
    for t in g.iter() {
        if let Term::Blank(b) = &t.subject {
            occurrences.get_mut(b.as_str()).unwrap().push(t);
        }
        if let Term::Blank(b) = &t.object {
            if t.subject != t.object {
                occurrences.get_mut(b.as_str()).unwrap().push(t);
            }
        }
    }
    let mut colours: BTreeMap<&str, String> = blanks.iter().map(|b| (*b, String::new())).collect();
    colours = refine(&blanks, &occurrences, colours);
    loop {
        let mut classes: BTreeMap<&String, Vec<&str>> = BTreeMap::new();
        for (b, c) in &colours {
            classes.entry(c).or_default().push(b);
        }
        let Some(tied) = classes.values().find(|v| v.len() > 1) else {
            break;
        };
        let pick = tied[0];
        let mut individualized = colours.clone();
        individualized.insert(pick, format!("{}!", colours[pick]));
        colours = refine(&blanks, &occurrences, individualized);
    }
    let mut order: Vec<&str> = blanks.clone();
    order.sort_by(|a, b| colours[a].cmp(&colours[b]));
    order
        .iter()
        .enumerate()
        .map(|(k, b)| {
            (
                b.to_string(),
                Iri::new_unchecked(format!("{SKOLEM_PREFIX}{k}")),
            )
        })
        .collect()
}

/// Replaces every blank node with a deterministic `urn:app:bnode:<k>` IRI.
pub fn skolemize(g: &Graph) -> Graph {
    let map = skolem_map(g);
    let sk = |t: &Term| match t {
        Term::Blank(b) => Term::Iri(map[b.as_str()].clone()),
        other => other.clone(),
    };
    let mut out: Graph = g
        .iter()
        .map(|t| Triple::new(sk(&t.subject), t.predicate.clone(), sk(&t.object)))
        .collect();
    for (k, v) in g.prefixes() {
        out.set_prefix(k.clone(), v.clone());
    }
    out
}

/// Sorted N-Triples of the skolemized graph, one trailing newline, or the
/// empty string for an empty graph.
pub fn serialize_canonical(g: &Graph) -> String {
    let sk = skolemize(g);
    let mut lines: Vec<String> = sk.iter().map(line).collect();
    lines.sort();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

/// Lowercase hex SHA-256 of [`serialize_canonical`].
pub fn graph_digest(g: &Graph) -> String {
    sha256_hex(serialize_canonical(g).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Literal;

    #[test]
    fn empty_graph() {
        assert_eq!(serialize_canonical(&Graph::new()), "");
        assert_eq!(
            graph_digest(&Graph::new()),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn single_triple() {
        let mut g = Graph::new();
        g.add(Term::iri("http://e/s"), "http://e/p", Term::literal("x"));
        assert_eq!(
            serialize_canonical(&g),
            "<http://e/s> <http://e/p> \"x\" .\n"
        );
    }

    #[test]
    fn blank_relabel_invariance() {
        let build = |l: &str| {
            let mut g = Graph::new();
            g.add(Term::iri("http://e/s"), "http://e/p", Term::blank(l));
            g.add(Term::blank(l), "http://e/q", Term::literal("v"));
            g
        };
        assert_eq!(
            serialize_canonical(&build("a")),
            serialize_canonical(&build("z"))
        );
        assert!(serialize_canonical(&build("a")).contains("<urn:app:bnode:0>"));
    }

    #[test]
    fn symmetric_blank_nodes_are_split() {
        // two indistinguishable blank nodes pointing at each other
        let build = |x: &str, y: &str| {
            let mut g = Graph::new();
            g.add(Term::blank(x), "http://e/knows", Term::blank(y));
            g.add(Term::blank(y), "http://e/knows", Term::blank(x));
            g
        };
        assert_eq!(
            serialize_canonical(&build("a", "b")),
            serialize_canonical(&build("q", "p"))
        );
    }

    #[test]
    fn literal_escapes() {
        let mut g = Graph::new();
        g.add(
            Term::iri("http://e/s"),
            "http://e/p",
            Literal::lang("a\"b\\c\nd\te", "EN"),
        );
        assert_eq!(
            serialize_canonical(&g),
            "<http://e/s> <http://e/p> \"a\\\"b\\\\c\\nd\\te\"@en .\n"
        );
    }
}
