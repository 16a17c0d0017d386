//! Purpose taxonomies: subclass closure with distances, plus labels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::LazyLock;

use crate::rdf::{parse_turtle, vocab, Graph, Iri, Term};

pub(crate) const DPV_PURPOSES_TTL: &str = include_str!("../../vocab/dpv-purposes.ttl");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("subclass cycle: {}", fmt_cycle(.0))]
    Cycle(Vec<Iri>),
}

fn fmt_cycle(c: &[Iri]) -> String {
    c.iter()
        .map(|i| format!("<{i}>"))
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PurposeTaxonomy {
    nodes: BTreeSet<Iri>,
    direct_super: BTreeMap<Iri, BTreeSet<Iri>>,
    labels: BTreeMap<Iri, String>,
    definitions: BTreeMap<Iri, String>,
    notes: BTreeMap<Iri, String>,
    /// node -> (superclass -> shortest distance), reflexive
    closure: BTreeMap<Iri, BTreeMap<Iri, usize>>,
}

/// Picks an English (or untagged) literal, preferring English.
fn pick_text<'a>(objs: impl Iterator<Item = &'a Term>) -> Option<String> {
    let mut best: Option<(u8, &str)> = None;
    for o in objs {
        if let Some(l) = o.as_literal() {
            let rank = match l.language() {
                Some("en") => 0,
                None => 1,
                Some(lang) if lang.starts_with("en-") => 2,
                Some(_) => 3,
            };
            if best.is_none_or(|(r, v)| (rank, l.value()) < (r, v)) {
                best = Some((rank, l.value()));
            }
        }
    }
    best.map(|(_, v)| v.to_string())
}

/// Builds a taxonomy from `rdfs:subClassOf` / `skos:broader` edges between
/// IRIs. Nodes are every edge endpoint plus every IRI carrying a label,
/// definition or scope note.
pub fn load_taxonomy(g: &Graph) -> Result<PurposeTaxonomy, TaxonomyError> {
    let mut t = PurposeTaxonomy::default();
    for tr in g.iter() {
        let p = tr.predicate.as_str();
        if p == vocab::RDFS_SUBCLASS_OF || p == vocab::SKOS_BROADER {
            if let (Term::Iri(sub), Term::Iri(sup)) = (&tr.subject, &tr.object) {
                t.nodes.insert(sub.clone());
                t.nodes.insert(sup.clone());
                if sub != sup {
                    t.direct_super
                        .entry(sub.clone())
                        .or_default()
                        .insert(sup.clone());
                }
            }
        } else if [
            vocab::SKOS_PREF_LABEL,
            vocab::RDFS_LABEL,
            vocab::SKOS_DEFINITION,
            vocab::SKOS_SCOPE_NOTE,
        ]
        .contains(&p)
        {
            if let Term::Iri(s) = &tr.subject {
                t.nodes.insert(s.clone());
            }
        }
    }
    for n in &t.nodes {
        let s = Term::Iri(n.clone());
        let label = pick_text(g.objects(&s, vocab::SKOS_PREF_LABEL))
            .or_else(|| pick_text(g.objects(&s, vocab::RDFS_LABEL)));
        if let Some(l) = label {
            t.labels.insert(n.clone(), l);
        }
        if let Some(d) = pick_text(g.objects(&s, vocab::SKOS_DEFINITION)) {
            t.definitions.insert(n.clone(), d);
        }
        if let Some(d) = pick_text(g.objects(&s, vocab::SKOS_SCOPE_NOTE)) {
            t.notes.insert(n.clone(), d);
        }
    }
    if let Some(c) = t.find_cycle() {
        return Err(TaxonomyError::Cycle(c));
    }
    t.closure = t.nodes.iter().map(|n| (n.clone(), t.bfs(n))).collect();
    Ok(t)
}

impl PurposeTaxonomy {
    /// The DPV purpose subset shipped in `vocab/dpv-purposes.ttl`.
    pub fn dpv_subset() -> &'static PurposeTaxonomy {
        static DPV: LazyLock<PurposeTaxonomy> = LazyLock::new(|| {
            let g = parse_turtle(DPV_PURPOSES_TTL, None).expect("vendored dpv-purposes.ttl parses");
            load_taxonomy(&g).expect("vendored dpv-purposes.ttl is acyclic")
        });
        &DPV
    }

    /// Text of the vendored DPV subset.
    pub fn dpv_subset_turtle() -> &'static str {
        DPV_PURPOSES_TTL
    }

    fn find_cycle(&self) -> Option<Vec<Iri>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut mark: BTreeMap<&Iri, Mark> = BTreeMap::new();
        for start in &self.nodes {
            if mark.contains_key(start) {
                continue;
            }
            // iterative DFS; `path` mirrors the open nodes
            let mut path: Vec<&Iri> = vec![start];
            let mut stack: Vec<std::collections::btree_set::Iter<'_, Iri>> =
                vec![self.supers_iter(start)];
            mark.insert(start, Mark::Open);
            while let Some(it) = stack.last_mut() {
                match it.next() {
                    Some(next) => match mark.get(next) {
                        Some(Mark::Open) => {
                            let from = path.iter().position(|p| *p == next).unwrap();
                            let mut cycle: Vec<Iri> =
                                path[from..].iter().map(|i| (*i).clone()).collect();
                            cycle.push(next.clone());
                            return Some(cycle);
                        }
                        Some(Mark::Done) => {}
                        None => {
                            mark.insert(next, Mark::Open);
                            path.push(next);
                            stack.push(self.supers_iter(next));
                        }
                    },
                    None => {
                        stack.pop();
                        let done = path.pop().unwrap();
                        mark.insert(done, Mark::Done);
                    }
                }
            }
        }
        None
    }

    fn supers_iter(&self, n: &Iri) -> std::collections::btree_set::Iter<'_, Iri> {
        static EMPTY: BTreeSet<Iri> = BTreeSet::new();
        self.direct_super.get(n).unwrap_or(&EMPTY).iter()
    }

    fn bfs(&self, from: &Iri) -> BTreeMap<Iri, usize> {
        let mut dist = BTreeMap::from([(from.clone(), 0)]);
        let mut q = VecDeque::from([from.clone()]);
        while let Some(n) = q.pop_front() {
            let d = dist[&n];
            for s in self.supers_iter(&n) {
                if !dist.contains_key(s) {
                    dist.insert(s.clone(), d + 1);
                    q.push_back(s.clone());
                }
            }
        }
        dist
    }

    pub fn contains(&self, iri: &Iri) -> bool {
        self.nodes.contains(iri)
    }

    pub fn nodes(&self) -> &BTreeSet<Iri> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn direct_supers(&self, iri: &Iri) -> impl Iterator<Item = &Iri> {
        self.supers_iter(iri)
    }

    /// Direct subclasses of `iri`, sorted.
    pub fn children(&self, iri: &Iri) -> Vec<&Iri> {
        self.direct_super
            .iter()
            .filter(|(_, sups)| sups.contains(iri))
            .map(|(sub, _)| sub)
            .collect()
    }

    /// Nodes without superclasses.
    pub fn roots(&self) -> Vec<&Iri> {
        self.nodes
            .iter()
            .filter(|n| self.direct_super.get(*n).is_none_or(BTreeSet::is_empty))
            .collect()
    }

    pub fn label(&self, iri: &Iri) -> Option<&str> {
        self.labels.get(iri).map(String::as_str)
    }

    pub fn definition(&self, iri: &Iri) -> Option<&str> {
        self.definitions.get(iri).map(String::as_str)
    }

    pub fn note(&self, iri: &Iri) -> Option<&str> {
        self.notes.get(iri).map(String::as_str)
    }

    /// Reflexive-transitive subclass test. Unknown IRIs are only related to
    /// themselves.
    pub fn is_subpurpose(&self, sub: &Iri, sup: &Iri) -> bool {
        sub == sup || self.distance(sub, sup).is_some()
    }

    /// Length of the shortest subclass path from `sub` up to `sup`.
    pub fn distance(&self, sub: &Iri, sup: &Iri) -> Option<usize> {
        self.closure.get(sub).and_then(|m| m.get(sup)).copied()
    }

    /// All superclasses of `iri` including itself, nearest first, ties in
    /// IRI order. Empty for unknown IRIs.
    pub fn superclasses(&self, iri: &Iri) -> Vec<(&Iri, usize)> {
        let mut v: Vec<(&Iri, usize)> = self
            .closure
            .get(iri)
            .map(|m| m.iter().map(|(k, d)| (k, *d)).collect())
            .unwrap_or_default();
        v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

pub fn is_subpurpose(t: &PurposeTaxonomy, sub: &Iri, sup: &Iri) -> bool {
    t.is_subpurpose(sub, sup)
}
