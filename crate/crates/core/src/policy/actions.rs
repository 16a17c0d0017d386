//! OAC and DPV name the same processing actions in different namespaces.
//! Everything is compared in DPV terms.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use crate::rdf::{parse_turtle, vocab, Iri, Term};

pub(crate) const OAC_MAP_TTL: &str = include_str!("../../vocab/oac-map.ttl");

struct ActionMap {
    to_dpv: BTreeMap<Iri, Iri>,
    to_oac: BTreeMap<Iri, Iri>,
}

static MAP: LazyLock<ActionMap> = LazyLock::new(|| {
    let g = parse_turtle(OAC_MAP_TTL, None).expect("vendored oac-map.ttl parses");
    let mut to_dpv = BTreeMap::new();
    let mut to_oac = BTreeMap::new();
    for t in g
        .iter()
        .filter(|t| t.predicate.as_str() == vocab::SKOS_EXACT_MATCH)
    {
        if let (Term::Iri(oac), Term::Iri(dpv)) = (&t.subject, &t.object) {
            to_dpv.insert(oac.clone(), dpv.clone());
            to_oac.insert(dpv.clone(), oac.clone());
        }
    }
    ActionMap { to_dpv, to_oac }
});

/// DPV form of an action: table lookup, then OAC→DPV namespace substitution,
/// otherwise unchanged.
pub fn to_dpv_action(a: &Iri) -> Iri {
    if let Some(d) = MAP.to_dpv.get(a) {
        return d.clone();
    }
    match a.as_str().strip_prefix(vocab::OAC) {
        Some(local) if !local.is_empty() => Iri::new_unchecked(vocab::term(vocab::DPV, local)),
        _ => a.clone(),
    }
}

/// OAC form of a DPV action when the table has one, otherwise unchanged.
pub fn to_oac_action(a: &Iri) -> Iri {
    MAP.to_oac.get(a).cloned().unwrap_or_else(|| a.clone())
}

pub fn normalize_actions<'a>(actions: impl IntoIterator<Item = &'a Iri>) -> BTreeSet<Iri> {
    actions.into_iter().map(to_dpv_action).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping() {
        let oac = |l: &str| Iri::new_unchecked(vocab::term(vocab::OAC, l));
        let dpv = |l: &str| Iri::new_unchecked(vocab::term(vocab::DPV, l));
        for a in ["Download", "Store", "Profiling"] {
            assert_eq!(to_dpv_action(&oac(a)), dpv(a));
            assert_eq!(to_oac_action(&dpv(a)), oac(a));
        }
        assert_eq!(to_dpv_action(&oac("Collect")), dpv("Collect"));
        assert_eq!(to_oac_action(&dpv("Collect")), dpv("Collect"));
        assert_eq!(to_dpv_action(&dpv("Use")), dpv("Use"));
        let other = Iri::new_unchecked("http://www.w3.org/ns/odrl/2/use");
        assert_eq!(to_dpv_action(&other), other);
    }
}
