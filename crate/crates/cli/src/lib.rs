//! Building blocks of the `dp` command: document loading, parse reports and
//! checkbox planning for cookie dialogues.

use std::collections::{BTreeMap, BTreeSet};

use dp_core::engine::{evaluate_with, EvalOptions};
use dp_core::policy::{
    parse_dtou_app_policy, parse_odrl_agreement, parse_odrl_request, parse_preferences,
    DtouAppPolicy, OdrlAgreement, OdrlRequest, PolicyError, PreferenceProfile, PurposeTaxonomy,
};
use dp_core::rdf::html::parse_html;
use dp_core::rdf::vocab::{
    DPP_PROFILE_CLASS, DTOU_APP_POLICY_CLASS, ODRL_AGREEMENT_CLASS, ODRL_REQUEST_CLASS,
};
use dp_core::rdf::{
    extract_rdfa, graph_digest, parse_turtle, sha256_hex, skolemize, Graph, Iri, Term,
};
use dp_core::Outcome;
use serde::Serialize;

/// Id prefix of dialogue checkboxes.
pub const CHECKBOX_PREFIX: &str = "data-policy-opt--";

/// The id a dialogue gives the checkbox for the request at `node`.
pub fn checkbox_id_for(node: &Iri) -> String {
    format!(
        "{CHECKBOX_PREFIX}{}",
        &sha256_hex(node.as_str().as_bytes())[..16]
    )
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Turtle(#[from] dp_core::rdf::TurtleError),
    #[error(transparent)]
    Rdfa(#[from] dp_core::rdf::RdfaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Turtle,
    Html,
}

impl DocKind {
    /// HTML for `.html`/`.htm`/`.xhtml` names, Turtle otherwise.
    pub fn from_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if [".html", ".htm", ".xhtml"]
            .iter()
            .any(|e| lower.ends_with(e))
        {
            DocKind::Html
        } else {
            DocKind::Turtle
        }
    }
}

/// Parses Turtle, or extracts RDFa when `kind` is HTML.
pub fn load_graph(text: &str, kind: DocKind, base: Option<&str>) -> Result<Graph, LoadError> {
    Ok(match kind {
        DocKind::Turtle => parse_turtle(text, base)?,
        DocKind::Html => extract_rdfa(text, base.unwrap_or("urn:app:document"))?,
    })
}

/// What `dp parse` prints: graph size, digest and every typed policy node.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseReport {
    pub kind: DocKind,
    pub triples: usize,
    pub digest: String,
    pub requests: Vec<OdrlRequest>,
    pub agreements: Vec<OdrlAgreement>,
    pub app_policies: Vec<DtouAppPolicy>,
    pub profiles: Vec<PreferenceProfile>,
}

#[derive(Debug, thiserror::Error)]
#[error("{node}: {error}")]
pub struct NodeError {
    pub node: String,
    pub error: PolicyError,
}

/// Reads every request, agreement, app policy and profile node of `g`, or
/// only `node` when given. Blank nodes are reported under their skolem IRIs.
pub fn parse_report(
    g: &Graph,
    kind: DocKind,
    node: Option<&Iri>,
    taxonomy: &PurposeTaxonomy,
) -> Result<ParseReport, NodeError> {
    let sk = skolemize(g);
    let nodes = |class: &str| -> Vec<Iri> {
        sk.instances_of(class)
            .into_iter()
            .filter_map(|t| match t {
                Term::Iri(i) => Some(i),
                _ => None,
            })
            .filter(|i| node.is_none_or(|n| n == i))
            .collect()
    };
    fn each<T>(
        nodes: Vec<Iri>,
        f: impl Fn(&Iri) -> Result<T, PolicyError>,
    ) -> Result<Vec<T>, NodeError> {
        nodes
            .iter()
            .map(|n| {
                f(n).map_err(|error| NodeError {
                    node: n.to_string(),
                    error,
                })
            })
            .collect()
    }
    let report = ParseReport {
        kind,
        triples: g.len(),
        digest: graph_digest(g),
        requests: each(nodes(ODRL_REQUEST_CLASS), |n| {
            parse_odrl_request(&sk, Some(n))
        })?,
        agreements: each(nodes(ODRL_AGREEMENT_CLASS), |n| {
            parse_odrl_agreement(&sk, Some(n))
        })?,
        app_policies: each(nodes(DTOU_APP_POLICY_CLASS), |n| {
            parse_dtou_app_policy(&sk, Some(n))
        })?,
        profiles: each(nodes(DPP_PROFILE_CLASS), |_| {
            parse_preferences(&sk, taxonomy)
        })?,
    };
    if let Some(n) = node {
        let found = report.requests.len()
            + report.agreements.len()
            + report.app_policies.len()
            + report.profiles.len();
        if found == 0 {
            return Err(NodeError {
                node: n.to_string(),
                error: PolicyError::NoNode("policy"),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanEntry {
    pub element_id: String,
    pub checked: bool,
    pub request: Iri,
    pub request_digest: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PlanWarning {
    /// A scheme id that names no request on the page.
    #[serde(rename_all = "camelCase")]
    OrphanCheckbox { element_id: String },
    /// The same scheme id on more than one element; the first one is planned.
    #[serde(rename_all = "camelCase")]
    DuplicateCheckbox { element_id: String },
    /// A request with no checkbox to drive.
    #[serde(rename_all = "camelCase")]
    MissingCheckbox { request: Iri, element_id: String },
    /// A request node that does not parse or evaluate.
    #[serde(rename_all = "camelCase")]
    InvalidRequest { request: Iri, error: String },
}

/// Checkbox states for a dialogue, in document order of the checkboxes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SelectionPlan {
    pub entries: Vec<PlanEntry>,
    pub warnings: Vec<PlanWarning>,
}

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Rdfa(#[from] dp_core::rdf::RdfaError),
    #[error(transparent)]
    Html(#[from] dp_core::rdf::html::HtmlError),
}

/// Evaluates every request embedded in `html` and decides each scheme
/// checkbox: checked for granted and partial outcomes, unchecked otherwise.
pub fn plan_selections(
    html: &str,
    base: &str,
    profile: &PreferenceProfile,
    taxonomy: &PurposeTaxonomy,
    opts: &EvalOptions,
) -> Result<SelectionPlan, PlanError> {
    let g = skolemize(&extract_rdfa(html, base)?);
    let mut plan = SelectionPlan::default();
    // element id -> (request node, evaluation)
    let mut by_id: BTreeMap<String, (Iri, Option<(String, Outcome)>)> = BTreeMap::new();
    for t in g.instances_of(ODRL_REQUEST_CLASS) {
        let Term::Iri(node) = t else { continue };
        let evaluated = parse_odrl_request(&g, Some(&node))
            .map_err(|e| e.to_string())
            .and_then(|r| evaluate_with(profile, &r, taxonomy, opts).map_err(|e| e.to_string()));
        let result = match evaluated {
            Ok(d) => Some((d.request_digest, d.outcome)),
            Err(error) => {
                plan.warnings.push(PlanWarning::InvalidRequest {
                    request: node.clone(),
                    error,
                });
                None
            }
        };
        by_id.insert(checkbox_id_for(&node), (node, result));
    }
    let root = parse_html(html)?;
    let mut seen = BTreeSet::new();
    for el in root.descendants() {
        let Some(id) = el.attr("id").filter(|id| id.starts_with(CHECKBOX_PREFIX)) else {
            continue;
        };
        if !seen.insert(id.to_string()) {
            plan.warnings.push(PlanWarning::DuplicateCheckbox {
                element_id: id.to_string(),
            });
            continue;
        }
        match by_id.get(id) {
            None => plan.warnings.push(PlanWarning::OrphanCheckbox {
                element_id: id.to_string(),
            }),
            Some((_, None)) => {}
            Some((node, Some((digest, outcome)))) => plan.entries.push(PlanEntry {
                element_id: id.to_string(),
                checked: outcome.permits_cookie(),
                request: node.clone(),
                request_digest: digest.clone(),
                outcome: *outcome,
            }),
        }
    }
    for (id, (node, _)) in &by_id {
        if !seen.contains(id) {
            plan.warnings.push(PlanWarning::MissingCheckbox {
                request: node.clone(),
                element_id: id.clone(),
            });
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkbox_ids_are_prefixed_hex() {
        let id = checkbox_id_for(&Iri::new_unchecked(
            "https://example.com/cookie-policy-grooveshark",
        ));
        let hex = id.strip_prefix(CHECKBOX_PREFIX).unwrap();
        assert_eq!(hex.len(), 16);
        assert!(hex
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)));
    }

    #[test]
    fn doc_kind_follows_the_extension() {
        assert_eq!(DocKind::from_name("page.HTML"), DocKind::Html);
        assert_eq!(DocKind::from_name("a.htm"), DocKind::Html);
        assert_eq!(DocKind::from_name("grooveshark.ttl"), DocKind::Turtle);
        assert_eq!(DocKind::from_name("-"), DocKind::Turtle);
    }

    #[test]
    fn empty_turtle_reports_nothing() {
        let g = load_graph("", DocKind::Turtle, None).unwrap();
        let r = parse_report(&g, DocKind::Turtle, None, PurposeTaxonomy::dpv_subset()).unwrap();
        assert_eq!(r.triples, 0);
        assert_eq!(
            r.digest,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert!(r.requests.is_empty() && r.profiles.is_empty());
    }

    #[test]
    fn missing_node_is_an_error() {
        let g = load_graph("", DocKind::Turtle, None).unwrap();
        let n = Iri::new_unchecked("http://e/x");
        assert!(
            parse_report(&g, DocKind::Turtle, Some(&n), PurposeTaxonomy::dpv_subset()).is_err()
        );
    }
}
