//! Typed views over policy graphs.
//!
//! ODRL requests and agreements, DToU app policies, purpose taxonomies,
//! retention durations and user preference profiles, plus translation
//! between the ODRL and DToU encodings of the same request.

mod actions;
mod dtou;
mod duration;
mod odrl;
mod prefs;
mod taxonomy;
mod translate;

pub use actions::{normalize_actions, to_dpv_action, to_oac_action};
pub use dtou::{parse_dtou_app_policy, Downstream, DtouAppPolicy, InputSpec};
pub use duration::{
    duration_tag_for, duration_to_seconds, seconds_to_duration, DurationError, LadderError, Rung,
    TagLadder,
};
pub use odrl::{
    parse_odrl_agreement, parse_odrl_request, Constraint, OdrlAgreement, OdrlRequest, Party,
    Permission, AGREEMENT_PREFIX,
};
pub(crate) use prefs::retention_from_json;
pub use prefs::{
    parse_preferences, ActionSet, Governing, PreferenceProfile, PreferenceRule, RuleDecision,
};
pub use taxonomy::{is_subpurpose, load_taxonomy, PurposeTaxonomy, TaxonomyError};
pub use translate::{translate_dtou_to_odrl, translate_odrl_to_dtou};

use crate::rdf::{node_order, skolem_map, Graph, Iri, MultipleValues, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("no {0} node in graph")]
    NoNode(&'static str),
    #[error("{class} nodes found: {}; pick one", .nodes.join(", "))]
    MultipleNodes {
        class: &'static str,
        nodes: Vec<String>,
    },
    #[error("<{node}> is not typed {class}")]
    NotTyped { node: Iri, class: &'static str },
    #[error("missing uid")]
    MissingUid,
    #[error("no permissions")]
    NoPermissions,
    #[error("permission {0}: empty action set")]
    EmptyActions(usize),
    #[error("permission {0}: missing target")]
    MissingTarget(usize),
    #[error("permission {0}: more than one retention constraint")]
    DuplicateRetention(usize),
    #[error("permission {0}: no purpose constraint")]
    MissingPurpose(usize),
    #[error("permission {permission}: operator <{operator}> cannot be evaluated on the {dimension} dimension")]
    UnevaluableOperator {
        permission: usize,
        dimension: &'static str,
        operator: Iri,
    },
    #[error("no input specs")]
    NoInputSpecs,
    #[error("input spec {0}: purpose required")]
    PurposeRequired(usize),
    #[error("input spec {0}: actions required")]
    ActionsRequired(usize),
    #[error("unknown duration tag <{0}>")]
    UnknownDurationTag(Iri),
    #[error("unknown decision {0:?}")]
    UnknownDecision(String),
    #[error("purpose <{0}> is not in the taxonomy")]
    UnknownPurpose(Iri),
    #[error("duplicate rule for purpose <{0}> with the same actions")]
    DuplicateRule(Iri),
    #[error("missing owner")]
    MissingOwner,
    #[error("{what}: {detail}")]
    Invalid { what: String, detail: String },
    #[error(transparent)]
    Multiple(#[from] MultipleValues),
    #[error(transparent)]
    Duration(#[from] DurationError),
}

pub(crate) fn invalid(what: impl Into<String>, detail: impl Into<String>) -> PolicyError {
    PolicyError::Invalid {
        what: what.into(),
        detail: detail.into(),
    }
}

/// Finds the single instance of `class`, or checks that `node` is one.
/// Returns the graph term plus the IRI used to identify it (a skolem IRI
/// for blank nodes).
pub(crate) fn find_typed_node(
    g: &Graph,
    class: &str,
    class_name: &'static str,
    node: Option<&Iri>,
) -> Result<(Term, Iri), PolicyError> {
    let candidates = g.instances_of(class);
    let term = match node {
        Some(n) => {
            let t = Term::Iri(n.clone());
            if !candidates.contains(&t) {
                return Err(PolicyError::NotTyped {
                    node: n.clone(),
                    class: class_name,
                });
            }
            t
        }
        None => match candidates.as_slice() {
            [] => return Err(PolicyError::NoNode(class_name)),
            [one] => one.clone(),
            many => {
                return Err(PolicyError::MultipleNodes {
                    class: class_name,
                    nodes: many.iter().map(ToString::to_string).collect(),
                })
            }
        },
    };
    let iri = match &term {
        Term::Iri(i) => i.clone(),
        Term::Blank(b) => skolem_map(g)[b].clone(),
        Term::Literal(_) => unreachable!("instances are resources"),
    };
    Ok((term, iri))
}

pub(crate) fn opt_iri(
    g: &Graph,
    s: &Term,
    p: &str,
    what: &str,
) -> Result<Option<Iri>, PolicyError> {
    match g.object(s, p)? {
        None => Ok(None),
        Some(Term::Iri(i)) => Ok(Some(i.clone())),
        Some(other) => Err(invalid(what, format!("expected an IRI, found {other}"))),
    }
}

pub(crate) fn opt_text(
    g: &Graph,
    s: &Term,
    p: &str,
    what: &str,
) -> Result<Option<String>, PolicyError> {
    match g.object(s, p)? {
        None => Ok(None),
        Some(Term::Literal(l)) => Ok(Some(l.value().to_string())),
        Some(other) => Err(invalid(what, format!("expected a literal, found {other}"))),
    }
}

/// Objects of `p` in document order.
pub(crate) fn ordered_objects(g: &Graph, s: &Term, p: &str) -> Vec<Term> {
    let mut v: Vec<Term> = g.objects(s, p).cloned().collect();
    v.sort_by(node_order);
    v
}

/// `<base>#suffix`, or `<base>-suffix` when `base` already has a fragment.
pub(crate) fn child_iri(base: &Iri, suffix: &str) -> Iri {
    if base.as_str().contains('#') {
        Iri::new_unchecked(format!("{base}-{suffix}"))
    } else {
        Iri::new_unchecked(format!("{base}#{suffix}"))
    }
}

/// Checks an `xsd:dateTime` lexical form (timezone optional).
pub(crate) fn check_date_time(s: &str) -> Result<(), PolicyError> {
    let ok = chrono::DateTime::parse_from_rfc3339(s).is_ok()
        || chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f").is_ok();
    if ok {
        Ok(())
    } else {
        Err(invalid("issued", format!("{s:?} is not an xsd:dateTime")))
    }
}
