//! Matching requests against preference profiles.
//!
//! Each permission is judged per purpose by the governing rule (see
//! [`PreferenceProfile::governing`]). Allowed permissions are narrowed:
//! actions are intersected with the rule's, retention is capped at the
//! rule's maximum. Clocks and uids are always passed in.

mod compliance;

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub use compliance::{
    dtou_compliance, dtou_compliance_with, ComplianceResult, Dimension, Violation,
};

use crate::policy::{
    seconds_to_duration, ActionSet, Constraint, OdrlAgreement, OdrlRequest, Permission,
    PolicyError, PreferenceProfile, PurposeTaxonomy, RuleDecision,
};
use crate::rdf::vocab::{DPV_PURPOSE, ODRL_EQ, ODRL_LTEQ};
use crate::rdf::{graph_digest, Graph, Iri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Granted,
    Partial,
    Denied,
    Pending,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Granted => "granted",
            Outcome::Partial => "partial",
            Outcome::Denied => "denied",
            Outcome::Pending => "pending",
        }
    }

    /// Granted or partial.
    pub fn permits_cookie(self) -> bool {
        matches!(self, Outcome::Granted | Outcome::Partial)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingQuestion {
    pub permission: usize,
    pub purpose: Iri,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GrantedPermission {
    /// Index of the permission in the request.
    pub index: usize,
    pub permission: Permission,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    pub request_digest: String,
    pub outcome: Outcome,
    pub granted_permissions: Vec<GrantedPermission>,
    pub pending_questions: Vec<PendingQuestion>,
    pub agreement: Option<OdrlAgreement>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Decision for purposes outside the taxonomy. `None` falls back to the
    /// profile default.
    pub unknown_purpose_decision: Option<RuleDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Allow,
    Deny,
}

/// A user's answer for one pending permission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserChoice {
    pub permission: usize,
    pub decision: Choice,
    #[serde(default)]
    pub narrowed_actions: Option<BTreeSet<Iri>>,
    /// Seconds, or an `xsd:duration` string in JSON.
    #[serde(default, deserialize_with = "crate::policy::retention_from_json")]
    pub narrowed_retention: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot build an agreement for a {0} decision")]
    NotGrantable(Outcome),
    #[error("decision was made for a different request")]
    DigestMismatch,
    #[error("decision is not pending")]
    NotPending,
    #[error("no choice for permission {0}")]
    MissingChoice(usize),
    #[error("more than one choice for permission {0}")]
    DuplicateChoice(usize),
    #[error("permission {0} has no pending question")]
    UnexpectedChoice(usize),
    #[error("choice for permission {permission} is not a narrowing: {detail}")]
    NotANarrowing { permission: usize, detail: String },
}

/// Digest identifying a request: the canonical digest of its typed graph.
pub fn request_digest(request: &OdrlRequest) -> String {
    graph_digest(&request.to_graph())
}

pub fn evaluate(
    profile: &PreferenceProfile,
    request: &OdrlRequest,
    taxonomy: &PurposeTaxonomy,
) -> Result<Decision, EngineError> {
    evaluate_with(profile, request, taxonomy, &EvalOptions::default())
}

/// Evaluates without synthesizing an agreement; see [`decide`].
pub fn evaluate_with(
    profile: &PreferenceProfile,
    request: &OdrlRequest,
    taxonomy: &PurposeTaxonomy,
    opts: &EvalOptions,
) -> Result<Decision, EngineError> {
    let mut granted = Vec::new();
    let mut questions = Vec::new();
    for (i, perm) in request.permissions.iter().enumerate() {
        let mut purposes = perm.purposes(i)?;
        if purposes.is_empty() {
            purposes.push(Iri::new_unchecked(DPV_PURPOSE));
        }
        let requested = perm.retention_bound()?;
        let govs: Vec<_> = purposes
            .iter()
            .map(|p| {
                (
                    p,
                    profile.governing(p, taxonomy, opts.unknown_purpose_decision),
                )
            })
            .collect();
        if govs.iter().any(|(_, g)| g.decision == RuleDecision::Deny) {
            continue;
        }
        let asks: Vec<_> = govs
            .iter()
            .filter(|(_, g)| g.decision == RuleDecision::Ask)
            .collect();
        if !asks.is_empty() {
            for (p, g) in asks {
                let reason = match g.rule {
                    Some((k, r)) => format!("rule {k} for <{}> asks", r.purpose),
                    None if !taxonomy.contains(p) => {
                        "purpose is not in the taxonomy; default is ask".to_string()
                    }
                    None => "no rule applies; default is ask".to_string(),
                };
                questions.push(PendingQuestion {
                    permission: i,
                    purpose: (*p).clone(),
                    reason,
                });
            }
            continue;
        }
        let mut actions = perm.actions.clone();
        let mut cap = requested;
        for (_, g) in &govs {
            actions = g.actions().intersect(&actions);
            cap = min_opt(cap, g.max_retention());
        }
        if actions.is_empty() {
            continue;
        }
        granted.push(GrantedPermission {
            index: i,
            permission: narrow(perm, actions, cap, requested),
        });
    }
    let outcome = outcome_of(request, &granted, &questions)?;
    Ok(Decision {
        request_digest: request_digest(request),
        outcome,
        granted_permissions: granted,
        pending_questions: questions,
        agreement: None,
    })
}

/// [`evaluate_with`] plus the agreement for granted and partial outcomes.
pub fn decide(
    profile: &PreferenceProfile,
    request: &OdrlRequest,
    taxonomy: &PurposeTaxonomy,
    opts: &EvalOptions,
    now: DateTime<Utc>,
    uid: &str,
) -> Result<Decision, EngineError> {
    let mut d = evaluate_with(profile, request, taxonomy, opts)?;
    if d.outcome.permits_cookie() {
        let (a, _) = build_agreement(&d, request, &profile.owner, now, uid)?;
        d.agreement = Some(a);
    }
    Ok(d)
}

fn min_opt(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Copy of `perm` with the given actions and retention cap. The retention
/// constraint becomes `lteq`; its lexical form is kept when the bound did
/// not change.
fn narrow(
    perm: &Permission,
    actions: BTreeSet<Iri>,
    cap: Option<u64>,
    requested: Option<u64>,
) -> Permission {
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut placed = false;
    for c in &perm.constraints {
        if !c.is_retention() {
            constraints.push(c.clone());
            continue;
        }
        placed = true;
        match cap {
            Some(v) => {
                let keep_lexical =
                    cap == requested && matches!(c.operator.as_str(), ODRL_EQ | ODRL_LTEQ);
                let mut n = if keep_lexical {
                    Constraint {
                        operator: Iri::new_unchecked(ODRL_LTEQ),
                        ..c.clone()
                    }
                } else {
                    Constraint::retention(ODRL_LTEQ, seconds_to_duration(v))
                };
                n.title = c.title.clone();
                constraints.push(n);
            }
            // a lower-bound retention constraint with no cap: keep as asked
            None => constraints.push(c.clone()),
        }
    }
    if let (false, Some(v)) = (placed, cap) {
        constraints.push(Constraint::retention(ODRL_LTEQ, seconds_to_duration(v)));
    }
    Permission {
        assignee: perm.assignee.clone(),
        actions,
        target: perm.target.clone(),
        constraints,
    }
}

fn outcome_of(
    request: &OdrlRequest,
    granted: &[GrantedPermission],
    questions: &[PendingQuestion],
) -> Result<Outcome, EngineError> {
    if !questions.is_empty() {
        return Ok(Outcome::Pending);
    }
    if granted.is_empty() {
        return Ok(Outcome::Denied);
    }
    if granted.len() < request.permissions.len() {
        return Ok(Outcome::Partial);
    }
    for g in granted {
        let asked = &request.permissions[g.index];
        if g.permission.actions != asked.actions
            || g.permission.retention_bound()? != asked.retention_bound()?
        {
            return Ok(Outcome::Partial);
        }
    }
    Ok(Outcome::Granted)
}

/// Synthesizes the agreement for a granted or partial decision. The graph
/// has no blank nodes and depends only on the arguments.
pub fn build_agreement(
    d: &Decision,
    request: &OdrlRequest,
    owner: &Iri,
    now: DateTime<Utc>,
    uid: &str,
) -> Result<(OdrlAgreement, Graph), EngineError> {
    if !d.outcome.permits_cookie() {
        return Err(EngineError::NotGrantable(d.outcome));
    }
    if d.request_digest != request_digest(request) {
        return Err(EngineError::DigestMismatch);
    }
    let a = OdrlAgreement {
        node: OdrlAgreement::node_for(uid),
        uid: uid.to_string(),
        issued: now.to_rfc3339_opts(SecondsFormat::Secs, true),
        assigner: owner.clone(),
        request_digest: d.request_digest.clone(),
        permissions: d
            .granted_permissions
            .iter()
            .map(|g| (g.index, g.permission.clone()))
            .collect(),
    };
    let g = a.to_graph();
    Ok((a, g))
}

/// Applies the user's answers to a pending decision.
pub fn resolve_pending(
    d: &Decision,
    choices: &[UserChoice],
    request: &OdrlRequest,
    owner: &Iri,
    now: DateTime<Utc>,
    uid: &str,
) -> Result<Decision, EngineError> {
    if d.outcome != Outcome::Pending {
        return Err(EngineError::NotPending);
    }
    if d.request_digest != request_digest(request) {
        return Err(EngineError::DigestMismatch);
    }
    let asked: BTreeSet<usize> = d.pending_questions.iter().map(|q| q.permission).collect();
    let mut answered = BTreeSet::new();
    for c in choices {
        if !asked.contains(&c.permission) {
            return Err(EngineError::UnexpectedChoice(c.permission));
        }
        if !answered.insert(c.permission) {
            return Err(EngineError::DuplicateChoice(c.permission));
        }
    }
    if let Some(missing) = asked.difference(&answered).next() {
        return Err(EngineError::MissingChoice(*missing));
    }

    let mut granted = d.granted_permissions.clone();
    for c in choices.iter().filter(|c| c.decision == Choice::Allow) {
        let perm = &request.permissions[c.permission];
        let actions = match &c.narrowed_actions {
            Some(chosen) => {
                let only = ActionSet::Only(perm.actions.clone());
                if let Some(extra) = chosen.iter().find(|a| !only.permits(a)) {
                    return Err(EngineError::NotANarrowing {
                        permission: c.permission,
                        detail: format!("<{extra}> was not requested"),
                    });
                }
                ActionSet::Only(chosen.clone()).intersect(&perm.actions)
            }
            None => perm.actions.clone(),
        };
        if actions.is_empty() {
            continue;
        }
        let requested = perm.retention_bound()?;
        if let (Some(r), Some(n)) = (requested, c.narrowed_retention) {
            if n > r {
                return Err(EngineError::NotANarrowing {
                    permission: c.permission,
                    detail: format!("retention {n} s exceeds the requested {r} s"),
                });
            }
        }
        let cap = min_opt(requested, c.narrowed_retention);
        granted.push(GrantedPermission {
            index: c.permission,
            permission: narrow(perm, actions, cap, requested),
        });
    }
    granted.sort_by_key(|g| g.index);
    let outcome = outcome_of(request, &granted, &[])?;
    let mut out = Decision {
        request_digest: d.request_digest.clone(),
        outcome,
        granted_permissions: granted,
        pending_questions: Vec::new(),
        agreement: None,
    };
    if outcome.permits_cookie() {
        out.agreement = Some(build_agreement(&out, request, owner, now, uid)?.0);
    }
    Ok(out)
}
