//! ODRL request ⇄ DToU app policy.

use super::actions::{to_dpv_action, to_oac_action};
use super::duration::{duration_tag_for, TagLadder};
use super::{
    child_iri, Constraint, Downstream, DtouAppPolicy, InputSpec, OdrlRequest, Party, Permission,
    PolicyError,
};
use crate::rdf::vocab::*;
use crate::rdf::Iri;

/// `scheme://authority/` of `iri`, if it has an authority.
fn origin_of(iri: &Iri) -> Option<Iri> {
    let s = iri.as_str();
    let (scheme, rest) = s.split_once("://")?;
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    (end > 0).then(|| Iri::new_unchecked(format!("{scheme}://{}/", &rest[..end])))
}

/// One input spec per permission. Actions map to DPV, retention to the
/// smallest covering duration tag (unbounded without a retention
/// constraint), and the assignee becomes a downstream consumer for each
/// purpose.
pub fn translate_odrl_to_dtou(r: &OdrlRequest) -> Result<DtouAppPolicy, PolicyError> {
    let ladder = TagLadder::builtin();
    let mut input_specs = Vec::new();
    for (i, p) in r.permissions.iter().enumerate() {
        let purposes = p.purposes(i)?;
        if purposes.is_empty() {
            return Err(PolicyError::MissingPurpose(i));
        }
        let provide = match p.retention_constraint() {
            None => ladder.rungs().last().map(|r| r.tag.clone()),
            Some(c) if matches!(c.operator.as_str(), ODRL_EQ | ODRL_LTEQ) => {
                p.retention_bound()?.map(duration_tag_for)
            }
            Some(c) => {
                return Err(PolicyError::UnevaluableOperator {
                    permission: i,
                    dimension: "retention",
                    operator: c.operator.clone(),
                })
            }
        };
        let downstream = match &p.assignee {
            Some(a) => purposes
                .iter()
                .map(|pu| Downstream {
                    app_name: a.iri.clone(),
                    purpose: pu.clone(),
                })
                .collect(),
            None => Vec::new(),
        };
        input_specs.push(InputSpec {
            data: p.target.clone(),
            port_name: None,
            purposes: purposes.into_iter().collect(),
            expects: p.actions.iter().map(to_dpv_action).collect(),
            provide,
            downstream,
        });
    }
    Ok(DtouAppPolicy {
        node: child_iri(&r.node, "app-policy"),
        name: origin_of(&r.node).unwrap_or_else(|| r.node.clone()),
        input_specs,
    })
}

/// One permission per input spec. Retention is the tag's span with
/// operator `eq`; the unbounded tag (or no tag) yields no retention
/// constraint. The first downstream consumer becomes the assignee.
pub fn translate_dtou_to_odrl(p: &DtouAppPolicy) -> Result<OdrlRequest, PolicyError> {
    let ladder = TagLadder::builtin();
    let mut permissions = Vec::new();
    for (i, spec) in p.input_specs.iter().enumerate() {
        if spec.expects.is_empty() {
            return Err(PolicyError::ActionsRequired(i));
        }
        let mut constraints: Vec<Constraint> = spec
            .purposes
            .iter()
            .cloned()
            .map(Constraint::purpose)
            .collect();
        if let Some(tag) = &spec.provide {
            let k = ladder
                .position(tag)
                .ok_or_else(|| PolicyError::UnknownDurationTag(tag.clone()))?;
            if let Some(lexical) = &ladder.rung(k).lexical {
                constraints.push(Constraint::retention(ODRL_EQ, lexical.clone()));
            }
        }
        permissions.push(Permission {
            assignee: spec
                .downstream
                .first()
                .map(|d| Party::bare(d.app_name.clone())),
            actions: spec.expects.iter().map(to_oac_action).collect(),
            target: spec.data.clone(),
            constraints,
        });
    }
    Ok(OdrlRequest {
        node: child_iri(&p.node, "request"),
        uid: p.node.to_string(),
        description: None,
        creator: None,
        issued: None,
        profile: Some(Iri::new_unchecked(OAC)),
        permissions,
    })
}
