//! Compliance of a DToU app policy with a preference profile.
//!
//! The profile is read in DToU terms: a purpose is permitted when its
//! governing rule allows it, the rule's actions bound the expected actions,
//! and the rule's maximum retention bounds the provided duration tag (the
//! largest ladder tag that fits inside it). Downstream uses are checked the
//! same way under their own purposes.

use serde::Serialize;

use super::EvalOptions;
use crate::policy::{DtouAppPolicy, PreferenceProfile, PurposeTaxonomy, RuleDecision, TagLadder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Purpose,
    Action,
    Duration,
    Downstream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub input_spec: usize,
    pub dimension: Dimension,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplianceResult {
    pub compliant: bool,
    pub violations: Vec<Violation>,
}

pub fn dtou_compliance(
    profile: &PreferenceProfile,
    app: &DtouAppPolicy,
    taxonomy: &PurposeTaxonomy,
) -> ComplianceResult {
    dtou_compliance_with(profile, app, taxonomy, &EvalOptions::default())
}

pub fn dtou_compliance_with(
    profile: &PreferenceProfile,
    app: &DtouAppPolicy,
    taxonomy: &PurposeTaxonomy,
    opts: &EvalOptions,
) -> ComplianceResult {
    let ladder = TagLadder::builtin();
    let top = ladder.rungs().len() - 1;
    let mut violations = Vec::new();
    for (i, spec) in app.input_specs.iter().enumerate() {
        let mut flag = |dimension, detail: String| {
            violations.push(Violation {
                input_spec: i,
                dimension,
                detail,
            })
        };
        for p in &spec.purposes {
            let g = profile.governing(p, taxonomy, opts.unknown_purpose_decision);
            if g.decision != RuleDecision::Allow {
                let by = match g.rule {
                    Some((k, _)) => format!("rule {k}"),
                    None => "the default".to_string(),
                };
                flag(
                    Dimension::Purpose,
                    format!("<{p}> is answered {} by {by}", g.decision),
                );
                continue;
            }
            for e in &spec.expects {
                if !g.actions().permits(e) {
                    flag(Dimension::Action, format!("<{e}> is not allowed for <{p}>"));
                }
            }
            let provided = match &spec.provide {
                Some(tag) => match ladder.position(tag) {
                    Some(k) => k,
                    None => {
                        flag(
                            Dimension::Duration,
                            format!("<{tag}> is not a known duration tag"),
                        );
                        continue;
                    }
                },
                None => top,
            };
            let ceiling = match g.max_retention() {
                None => Some(top),
                Some(m) => ladder.floor(m),
            };
            if ceiling.is_none_or(|c| provided > c) {
                let allowed = ceiling.map_or("nothing".to_string(), |c| {
                    format!("<{}>", ladder.rung(c).tag)
                });
                flag(
                    Dimension::Duration,
                    format!(
                        "<{}> exceeds {allowed} for <{p}>",
                        ladder.rung(provided).tag
                    ),
                );
            }
        }
        for ds in &spec.downstream {
            let g = profile.governing(&ds.purpose, taxonomy, opts.unknown_purpose_decision);
            if g.decision != RuleDecision::Allow {
                flag(
                    Dimension::Downstream,
                    format!(
                        "<{}> may not use the data for <{}>",
                        ds.app_name, ds.purpose
                    ),
                );
            }
        }
    }
    ComplianceResult {
        compliant: violations.is_empty(),
        violations,
    }
}
